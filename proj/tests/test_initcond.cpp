#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <frontlab/initcond.hpp>

using namespace frontlab;
using Catch::Approx;

TEST_CASE("geometric mean-one occupation has mean 1 and variance 2") {
  const long long n = 1000000;
  auto ic = generate_iid("geometric", 1.0, n, 42);
  double mean = static_cast<double>(ic.total_particles()) / n;
  CHECK(std::abs(mean - 1.0) <= 3 * std::sqrt(2.0 / n));
  const auto& d = std::get<IidDescriptor>(ic.descriptor());
  CHECK(d.rho == 1.0);
  CHECK(d.sigma2 == 2.0);
  double m2 = 0;
  for (int c : ic.counts()) m2 += static_cast<double>(c) * c;
  CHECK(m2 / n - mean * mean == Approx(2.0).epsilon(0.02));
}

TEST_CASE("poisson counts are nonnegative and the descriptor records rho") {
  auto ic = generate_iid("poisson", 0.5, 10000, 3);
  for (int c : ic.counts()) CHECK(c >= 0);
  CHECK(std::get<IidDescriptor>(ic.descriptor()).rho == 0.5);
  CHECK(std::get<IidDescriptor>(ic.descriptor()).sigma2 == 0.5);
}

TEST_CASE("bernoulli mixture takes values 0 and 2") {
  auto ic = generate_iid("bernoulli-mixture", 1.0, 10000, 5);
  for (int c : ic.counts()) CHECK((c == 0 || c == 2));
  CHECK(std::get<IidDescriptor>(ic.descriptor()).sigma2 == 1.0);
}

TEST_CASE("generation is deterministic in the seed") {
  CHECK(generate_iid("geometric", 1, 5000, 9).counts() == generate_iid("geometric", 1, 5000, 9).counts());
  CHECK(generate_iid("geometric", 1, 5000, 9).counts() != generate_iid("geometric", 1, 5000, 10).counts());
}

TEST_CASE("invalid i.i.d. requests are rejected") {
  CHECK_THROWS_AS(generate_iid("geometric", 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_iid("geometric", -1, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_iid("bernoulli-mixture", 3, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_iid("cauchy", 1, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_iid("poisson", 1, 0, 1), std::invalid_argument);
}

TEST_CASE("F telescopes over the window") {
  auto ic = generate_iid("geometric", 1, 2000, 17);
  CHECK(ic.cumulative_fluctuation(0) == 0);
  for (long long x = 1; x <= ic.window(); ++x)
    CHECK(ic.cumulative_fluctuation(x) - ic.cumulative_fluctuation(x - 1) == 1 - ic.count(x));
  Rng rng = make_rng(1);
  for (int k = 0; k < 200; ++k) {
    long long a = static_cast<long long>(rng() % 2001), b = static_cast<long long>(rng() % 2001);
    if (a > b) std::swap(a, b);
    long long s = 0;
    for (long long y = a + 1; y <= b; ++y) s += 1 - ic.count(y);
    CHECK(ic.cumulative_fluctuation(b) - ic.cumulative_fluctuation(a) == s);
  }
}

TEST_CASE("doubling the window shrinks the mean standard error") {
  // Average over independent windows; the spread of window means for 4n sites
  // should be about half that for n sites.
  auto spread = [](long long n) {
    std::vector<double> means;
    for (std::uint64_t s = 0; s < 200; ++s)
      means.push_back(static_cast<double>(generate_iid("geometric", 1, n, 1000 + s).total_particles()) / n);
    double m = 0, v = 0;
    for (double x : means) m += x;
    m /= means.size();
    for (double x : means) v += (x - m) * (x - m);
    return std::sqrt(v / (means.size() - 1));
  };
  double s1 = spread(2000), s4 = spread(8000);
  CHECK(s1 / s4 == Approx(2.0).epsilon(0.25));
}

TEST_CASE("sine fluctuation is the floored sine") {
  for (double eps : {0.1, 0.03, 0.5}) {
    for (double gamma : {0.3, 0.5, 0.8}) {
      auto ic = generate_sine(eps, gamma, 3000);
      for (long long x = 0; x <= ic.window(); ++x)
        CHECK(ic.cumulative_fluctuation(x) ==
              static_cast<long long>(std::floor(std::pow(eps, -gamma) * std::sin(eps * x))));
      for (int c : ic.counts()) CHECK(c >= 0);
    }
  }
}

TEST_CASE("sine fluctuation at a hand-computed point") {
  // floor(10^0.5 * sin(1.5)) = floor(3.1623 * 0.99749) = 3
  CHECK(generate_sine(0.1, 0.5, 20).cumulative_fluctuation(15) == 3);
}

TEST_CASE("rescaled sine fluctuation stays close to sin") {
  for (double eps : {0.1, 0.01, 0.001}) {
    double gamma = 0.5;
    long long window = static_cast<long long>(7 / eps);
    auto ic = generate_sine(eps, gamma, window);
    double worst = 0;
    for (long long x = 0; x <= window; ++x) {
      double xi = eps * x;
      worst = std::max(worst, std::abs(std::pow(eps, gamma) * ic.cumulative_fluctuation(x) - std::sin(xi)));
    }
    CHECK(worst <= std::pow(eps, gamma) + std::pow(eps, 1 - gamma));
    CHECK(worst <= std::pow(eps, gamma) + eps);
  }
}

TEST_CASE("sine shape exponent ratio is bounded") {
  // The floor costs up to one unit, so the exact bound is (1 + 2^{1-gamma}).
  for (double gamma : {0.3, 0.5, 0.7}) {
    auto ic = generate_sine(0.05, gamma, 400);
    double m = shape_exponent_max_ratio(ic, gamma, 400);
    CHECK(m <= 1 + std::pow(2.0, 1 - gamma));
    auto rep = shape_exponent_check(ic, gamma, 20000, 3);
    CHECK(rep.max_ratio <= m + 1e-12);
  }
}

TEST_CASE("i.i.d. shape ratios have a decaying tail") {
  auto ic = generate_iid("geometric", 1, 100000, 21);
  auto rep = shape_exponent_check(ic, 0.5, 100000, 4);
  CHECK(rep.pairs == 100000);
  for (std::size_t i = 1; i < rep.levels.size(); ++i)
    if (rep.levels[i] > 3) CHECK(rep.survival[i] <= rep.survival[i - 1]);
  CHECK(rep.survival.back() < rep.survival[6]);
}

TEST_CASE("coincident points give a zero increment") {
  auto ic = generate_iid("geometric", 1, 100, 2);
  for (long long x = 0; x <= 100; ++x) CHECK(ic.cumulative_fluctuation(x) - ic.cumulative_fluctuation(x) == 0);
  auto rep = shape_exponent_check(ic, 0.5, 1000, 1);
  for (double r : rep.ratios) CHECK(std::isfinite(r));
}

TEST_CASE("window extension of F") {
  auto ic = generate_iid("poisson", 1, 50, 8);
  CHECK(ic.cumulative_fluctuation(-3) == -3);
  CHECK(ic.cumulative_fluctuation(60) == ic.cumulative_fluctuation(50) + 10);
  CHECK(ic.count(0) == 0);
  CHECK(ic.count(51) == 0);
}

TEST_CASE("descriptor strings build initial conditions") {
  CHECK(make_initial_condition("geometric:mean=1", 100, 3).counts() == generate_iid("geometric", 1, 100, 3).counts());
  CHECK(std::holds_alternative<SineDescriptor>(make_initial_condition("sine:eps=0.1,gamma=0.5", 50, 1).descriptor()));
  CHECK_THROWS_AS(make_initial_condition("poisson", 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_initial_condition("sine:eps=2,gamma=0.5", 10, 1), std::invalid_argument);
}

TEST_CASE("suggested window grows with the horizon") {
  long long a = suggest_window(100, 100, 1, 1e-6);
  long long b = suggest_window(100, 10000, 1, 1e-6);
  CHECK(a > 100);
  CHECK(b > a);
}
