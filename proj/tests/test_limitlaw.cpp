#include <catch_amalgamated.hpp>

#include <sstream>

#include <frontlab/limitlaw.hpp>
#include <frontlab/stats.hpp>

using namespace frontlab;
using Catch::Approx;

namespace {

// 2 sigma int_0^1 [B]_+ on a grid of n cells, plain left-point Riemann sum.
double hit_at_one_riemann(double sigma, std::size_t n, Rng& rng) {
  double dxi = 1.0 / static_cast<double>(n);
  std::normal_distribution<double> z(0.0, std::sqrt(dxi));
  double b = 0, s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s += std::max(b, 0.0) * dxi;
    b += z(rng);
  }
  return 2 * sigma * s;
}

// Seeds whose path reaches level t before xi = 20, so the stored path stays small.
std::vector<std::uint64_t> moderate_seeds(double sigma, double t, std::size_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 0; out.size() < n; ++s)
    if (std::isfinite(sample_limit_front_value(sigma, t, 1e-3, s, 20.0))) out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("hit starts at zero and never decreases") {
  for (std::uint64_t seed : moderate_seeds(1.0, 1.0, 50)) {
    auto p = sample_limit_front(1.0, 2.0, 1e-3, seed);
    CHECK(p.hit.front() == 0);
    for (std::size_t i = 1; i < p.hit.size(); ++i) CHECK(p.hit[i] >= p.hit[i - 1]);
    CHECK(p.hit.back() > 1.0);
  }
}

TEST_CASE("hit is flat over negative excursions and the front jumps across them") {
  auto p = sample_limit_front(std::sqrt(2.0), 4.0, 1e-3, moderate_seeds(std::sqrt(2.0), 3.0, 1)[0], 3.0);
  std::size_t flat_cells = 0;
  for (std::size_t i = 1; i < p.hit.size(); ++i) {
    if (p.brownian[i - 1] <= 0 && p.brownian[i] <= 0) {
      CHECK(p.hit[i] == p.hit[i - 1]);
      ++flat_cells;
    }
    if (p.brownian[i - 1] > 0 && p.brownian[i] > 0) CHECK(p.hit[i] > p.hit[i - 1]);
  }
  REQUIRE(flat_cells > 10);
  // At the level of each flat stretch the front jumps by the length of the stretch.
  for (std::size_t i = 1; i + 1 < p.hit.size(); ++i) {
    if (p.hit[i] == p.hit[i - 1] && p.hit[i + 1] > p.hit[i] && p.hit[i] > 0) {
      std::size_t j = i;
      while (j > 0 && p.hit[j - 1] == p.hit[i]) --j;
      double level = p.hit[i];
      if (level >= p.hit.back()) break;
      CHECK(p.frnt.left_limit(level) <= p.dxi * j + 1e-12);
      CHECK(p.frnt(level) == Approx(p.dxi * (i + 1)));
    }
  }
}

TEST_CASE("front is the inverse of hit") {
  auto p = sample_limit_front(1.0, 2.0, 1e-3, moderate_seeds(1.0, 1.0, 1)[0]);
  CHECK(invert(p.frnt) == p.hit_step());
}

TEST_CASE("mean of Hit at one agrees with a finer grid") {
  const std::size_t n = 10000;
  std::vector<double> coarse, fine;
  coarse.reserve(n);
  for (std::uint64_t s = 0; s < n; ++s) {
    auto p = sample_limit_front(1.0, 1.0, 1e-3, s, -1.0);
    coarse.push_back(p.hit[1000]);
  }
  Rng rng = make_rng(999);
  for (std::size_t s = 0; s < n; ++s) fine.push_back(hit_at_one_riemann(1.0, 10000, rng));
  auto a = mean_se(coarse), b = mean_se(fine);
  CHECK(std::abs(a.mean - b.mean) <= 3 * std::hypot(a.se, b.se));
  // E int_0^1 B_+ = int_0^1 sqrt(s / (2 pi)) ds.
  double exact = 2 * (2.0 / 3.0) / std::sqrt(2 * M_PI);
  CHECK(std::abs(a.mean - exact) <= 3 * a.se);
}

TEST_CASE("refinement changes hit by order dxi") {
  const double dxi = 1e-3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = sample_limit_front(1.0, 1.0, dxi, seed, -1.0);
    Rng rng = make_rng(seed, 77);
    auto fine_b = refine_brownian(p.brownian, dxi, rng);
    auto fine = hit_from_brownian(fine_b, dxi / 2, 1.0);
    double worst = 0;
    for (std::size_t i = 0; i < p.hit.size(); ++i) worst = std::max(worst, std::abs(fine[2 * i] - p.hit[i]));
    CHECK(worst <= 5 * dxi);
  }
}

TEST_CASE("streaming front value equals the path version") {
  for (std::uint64_t seed : moderate_seeds(std::sqrt(2.0), 1.0, 40)) {
    auto p = sample_limit_front(std::sqrt(2.0), 1.0, 1e-3, seed, 1.0);
    CHECK(sample_limit_front_value(std::sqrt(2.0), 1.0, 1e-3, seed) == p.frnt(1.0));
  }
  CHECK(std::isinf(sample_limit_front_value(1.0, 1e9, 1e-2, 1, 5.0)));
  // Seeds rejected above stop at the cap instead of running away.
  std::size_t capped = 0;
  for (std::uint64_t s = 0; s < 200; ++s) capped += std::isinf(sample_limit_front_value(std::sqrt(2.0), 1.0, 1e-3, s, 20.0));
  CHECK(capped > 0);
}

TEST_CASE("invalid limit parameters") {
  CHECK_THROWS_AS(sample_limit_front(0, 1, 1e-3, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_limit_front(1, 1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_limit_front(1, 1, 1e-2, 1, 1e12, 2), std::runtime_error);
}

TEST_CASE("sine hitting function and its inverse") {
  CHECK(hit_sine(M_PI / 2) == Approx(2));
  CHECK(hit_sine(M_PI) == Approx(4));
  CHECK(hit_sine(1.5 * M_PI) == Approx(4));
  CHECK(deterministic_front(2) == Approx(M_PI / 2));
  CHECK(deterministic_front(1) == Approx(M_PI / 3));
  CHECK(deterministic_front(4 - 1e-9) == Approx(M_PI).margin(1e-4));
  CHECK(deterministic_front(4) == Approx(2 * M_PI));
  for (double t = 0.05; t < 12; t += 0.1) CHECK(hit_sine(deterministic_front(t)) == Approx(t).margin(1e-9));
}

TEST_CASE("limit path export") {
  std::ostringstream s;
  sample_limit_front(1.0, 0.01, 1e-3, 1, -1.0).write_csv(s);
  CHECK(s.str().find("xi,B,hit") != std::string::npos);
}
