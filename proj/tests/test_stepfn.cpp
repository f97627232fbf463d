#include <catch_amalgamated.hpp>

#include <sstream>

#include <frontlab/random.hpp>
#include <frontlab/stepfn.hpp>

using namespace frontlab;
using Catch::Approx;

namespace {

StepFunction random_step(Rng& rng, bool allow_inf) {
  std::size_t n = 1 + rng() % 12;
  std::vector<double> b{0.0}, v;
  for (std::size_t i = 1; i < n; ++i) b.push_back(b.back() + 0.1 + 3 * uniform01(rng));
  double level = (rng() % 3 == 0) ? 0.0 : 2 * uniform01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back(level);
    level += (rng() % 4 == 0) ? 0.0 : 0.05 + 2 * uniform01(rng);
  }
  if (allow_inf && rng() % 5 == 0) v.back() = kInf;
  return StepFunction(b, v);
}

}  // namespace

TEST_CASE("evaluation is right-continuous") {
  StepFunction f({0, 1, 2.5}, {0, 3, 4});
  CHECK(f(0) == 0);
  CHECK(f(0.999) == 0);
  CHECK(f(1) == 3);
  CHECK(f.left_limit(1) == 0);
  CHECK(f(2.5) == 4);
  CHECK(f(100) == 4);
  CHECK(f.is_jump(1));
  CHECK_FALSE(f.is_jump(1.5));
  CHECK_THROWS_AS(f(-1), std::domain_error);
}

TEST_CASE("invalid representations are rejected") {
  CHECK_THROWS_AS(StepFunction({0, 1}, {2, 1}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({0, 1, 1}, {0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(StepFunction({0}, {-1}), std::invalid_argument);
}

TEST_CASE("explosion is absorbing") {
  StepFunction f({0, 1, 2}, {0, 1, kInf});
  CHECK(f.explosion_time() == 2);
  CHECK(std::isinf(f(5)));
}

TEST_CASE("inverse of a fine line is the halved line") {
  std::vector<double> b, v;
  for (int i = 0; i <= 1000; ++i) {
    b.push_back(i * 1e-3);
    v.push_back(2 * i * 1e-3);
  }
  auto g = invert(StepFunction(b, v));
  for (int i = 1; i < 2000; ++i) {
    double t = (i + 0.5) * 1e-3;
    CHECK(g(t) == Approx(t / 2).margin(1e-3));
  }
}

TEST_CASE("single jump inverse matches the sup formula") {
  StepFunction f({0, 1}, {0, 3});
  auto g = invert(f);
  // The sup formula is left-continuous: 0 at t = 0 and 1 on (0, 3]. The
  // normalized inverse differs only at the values 0 and 3 of f.
  CHECK(invert_sup(f, 0) == 0);
  CHECK(g(0) == 1);
  for (double t : {1e-9, 0.5, 1.0, 2.0, 2.999}) {
    CHECK(invert_sup(f, t) == 1);
    CHECK(g(t) == 1);
  }
  CHECK(invert_sup(f, 3) == 1);
  CHECK(std::isinf(g(3)));
  CHECK(std::isinf(invert_sup(f, 3.0001)));
  CHECK(std::isinf(g(3.5)));
}

TEST_CASE("invert is an involution on random step functions") {
  Rng rng = make_rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    auto f = random_step(rng, true);
    auto gg = invert(invert(f));
    CHECK(gg == f);
    // Literal sup formula agrees with the normalized inverse off the value set.
    for (int k = 0; k < 10; ++k) {
      double t = 10 * uniform01(rng);
      bool is_value = std::find(f.values().begin(), f.values().end(), t) != f.values().end();
      if (!is_value) CHECK(invert_sup(f, t) == invert(f)(t));
    }
  }
}

TEST_CASE("completed graph of a constant") {
  auto g = completed_graph(StepFunction::constant(2), 3);
  REQUIRE(g.segments.size() == 2);
  CHECK(g.segments[0].vertical());
  CHECK(g.segments[0].to == Point{0, 2});
  CHECK(g.segments[1].horizontal());
  CHECK(g.end() == Point{3, 2});
}

TEST_CASE("completed graph of a single jump has three pieces") {
  auto g = completed_graph(StepFunction({0, 1}, {0, 3}), 2);
  REQUIRE(g.segments.size() == 3);
  CHECK(g.segments[0] == Segment{{0, 0}, {1, 0}});
  CHECK(g.segments[1] == Segment{{1, 0}, {1, 3}});
  CHECK(g.segments[2] == Segment{{1, 3}, {2, 3}});
}

TEST_CASE("completed graph endpoints and exploded paths") {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_step(rng, false);
    double t0 = 20 * uniform01(rng);
    auto g = completed_graph(f, t0, false);
    CHECK(g.start() == Point{0, f(0)});
    CHECK(g.end() == Point{t0, f(t0)});
  }
  CHECK_THROWS_AS(completed_graph(StepFunction({0, 1}, {0, kInf}), 2), std::domain_error);
}

TEST_CASE("completed graph of the inverse is the transposed graph") {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = random_step(rng, false);
    double top = f.values().back();
    if (top <= 0) continue;
    // The inverse is +inf from the top level on, so compare just below it.
    double level = top * (1 - 1e-9);
    auto gt = completed_graph(f, f.breakpoints().back()).clipped_x(level).transposed().canonical();
    auto h = completed_graph(invert(f), level).canonical();
    CHECK(gt.end().x == Approx(h.end().x));
    CHECK(gt.end().t == Approx(h.end().t));
    CHECK(m1_distance(gt, h).lower < 1e-6);
  }
}

TEST_CASE("M1 distance of equal paths is zero") {
  StepFunction f({0, 1, 2}, {0, 1, 4});
  auto d = m1_distance(f, f, 3);
  CHECK(d.upper == Approx(0).margin(1e-12));
  CHECK(d.lower == Approx(0).margin(1e-12));
}

TEST_CASE("M1 distance ignores a jump versus a steep ramp") {
  StepFunction jump({0, 1}, {0, 1});
  auto ramp = [](double delta) {
    std::vector<double> b{0}, v{0};
    for (int i = 1; i <= 50; ++i) {
      b.push_back(1 + delta * (i - 1) / 50.0);
      v.push_back(i / 50.0);
    }
    return StepFunction(b, v);
  };
  double d1 = m1_distance(jump, ramp(0.1), 2).upper;
  double d2 = m1_distance(jump, ramp(0.01), 2).upper;
  CHECK(d2 < d1);
  CHECK(d2 < 0.05);
}

TEST_CASE("M1 lower bound never exceeds the upper bound") {
  Rng rng = make_rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    auto f = random_step(rng, false);
    auto g = random_step(rng, false);
    auto d = m1_distance(f, g, 10);
    CHECK(d.lower <= d.upper);
    CHECK(d.lower >= 0);
  }
}

TEST_CASE("step function CSV round trip") {
  StepFunction f({0, 0.5, 2}, {0, 1.25, kInf}, 3);
  std::stringstream s;
  write_csv(s, f);
  auto g = read_step_function_csv(s);
  CHECK(g == f);
  CHECK(g.domain_end() == 3);
}
