#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include <frontlab/initcond.hpp>
#include <frontlab/simulate.hpp>

using namespace frontlab;

namespace {

InitialCondition from_counts(std::vector<int> counts, std::size_t pad = 200) {
  counts.resize(counts.size() + pad, 0);
  return InitialCondition(std::move(counts), CustomDescriptor{"test"});
}

SimulationOptions options(double horizon, std::uint64_t seed, std::vector<double> checkpoints = {}) {
  SimulationOptions o;
  o.horizon = horizon;
  o.seed = seed;
  o.checkpoints = std::move(checkpoints);
  return o;
}

std::vector<double> grid(double horizon, int n) {
  std::vector<double> out;
  for (int k = 1; k <= n; ++k) out.push_back(horizon * k / n);
  return out;
}

}  // namespace

TEST_CASE("k is the first return of the cumulative count to the diagonal") {
  std::vector<long long> a{1, 0, 0};
  CHECK(compute_k(a) == 1);
  std::vector<long long> b{2, 0, 1, 0};
  CHECK(compute_k(b) == 2);
  std::vector<long long> c{2, 1, 1, 1, 1};
  CHECK_FALSE(compute_k(c).has_value());
  std::vector<long long> d{3, 0, 0, 1, 0};
  CHECK(compute_k(d) == 3);
}

TEST_CASE("single particle is absorbed with k = 1") {
  auto ic = from_counts({1});
  std::size_t absorbed_runs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Simulation sim(ic, {TrajectorySpec::frictionless()}, options(1000, seed));
    bool seen = false;
    sim.observer = [&](const Simulation& s) {
      if (s.q(0) > 0 && !seen) {
        seen = true;
        CHECK(s.q(0) == 1);
        CHECK(s.absorbed(0) == 1);
        CHECK(s.position(0) == 0);
      }
    };
    auto r = sim.run();
    CHECK(r.absorbers[0].final_q <= 1);
    absorbed_runs += seen;
  }
  CHECK(absorbed_runs >= 15);
}

TEST_CASE("flux condition holds after every event") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ic = generate_iid("geometric", 1, 3000, seed);
    Simulation sim(ic, {TrajectorySpec::frictionless()}, options(200, seed));
    std::size_t bad = 0, events = 0;
    sim.observer = [&](const Simulation& s) {
      ++events;
      bad += s.absorbed(0) != s.q(0);
    };
    auto r = sim.run();
    CHECK(bad == 0);
    CHECK(events > 1000);
    CHECK(r.absorbers[0].final_n == r.absorbers[0].final_q);
  }
}

TEST_CASE("alive particles stay strictly ahead of the front") {
  auto ic = generate_iid("poisson", 1, 2000, 4);
  Simulation sim(ic, {TrajectorySpec::frictionless(), TrajectorySpec::mdla()}, options(100, 4));
  std::size_t bad = 0;
  sim.observer = [&](const Simulation& s) {
    for (std::size_t a = 0; a < 2; ++a)
      for (long long x = s.q(a) - 3; x <= s.q(a); ++x) bad += s.occupancy(a, x) != 0;
  };
  sim.run();
  CHECK(bad == 0);
}

TEST_CASE("mdla front stays behind the frictionless front under shared clocks") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ic = generate_iid("geometric", 1, 4000, 100 + seed);
    Simulation sim(ic, {TrajectorySpec::frictionless(), TrajectorySpec::mdla()}, options(300, seed));
    std::size_t bad = 0;
    sim.observer = [&](const Simulation& s) { bad += s.q(1) > s.q(0); };
    sim.run();
    CHECK(bad == 0);
  }
}

TEST_CASE("pushed front absorbs one particle and stacks the rest") {
  auto ic = from_counts({3});
  Simulation sim(ic, {TrajectorySpec::pushed()}, options(1000, 3));
  long long prev1 = 3, prev2 = 0, prev_q = 0;
  bool checked = false;
  sim.observer = [&](const Simulation& s) {
    if (!checked && s.q(0) == 1 && prev_q == 0) {
      checked = true;
      CHECK(s.absorbed(0) == 1);
      CHECK(s.occupancy(0, 1) == 0);
      CHECK(s.occupancy(0, 2) == prev2 + prev1 - 1);
    }
    CHECK(s.absorbed(0) == s.q(0));
    long long alive = 0;
    for (long long x = s.q(0) + 1; x <= s.q(0) + 400; ++x) alive += s.occupancy(0, x);
    CHECK(alive + s.absorbed(0) == 3);
    prev1 = s.occupancy(0, s.q(0) + 1);
    prev2 = s.occupancy(0, s.q(0) + 2);
    prev_q = s.q(0);
  };
  sim.run();
  CHECK(checked);
}

TEST_CASE("pushed fronts refuse decomposition snapshots") {
  auto ic = from_counts({1, 1});
  Simulation sim(ic, {TrajectorySpec::pushed()}, options(1, 1));
  CHECK_THROWS_AS(sim.snapshot(0), std::logic_error);
}

TEST_CASE("decomposition identity at checkpoints") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ic = generate_iid("geometric", 1, 4000, 7 + seed);
    auto cps = grid(300, 20);
    cps.insert(cps.begin(), 0.0);
    std::vector<TrajectorySpec> specs{TrajectorySpec::frictionless(), TrajectorySpec::mdla(),
                                      TrajectorySpec::linear(300, 40, 0.1),
                                      TrajectorySpec::truncated_upper(300, 40, 0.1, 0.8, 0.05),
                                      TrajectorySpec::truncated_lower(300, 40, 0.1, 0.8, 0.05)};
    for (bool fast : {false, true}) {
      auto o = options(300, seed, cps);
      o.lazy_dead = fast;
      o.far_field = fast;
      auto r = run_simulation(ic, specs, o);
      for (const auto& a : r.absorbers) {
        REQUIRE(a.snapshots.size() == cps.size());
        for (const auto& s : a.snapshots) CHECK(s.residual() == 0);
        if (a.spec.is_front()) {
          CHECK(a.snapshots.front().M == 0);
          CHECK(a.snapshots.front().G == 0);
          CHECK(a.snapshots.front().N == 0);
        }
      }
    }
  }
}

TEST_CASE("boundary at zero absorbs exactly the walks that touched it") {
  auto ic = generate_iid("poisson", 1, 300, 12);
  auto o = options(50, 12, {50});
  Simulation sim(ic, {TrajectorySpec::custom_path(StepFunction::constant(0))}, o);
  std::vector<char> touched(sim.particle_count(), 0);
  sim.observer = [&](const Simulation& s) {
    for (std::size_t p = 0; p < s.particle_count(); ++p) touched[p] |= s.position(p) <= 0;
  };
  auto r = sim.run();
  long long n = 0, g = 0;
  for (std::size_t p = 0; p < touched.size(); ++p) {
    n += touched[p];
    g += touched[p] && sim.position(p) > 0;
  }
  REQUIRE(r.absorbers[0].snapshots.size() == 1);
  const auto& s = r.absorbers[0].snapshots[0];
  CHECK(s.N == n);
  CHECK(s.G == g);
  CHECK(n > 0);
}

TEST_CASE("linear trajectories follow the integer formulas") {
  auto lin = TrajectorySpec::linear(50, 20, 0.3);
  auto up = TrajectorySpec::truncated_upper(50, 20, 0.3, 0.5, 0.01);
  auto lo = TrajectorySpec::truncated_lower(50, 20, 0.3, 0.5, 0.01);
  CHECK(up.truncation() == 10);
  auto pl = deterministic_path(lin, 100), pu = deterministic_path(up, 100), pw = deterministic_path(lo, 100);
  for (double t = 0.013; t < 100; t += 0.37) {
    long long L = 20 + static_cast<long long>(std::floor(0.3 * (t - 50)));
    CHECK(pl.at(t) == L);
    CHECK(pu.at(t) == std::max(L, 10LL));
    CHECK(pw.at(t) == (L >= 10 ? std::max(L, 0LL) : 0));
  }
  CHECK_THROWS_AS(TrajectorySpec::linear(1, 1, 0), std::invalid_argument);
}

TEST_CASE("monotonicity probe with Q equal to the front") {
  auto ic = generate_iid("geometric", 1, 3000, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, options(200, seed));
    auto rep = monotonicity_probe(ic, r.absorbers[0].front_path(200), 200, seed);
    CHECK(rep.upper_hypothesis_held);
    CHECK(rep.lower_hypothesis_held);
    CHECK(rep.violations == 0);
  }
}

TEST_CASE("monotonicity probe with an offset front") {
  auto ic = generate_iid("geometric", 1, 3000, 5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, options(200, seed));
    const auto& path = r.absorbers[0].front_path(200);
    std::vector<double> v = path.values();
    for (double& x : v) x += 5;
    auto rep = monotonicity_probe(ic, StepFunction(path.breakpoints(), v, 200), 200, seed);
    CHECK(rep.violations == 0);
  }
}

TEST_CASE("monotonicity probe with Q identically zero") {
  auto ic = generate_iid("geometric", 1, 1000, 6);
  auto rep = monotonicity_probe(ic, StepFunction::constant(0), 100, 6);
  CHECK(rep.lower_hypothesis_held);
  CHECK_FALSE(rep.upper_hypothesis_held);
  CHECK(rep.violations == 0);
}

TEST_CASE("lower comparison clause fails for a boundary that moves on its own") {
  // One particle at site 1 and Q = 1{t >= 1}. If the particle has not jumped by
  // t = 1, then N^Q(1) = 1 = Q(1) while r(1) = 0 < Q(1).
  auto ic = from_counts({1});
  StepFunction q({0, 1}, {0, 1});
  std::size_t violating = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rep = monotonicity_probe(ic, q, 2, seed);
    if (rep.violations > 0) {
      ++violating;
      CHECK(rep.first_violation.rfind("lower", 0) == 0);
      CHECK(rep.upper_violations == 0);
      CHECK(rep.lower_violations == rep.violations);
      CHECK(rep.first_violation_time >= 1);
    }
  }
  CHECK(violating > 0);
}

TEST_CASE("prescribed boundaries do not perturb the front's randomness") {
  auto ic = generate_iid("geometric", 1, 3000, 9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto solo = run_simulation(ic, {TrajectorySpec::frictionless()}, options(200, seed));
    auto pair = run_simulation(ic, {TrajectorySpec::frictionless(), TrajectorySpec::linear(200, 30, 0.2)},
                               options(200, seed));
    CHECK(solo.absorbers[0].path == pair.absorbers[0].path);
  }
}

TEST_CASE("runs are deterministic in the seed") {
  auto ic = generate_iid("geometric", 1, 1000, 1);
  auto log = [&](std::uint64_t seed) {
    std::ostringstream s;
    auto o = options(50, seed);
    o.event_log = &s;
    run_simulation(ic, {TrajectorySpec::frictionless()}, o);
    return s.str();
  };
  CHECK(log(4) == log(4));
  CHECK(log(4) != log(5));
}

TEST_CASE("bond crossings add up to the jumps in each unit interval") {
  auto ic = generate_iid("geometric", 1, 500, 3);
  std::ostringstream s;
  auto o = options(20, 3);
  o.record_bond_crossings = true;
  o.event_log = &s;
  auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, o);
  // Recount from the event log.
  std::map<std::pair<long long, long long>, long long> bonds;
  std::map<long long, long long> per_interval;
  std::istringstream in(s.str());
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j["type"] != "jump") continue;
    auto i = static_cast<long long>(std::floor(j["t"].get<double>()));
    long long from = j["from"], to = j["to"];
    ++bonds[{i, std::min(from, to)}];
    ++per_interval[i];
  }
  CHECK(bonds == r.bond_crossings);
  CHECK(per_interval == r.jumps_per_interval);
  long long total = 0;
  for (const auto& [i, n] : per_interval) {
    long long sum = 0;
    for (const auto& [key, c] : r.bond_crossings)
      if (key.first == i) sum += c;
    CHECK(sum == n);
    total += n;
  }
  CHECK(total == static_cast<long long>(r.jumps));
}

TEST_CASE("a dense start explodes at the window edge") {
  std::vector<int> counts(300, 2);
  InitialCondition ic(counts, CustomDescriptor{"dense"});
  auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, options(1000, 1));
  CHECK(r.exploded);
  CHECK(std::isfinite(r.explosion_time));
  auto path = r.absorbers[0].front_path(1000);
  CHECK(path.explosion_time() == r.explosion_time);
}

TEST_CASE("hitting times invert the front path") {
  auto ic = generate_iid("geometric", 1, 3000, 8);
  auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, options(300, 8));
  const auto& a = r.absorbers[0];
  auto path = a.front_path(300);
  REQUIRE(!a.hitting.empty());
  for (const auto& [level, t] : a.hitting) {
    CHECK(path(t) > static_cast<double>(level));
    CHECK(path.left_limit(t) <= static_cast<double>(level));
  }
}

TEST_CASE("checkpoint table export") {
  auto ic = generate_iid("geometric", 1, 500, 8);
  auto r = run_simulation(ic, {TrajectorySpec::frictionless()}, options(10, 8, {5, 10}));
  std::ostringstream s, h;
  write_snapshots_csv(s, r.absorbers[0]);
  write_hitting_csv(h, r.absorbers[0]);
  CHECK(s.str().find("t,r,N,F,M,G") != std::string::npos);
  CHECK(h.str().find("level,time") != std::string::npos);
}
