#pragma once

// Ensemble runs and the quantitative checks built on them: regime
// predicates, exponent fits, phase reports, limit-law comparison, the sine
// deterministic limit, boundary-layer means and the heuristic ansatz.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fast_front.hpp"
#include "initcond.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "limitlaw.hpp"
#include "random.hpp"
#include "simulate.hpp"
#include "stats.hpp"
#include "stefan.hpp"
#include "stepfn.hpp"

namespace frontlab {

using json = nlohmann::json;

/// Raised when a statistical procedure gets fewer samples than it needs.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- regimes ----------------------------------------------------------------

struct RegimeCheck {
  bool ok = true;
  std::vector<std::string> failed;

  void require(bool cond, std::string what) {
    if (cond) return;
    ok = false;
    failed.push_back(std::move(what));
  }

  std::string describe() const {
    std::string s;
    for (const auto& f : failed) s += (s.empty() ? "" : "; ") + f;
    return s;
  }
};

class RegimeViolation : public std::runtime_error {
 public:
  RegimeViolation(const std::string& region, const RegimeCheck& check)
      : std::runtime_error("parameters outside " + region + ": " + check.describe()), failed(check.failed) {}
  std::vector<std::string> failed;
};

struct RegimeSpec {
  double eps = 0.01;
  double a = 0.1;
  double gamma = 0.5;
  double gamma_prime = 0.86;

  /// Upper bound on a under which the boundary-layer estimates are stated.
  double admissible_a() const { return std::min({gamma_prime - (1 + gamma) / 2, 1 - gamma, gamma / 2}); }

  long long truncation() const { return static_cast<long long>(std::floor(std::pow(eps, -gamma_prime))); }

  RegimeCheck parameters() const {
    RegimeCheck c;
    c.require(eps > 0 && eps < 1, "eps in (0,1)");
    c.require(gamma > 0 && gamma < 1, "gamma in (0,1)");
    c.require(gamma_prime > (1 + gamma) / 2 && gamma_prime < 1, "gamma' in ((1+gamma)/2, 1)");
    c.require(a > 0 && a < admissible_a(), "0 < a < (gamma' - (1+gamma)/2) ^ (1-gamma) ^ gamma/2");
    return c;
  }

  /// (t, x) with t <= eps^{-1-gamma-a}, 0 <= x <= eps^{-1-a} and x >= eps^{-a} sqrt(t).
  RegimeCheck in_xi(double t, long long x) const {
    RegimeCheck c;
    c.require(t >= 0 && t <= std::pow(eps, -1 - gamma - a), "t in [0, eps^{-1-gamma-a}]");
    c.require(x >= 0 && static_cast<double>(x) <= std::pow(eps, -1 - a), "x in [0, eps^{-1-a}]");
    c.require(static_cast<double>(x) >= std::pow(eps, -a) * std::sqrt(std::max(t, 0.0)), "x / sqrt(t) >= eps^{-a}");
    return c;
  }

  RegimeCheck in_sigma(double t0, long long x0, double v) const {
    RegimeCheck c;
    c.require(t0 >= 1 && t0 <= std::pow(eps, -1 - gamma - a), "t0 in [1, eps^{-1-gamma-a}]");
    c.require(static_cast<double>(x0) >= std::pow(eps, -gamma_prime - a) &&
                  static_cast<double>(x0) <= std::pow(eps, -1 - a),
              "x0 in [eps^{-gamma'-a}, eps^{-1-a}]");
    c.require(v >= std::pow(eps, gamma + a) && v <= std::pow(eps, gamma - a), "v in [eps^{gamma+a}, eps^{gamma-a}]");
    c.require(v * std::sqrt(t0) >= std::pow(eps, -a), "v sqrt(t0) >= eps^{-a}");
    return c;
  }

  RegimeCheck in_sigma_tilde(double t0, long long x0, double v) const {
    RegimeCheck c;
    c.require(t0 >= 0 && t0 <= std::pow(eps, -1 - gamma - a), "t0 in [0, eps^{-1-gamma-a}]");
    c.require(x0 >= 0 && static_cast<double>(x0) <= std::pow(eps, -1 - a), "x0 in [0, eps^{-1-a}]");
    c.require(v >= std::pow(eps, gamma + a) && v <= std::pow(eps, a), "v in [eps^{gamma+a}, eps^{a}]");
    return c;
  }

  json to_json() const {
    return {{"eps", eps}, {"a", a}, {"gamma", gamma}, {"gamma_prime", gamma_prime}, {"admissible_a", admissible_a()}};
  }
};

inline json to_json(const RegimeCheck& c) { return {{"ok", c.ok}, {"failed", c.failed}}; }
inline json to_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"sd", m.sd}, {"n", m.n}}; }
inline json to_json(const KsResult& k) {
  return {{"statistic", k.statistic}, {"n", k.n}, {"m", k.m}, {"critical_05", k.critical_05}};
}

/// JSON has no infinity; unbounded values are written as the string "+inf".
inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(format_real(v)); }

/// Tags a JSON summary with the schema block every tool writes.
inline json with_schema(json j, const std::string& kind) {
  j["schema"] = {{"name", "frontlab"}, {"version", kSchemaVersion}, {"kind", kind}};
  return j;
}

// --- ensembles --------------------------------------------------------------

/// Workers for `jobs` independent runs: FRONTLAB_THREADS if set, else the hardware count.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("FRONTLAB_THREADS")) {
    long long v = 0;
    try {
      v = parse_integer(env);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("FRONTLAB_THREADS must be a positive integer");
    }
    if (v < 1) throw std::invalid_argument("FRONTLAB_THREADS must be a positive integer");
    n = static_cast<unsigned>(v);
  }
  n = std::max(n, 1u);
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Evaluates job(0..runs-1) on a worker pool; results come back in index
/// order, so the outcome does not depend on the number of workers.
template <class Job>
auto run_ensemble(std::size_t runs, Job&& job) -> std::vector<decltype(job(std::size_t{}))> {
  using R = decltype(job(std::size_t{}));
  std::vector<std::optional<R>> slots(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < runs;) {
      try {
        slots[i].emplace(job(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = worker_count(runs);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(runs);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

enum class FrontEngine { exact, fast };

inline FrontEngine parse_engine(const std::string& s) {
  if (s == "exact") return FrontEngine::exact;
  if (s == "fast") return FrontEngine::fast;
  throw std::invalid_argument("engine must be 'exact' or 'fast', got '" + s + "'");
}

inline TrajectoryKind parse_front_rule(const std::string& s) {
  if (s == "frictionless") return TrajectoryKind::front_frictionless;
  if (s == "mdla") return TrajectoryKind::front_mdla;
  if (s == "pushed") return TrajectoryKind::front_pushed;
  throw std::invalid_argument("mode must be frictionless, mdla or pushed, got '" + s + "'");
}

inline TrajectorySpec front_spec(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::front_mdla: return TrajectorySpec::mdla();
    case TrajectoryKind::front_pushed: return TrajectorySpec::pushed();
    default: return TrajectorySpec::frictionless();
  }
}

struct FrontEnsembleConfig {
  std::string ic = "geometric:mean=1";
  TrajectoryKind rule = TrajectoryKind::front_frictionless;
  FrontEngine engine = FrontEngine::fast;
  std::vector<double> times;  ///< checkpoints; the horizon is the largest
  std::size_t runs = 100;
  long long window = 10000;
  std::uint64_t seed = 1;
  double delta = 1e-9;
  long long near_distance = 24;
  double far_field_c = 8.0;
};

struct FrontEnsemble {
  std::vector<double> times;
  std::vector<std::vector<double>> r;  ///< r[run][checkpoint]; +inf after an explosion or window exit
  std::vector<double> explosion_time;  ///< per run, +inf when none
  std::uint64_t violations = 0;        ///< guard crossings (fast) or far-field clamps (exact)

  std::vector<double> at(std::size_t checkpoint) const {
    std::vector<double> out;
    out.reserve(r.size());
    for (const auto& row : r) out.push_back(row[checkpoint]);
    return out;
  }

  std::size_t exploded() const {
    return static_cast<std::size_t>(
        std::count_if(explosion_time.begin(), explosion_time.end(), [](double t) { return std::isfinite(t); }));
  }

  void write_csv(std::ostream& out, std::uint64_t master_seed) const {
    out << schema_line("front-ensemble") << "# master_seed=" << master_seed << "\n" << "run,t,r\n";
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < times.size(); ++j)
        out << i << ',' << format_real(times[j]) << ',' << format_real(r[i][j]) << '\n';
  }
};

inline std::uint64_t ic_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, 2 * run); }
inline std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, 2 * run + 1); }

/// Front position at each checkpoint for `runs` independent initial conditions.
inline FrontEnsemble front_ensemble(const FrontEnsembleConfig& cfg) {
  if (cfg.times.empty()) throw std::invalid_argument("front ensemble needs checkpoint times");
  if (cfg.runs == 0) throw std::invalid_argument("front ensemble needs at least one run");
  std::vector<double> times = cfg.times;
  std::sort(times.begin(), times.end());
  const double horizon = times.back();
  struct One {
    std::vector<double> r;
    double explosion = kInf;
    std::uint64_t violations = 0;
  };
  auto rows = run_ensemble(cfg.runs, [&](std::size_t i) {
    auto ic = make_initial_condition(cfg.ic, cfg.window, ic_seed(cfg.seed, i));
    One o;
    o.r.assign(times.size(), kInf);
    std::vector<std::pair<double, long long>> cps;
    if (cfg.engine == FrontEngine::fast) {
      FastFrontOptions fo;
      fo.horizon = horizon;
      fo.checkpoints = times;
      fo.seed = run_seed(cfg.seed, i);
      fo.rule = cfg.rule;
      fo.delta = cfg.delta;
      fo.near_distance = cfg.near_distance;
      fo.record_path = false;
      auto res = sample_front(ic, fo);
      cps = res.checkpoint_r;
      o.explosion = res.explosion_time;
      o.violations = res.violations;
    } else {
      SimulationOptions so;
      so.horizon = horizon;
      so.checkpoints = times;
      so.seed = run_seed(cfg.seed, i);
      so.lazy_dead = true;
      so.far_field = true;
      so.far_field_c = cfg.far_field_c;
      so.record_hitting_times = false;
      auto res = run_simulation(ic, {front_spec(cfg.rule)}, so);
      cps = res.absorbers[0].checkpoint_q;
      o.explosion = res.explosion_time;
      o.violations = res.far_field_violations;
    }
    // Checkpoints are recorded in time order; those after an explosion are absent.
    for (std::size_t j = 0; j < cps.size() && j < times.size(); ++j) o.r[j] = static_cast<double>(cps[j].second);
    return o;
  });
  FrontEnsemble ens;
  ens.times = times;
  for (auto& o : rows) {
    ens.r.push_back(std::move(o.r));
    ens.explosion_time.push_back(o.explosion);
    ens.violations += o.violations;
  }
  return ens;
}

// --- exponent fit -----------------------------------------------------------

struct ExponentFit {
  double alpha = 0;
  double intercept = 0;
  double ci_low = 0;
  double ci_high = 0;
  double confidence = 0.95;
  std::size_t runs = 0;
  std::size_t bootstrap = 0;
  std::vector<double> times;
  std::vector<double> medians;

  json to_json() const {
    return {{"alpha", alpha},         {"intercept", intercept}, {"ci_low", ci_low},
            {"ci_high", ci_high},     {"confidence", confidence}, {"runs", runs},
            {"bootstrap", bootstrap}, {"times", times},           {"medians", medians}};
  }
};

inline LineFit log_log_medians(const std::vector<double>& times, const std::vector<std::vector<double>>& r,
                               const std::vector<std::size_t>& rows, std::vector<double>* medians = nullptr) {
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < times.size(); ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (std::size_t i : rows) col.push_back(r[i][j]);
    double m = median(std::move(col));
    if (medians) medians->push_back(m);
    if (!(m > 0) || !std::isfinite(m)) throw std::runtime_error("median front is not positive and finite");
    lx.push_back(std::log(times[j]));
    ly.push_back(std::log(m));
  }
  return least_squares(lx, ly);
}

/// Slope of log(median r(T)) against log T with a percentile bootstrap over runs.
inline ExponentFit exponent_fit(const std::vector<double>& times, const std::vector<std::vector<double>>& r,
                                std::size_t bootstrap, std::uint64_t seed, std::size_t min_runs = 100,
                                double min_decades = 2.0, double confidence = 0.95) {
  if (r.size() < min_runs)
    throw InsufficientData("exponent fit needs at least " + std::to_string(min_runs) + " runs, got " +
                           std::to_string(r.size()));
  if (times.size() < 2 || !(times.front() > 0) ||
      std::log10(times.back() / times.front()) < min_decades - 1e-9)
    throw InsufficientData("exponent fit needs checkpoints spanning " + format_real(min_decades) + " decades");
  ExponentFit fit;
  fit.times = times;
  fit.runs = r.size();
  fit.bootstrap = bootstrap;
  fit.confidence = confidence;
  std::vector<std::size_t> all(r.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  LineFit lf = log_log_medians(times, r, all, &fit.medians);
  fit.alpha = lf.slope;
  fit.intercept = lf.intercept;
  fit.ci_low = fit.ci_high = fit.alpha;
  if (bootstrap > 0) {
    Rng rng = make_rng(seed, 0xb0);
    std::uniform_int_distribution<std::size_t> pick(0, r.size() - 1);
    std::vector<double> slopes;
    std::vector<std::size_t> rows(r.size());
    for (std::size_t b = 0; b < bootstrap; ++b) {
      for (auto& i : rows) i = pick(rng);
      try {
        slopes.push_back(log_log_medians(times, r, rows).slope);
      } catch (const std::runtime_error&) {
        slopes.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    std::erase_if(slopes, [](double s) { return std::isnan(s); });
    if (!slopes.empty()) {
      std::sort(slopes.begin(), slopes.end());
      auto q = [&](double p) {
        double pos = p * static_cast<double>(slopes.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, slopes.size() - 1);
        return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
      };
      fit.ci_low = q((1 - confidence) / 2);
      fit.ci_high = q((1 + confidence) / 2);
    }
  }
  return fit;
}

/// n log-spaced times from t_lo to t_hi inclusive.
inline std::vector<double> log_spaced(double t_lo, double t_hi, std::size_t n) {
  if (n < 2 || !(t_lo > 0) || !(t_hi > t_lo)) throw std::invalid_argument("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::round(t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / static_cast<double>(n - 1))));
  out.front() = t_lo;
  out.back() = t_hi;
  return out;
}

// --- phases -----------------------------------------------------------------

struct PhaseConfig {
  double rho = 0.5;
  std::string family = "poisson";
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  // subcritical: fronts at eps^{-2} t
  double eps = 0.02;
  std::vector<double> times{1.0};
  // supercritical: window exit before the horizon
  long long explosion_window = 100000;
  double explosion_horizon = 5000;
  // critical: r(T)/sqrt(T) on a grid of T
  std::vector<double> critical_times{100, 1000, 10000};
};

struct PhaseReport {
  double rho = 0;
  std::string phase;
  std::size_t runs = 0;
  // subcritical
  double kappa = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> scaled;  ///< eps r(eps^{-2} t), [run][time]
  std::vector<double> median_abs_error;     ///< median over runs of |scaled - kappa sqrt(t)|
  std::vector<double> median_scaled;
  // supercritical
  std::vector<double> explosion_times;
  double explosion_horizon = 0;
  std::size_t exploded_before_horizon = 0;
  // critical
  std::vector<double> critical_times;
  std::vector<double> median_ratio;  ///< median r(T) / sqrt(T)
  bool ratio_increasing = false;

  json to_json() const {
    json j = {{"rho", rho}, {"phase", phase}, {"runs", runs}};
    if (phase == "subcritical") {
      j["kappa"] = kappa;
      j["times"] = times;
      j["median_abs_error"] = median_abs_error;
      j["median_scaled"] = median_scaled;
    } else if (phase == "supercritical") {
      j["explosion_horizon"] = explosion_horizon;
      j["exploded_before_horizon"] = exploded_before_horizon;
      std::vector<double> finite;
      for (double t : explosion_times)
        if (std::isfinite(t)) finite.push_back(t);
      j["median_explosion_time"] = finite.empty() ? json(nullptr) : json(median(finite));
    } else {
      j["times"] = critical_times;
      j["median_ratio"] = median_ratio;
      j["ratio_increasing"] = ratio_increasing;
    }
    return j;
  }
};

inline std::string iid_spec(const std::string& family, double mean) {
  return family + ":mean=" + format_real(mean);
}

inline PhaseReport phase_report(const PhaseConfig& cfg) {
  if (!(cfg.rho > 0)) throw std::invalid_argument("density must be positive");
  PhaseReport rep;
  rep.rho = cfg.rho;
  rep.runs = cfg.runs;
  if (cfg.rho < 1) {
    rep.phase = "subcritical";
    rep.kappa = solve_kappa(cfg.rho);
    rep.times = cfg.times;
    FrontEnsembleConfig fc;
    fc.ic = iid_spec(cfg.family, cfg.rho);
    fc.engine = FrontEngine::exact;
    fc.runs = cfg.runs;
    fc.seed = cfg.seed;
    for (double t : cfg.times) fc.times.push_back(t / (cfg.eps * cfg.eps));
    double horizon = *std::max_element(fc.times.begin(), fc.times.end());
    fc.window = suggest_window(2 * rep.kappa * std::sqrt(horizon) + 10, horizon, cfg.rho, 1e-6);
    auto ens = front_ensemble(fc);
    // front_ensemble sorts its checkpoints; keep the caller's order of times.
    rep.scaled.assign(cfg.runs, std::vector<double>(cfg.times.size()));
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      double T = cfg.times[k] / (cfg.eps * cfg.eps);
      auto j = static_cast<std::size_t>(std::find(ens.times.begin(), ens.times.end(), T) - ens.times.begin());
      std::vector<double> err, val;
      for (std::size_t i = 0; i < cfg.runs; ++i) {
        double s = cfg.eps * ens.r[i][j];
        rep.scaled[i][k] = s;
        val.push_back(s);
        err.push_back(std::abs(s - rep.kappa * std::sqrt(cfg.times[k])));
      }
      rep.median_abs_error.push_back(median(err));
      rep.median_scaled.push_back(median(val));
    }
  } else if (cfg.rho > 1) {
    rep.phase = "supercritical";
    rep.explosion_horizon = cfg.explosion_horizon;
    FrontEnsembleConfig fc;
    fc.ic = iid_spec(cfg.family, cfg.rho);
    fc.engine = FrontEngine::exact;
    fc.runs = cfg.runs;
    fc.seed = cfg.seed;
    fc.window = cfg.explosion_window;
    fc.times = {cfg.explosion_horizon};
    auto ens = front_ensemble(fc);
    rep.explosion_times = ens.explosion_time;
    for (double t : ens.explosion_time)
      if (t <= cfg.explosion_horizon) ++rep.exploded_before_horizon;
  } else {
    rep.phase = "critical";
    rep.critical_times = cfg.critical_times;
    FrontEnsembleConfig fc;
    fc.ic = iid_spec(cfg.family, cfg.rho);
    fc.engine = FrontEngine::fast;
    fc.runs = cfg.runs;
    fc.seed = cfg.seed;
    fc.times = cfg.critical_times;
    double horizon = *std::max_element(fc.times.begin(), fc.times.end());
    fc.window = suggest_window(40 * std::pow(horizon, 2.0 / 3.0), horizon, 1.0, 1e-6);
    auto ens = front_ensemble(fc);
    rep.critical_times = ens.times;
    for (std::size_t j = 0; j < ens.times.size(); ++j)
      rep.median_ratio.push_back(median(ens.at(j)) / std::sqrt(ens.times[j]));
    rep.ratio_increasing = true;
    for (std::size_t j = 1; j < rep.median_ratio.size(); ++j)
      rep.ratio_increasing = rep.ratio_increasing && rep.median_ratio[j] > rep.median_ratio[j - 1];
  }
  return rep;
}

// --- limit law comparison ---------------------------------------------------

/// n independent draws of Frnt_*(t).
/// n independent draws of Frnt_*(t); draws beyond `xi_cap` are +inf.
inline std::vector<double> limit_front_samples(double sigma, std::size_t n, double t, double dxi, std::uint64_t seed,
                                               double xi_cap = kInf) {
  return run_ensemble(n, [&](std::size_t i) {
    return sample_limit_front_value(sigma, t, dxi, derive_seed(seed, i), xi_cap);
  });
}

/// Values above `level` become +inf; KS on censored samples is the sup of
/// the CDF distance below the level.
inline std::vector<double> censor_above(std::vector<double> v, double level) {
  for (double& x : v)
    if (x > level) x = kInf;
  return v;
}

struct LimitDistributionResult {
  KsResult matched;
  KsResult mismatched;
  double sigma = 0;
  double sigma_mismatch = 0;
  double censor = kInf;

  bool control_worse() const { return mismatched.statistic > matched.statistic; }

  json to_json() const {
    return {{"sigma", sigma},
            {"sigma_mismatch", sigma_mismatch},
            {"censor", real_json(censor)},
            {"matched", frontlab::to_json(matched)},
            {"mismatched", frontlab::to_json(mismatched)},
            {"control_worse", control_worse()}};
  }
};

inline KsResult checked_ks(const std::vector<double>& a, const std::vector<double>& b, std::size_t min_samples) {
  if (a.size() < min_samples || b.size() < min_samples)
    throw InsufficientData("KS comparison needs at least " + std::to_string(min_samples) + " samples on each side");
  return ks_two_sample(a, b);
}

/// KS distance between rescaled fronts and limit samples, plus the same
/// distance against a limit with the wrong sigma as a control.
inline LimitDistributionResult limit_distribution_test(const std::vector<double>& scaled_fronts,
                                                       const std::vector<double>& limit_matched,
                                                       const std::vector<double>& limit_mismatched, double sigma,
                                                       double sigma_mismatch, double censor = kInf,
                                                       std::size_t min_samples = 300) {
  LimitDistributionResult r;
  r.sigma = sigma;
  r.sigma_mismatch = sigma_mismatch;
  r.censor = censor;
  auto data = censor_above(scaled_fronts, censor);
  r.matched = checked_ks(data, censor_above(limit_matched, censor), min_samples);
  r.mismatched = checked_ks(data, censor_above(limit_mismatched, censor), min_samples);
  return r;
}

// --- sine initial condition -------------------------------------------------

struct SineConfig {
  double eps = 0.01;
  double gamma = 0.5;
  std::vector<double> times{1.0, 2.0};
  std::size_t runs = 50;
  double tolerance = 0.15;
  std::uint64_t seed = 1;
  FrontEngine engine = FrontEngine::exact;
};

struct SineReport {
  std::vector<double> times;
  std::vector<double> targets;              ///< Frnt(t)
  std::vector<std::vector<double>> scaled;  ///< eps r(eps^{-1-gamma} t), [run][time]
  std::vector<bool> run_pass;
  double pass_fraction = 0;
  double tolerance = 0;

  json to_json() const {
    std::vector<double> med;
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> col;
      for (const auto& row : scaled) col.push_back(row[k]);
      med.push_back(median(col));
    }
    return {{"times", times},       {"targets", targets},           {"median_scaled", med},
            {"runs", scaled.size()}, {"pass_fraction", pass_fraction}, {"tolerance", tolerance}};
  }
};

inline SineReport sine_deterministic_test(const SineConfig& cfg) {
  for (double t : cfg.times)
    if (!(t > 0 && t < 4)) throw std::invalid_argument("sine test times must lie in (0, 4), before the first jump");
  SineReport rep;
  rep.times = cfg.times;
  rep.tolerance = cfg.tolerance;
  for (double t : cfg.times) rep.targets.push_back(deterministic_front(t));
  const double scale = std::pow(cfg.eps, -1 - cfg.gamma);
  std::vector<double> real_times;
  for (double t : cfg.times) real_times.push_back(t * scale);
  double horizon = *std::max_element(real_times.begin(), real_times.end());
  double front = *std::max_element(rep.targets.begin(), rep.targets.end()) / cfg.eps;
  long long window = suggest_window(1.5 * front + 10, horizon, 2.0, 1e-6);
  auto ic = generate_sine(cfg.eps, cfg.gamma, window);
  auto rows = run_ensemble(cfg.runs, [&](std::size_t i) {
    std::vector<std::pair<double, long long>> cps;
    if (cfg.engine == FrontEngine::fast) {
      FastFrontOptions fo;
      fo.horizon = horizon;
      fo.checkpoints = real_times;
      fo.seed = run_seed(cfg.seed, i);
      fo.record_path = false;
      cps = sample_front(ic, fo).checkpoint_r;
    } else {
      SimulationOptions so;
      so.horizon = horizon;
      so.checkpoints = real_times;
      so.seed = run_seed(cfg.seed, i);
      so.lazy_dead = true;
      so.far_field = true;
      so.record_hitting_times = false;
      cps = run_simulation(ic, {TrajectorySpec::frictionless()}, so).absorbers[0].checkpoint_q;
    }
    std::map<double, long long> at(cps.begin(), cps.end());
    std::vector<double> out;
    for (double T : real_times) out.push_back(at.count(T) ? cfg.eps * static_cast<double>(at[T]) : kInf);
    return out;
  });
  std::size_t pass = 0;
  for (auto& row : rows) {
    bool ok = true;
    for (std::size_t k = 0; k < row.size(); ++k)
      ok = ok && std::abs(row[k] - rep.targets[k]) <= cfg.tolerance * rep.targets[k];
    rep.run_pass.push_back(ok);
    pass += ok;
    rep.scaled.push_back(std::move(row));
  }
  rep.pass_fraction = static_cast<double>(pass) / static_cast<double>(rep.scaled.size());
  return rep;
}

// --- boundary layer ---------------------------------------------------------

struct BoundaryLayerConfig {
  RegimeSpec regime{1.4e-3, 0.1, 0.5, 0.86};
  double t0 = 16000;
  long long x0 = 700;
  double v = 0.02;
  std::size_t runs = 200;
  std::string ic = "geometric:mean=1";
  std::uint64_t seed = 1;
  double far_field_c = 6.0;
  bool include_plain = true;
};

struct BoundaryLayerReport {
  double target = 0;  ///< 1 / (2v)
  std::vector<long long> g_upper, g_lower, g_plain;
  MeanSe upper, lower, plain;
  std::size_t pathwise_violations = 0;  ///< runs with G^{upper} < G^{lower}
  double plain_bound = 0;               ///< 4 eps^{-a} / v
  RegimeCheck sigma, sigma_tilde;
  std::uint64_t far_field_violations = 0;

  double relative_error() const { return std::abs(upper.mean - target) / target; }
  /// |mean upper - mean lower| in units of the joint standard error.
  double agreement_z() const {
    double se = std::hypot(upper.se, lower.se);
    return se > 0 ? std::abs(upper.mean - lower.mean) / se : 0.0;
  }

  json to_json() const {
    json j = {{"target", target},
              {"upper", frontlab::to_json(upper)},
              {"lower", frontlab::to_json(lower)},
              {"relative_error_upper", relative_error()},
              {"agreement_z", agreement_z()},
              {"pathwise_violations", pathwise_violations},
              {"sigma", frontlab::to_json(sigma)},
              {"sigma_tilde", frontlab::to_json(sigma_tilde)},
              {"far_field_violations", far_field_violations}};
    if (!g_plain.empty()) {
      j["plain"] = frontlab::to_json(plain);
      j["plain_v_times_mean"] = plain.mean * (1.0 / (2 * target));
      j["plain_bound"] = plain_bound;
    }
    return j;
  }
};

/// G at t0 for the truncated trajectories (and optionally the plain linear
/// one), all driven by the same particles in each run.
inline BoundaryLayerReport boundary_layer_experiment(const BoundaryLayerConfig& cfg) {
  auto params = cfg.regime.parameters();
  if (!params.ok) throw RegimeViolation("the admissible parameter set", params);
  BoundaryLayerReport rep;
  rep.sigma = cfg.regime.in_sigma(cfg.t0, cfg.x0, cfg.v);
  if (!rep.sigma.ok) throw RegimeViolation("Sigma_eps(a)", rep.sigma);
  rep.sigma_tilde = cfg.regime.in_sigma_tilde(cfg.t0, cfg.x0, cfg.v);
  if (cfg.include_plain && !rep.sigma_tilde.ok) throw RegimeViolation("Sigma~_eps(a)", rep.sigma_tilde);
  rep.target = 1.0 / (2.0 * cfg.v);
  rep.plain_bound = 4.0 * std::pow(cfg.regime.eps, -cfg.regime.a) / cfg.v;
  const double eps = cfg.regime.eps, gp = cfg.regime.gamma_prime;
  std::vector<TrajectorySpec> specs{TrajectorySpec::truncated_upper(cfg.t0, cfg.x0, cfg.v, gp, eps),
                                    TrajectorySpec::truncated_lower(cfg.t0, cfg.x0, cfg.v, gp, eps)};
  if (cfg.include_plain) specs.push_back(TrajectorySpec::linear(cfg.t0, cfg.x0, cfg.v));
  const long long window = suggest_window(static_cast<double>(cfg.x0), cfg.t0, 2.0, 1e-6);
  struct One {
    long long up = 0, lo = 0, plain = 0;
    std::uint64_t violations = 0;
  };
  auto rows = run_ensemble(cfg.runs, [&](std::size_t i) {
    auto ic = make_initial_condition(cfg.ic, window, ic_seed(cfg.seed, i));
    SimulationOptions so;
    so.horizon = cfg.t0;
    so.checkpoints = {cfg.t0};
    so.seed = run_seed(cfg.seed, i);
    so.lazy_dead = true;
    so.far_field = true;
    so.far_field_c = cfg.far_field_c;
    so.record_hitting_times = false;
    auto res = run_simulation(ic, specs, so);
    One o;
    o.up = res.absorbers[0].snapshots.back().G;
    o.lo = res.absorbers[1].snapshots.back().G;
    if (cfg.include_plain) o.plain = res.absorbers[2].snapshots.back().G;
    o.violations = res.far_field_violations;
    return o;
  });
  std::vector<double> up, lo, pl;
  for (const auto& o : rows) {
    rep.g_upper.push_back(o.up);
    rep.g_lower.push_back(o.lo);
    up.push_back(static_cast<double>(o.up));
    lo.push_back(static_cast<double>(o.lo));
    if (cfg.include_plain) {
      rep.g_plain.push_back(o.plain);
      pl.push_back(static_cast<double>(o.plain));
    }
    if (o.up < o.lo) ++rep.pathwise_violations;
    rep.far_field_violations += o.violations;
  }
  rep.upper = mean_se(up);
  rep.lower = mean_se(lo);
  if (cfg.include_plain) rep.plain = mean_se(pl);
  return rep;
}

// --- ansatz and centering ---------------------------------------------------

struct AnsatzConfig {
  double eps = 0.02;
  double gamma = 0.5;
  double t_max = 3.5;  ///< in units of eps^{-1-gamma}
  std::size_t runs = 50;
  long long block = 8;
  std::size_t checkpoints = 10;
  std::uint64_t seed = 1;
};

struct AnsatzReport {
  double slope = 0;
  std::size_t blocks = 0;
  std::size_t runs = 0;
  double m_relative = 0;  ///< mean |M(t, r)| / mean |F(r)| over checkpoints
  std::vector<std::pair<double, double>> pairs;  ///< (2 sum [F]_+, dT) per block

  json to_json() const {
    return {{"slope", slope}, {"blocks", blocks}, {"runs", runs}, {"m_relative", m_relative}};
  }
};

/// Pooled regression through the origin of the hitting-time increment over
/// blocks of levels with F > 0 against 2 sum [F]_+ over the block.
inline AnsatzReport ansatz_check(const AnsatzConfig& cfg) {
  if (cfg.block < 1) throw std::invalid_argument("block must be positive");
  const double horizon = cfg.t_max * std::pow(cfg.eps, -1 - cfg.gamma);
  double front = deterministic_front(std::min(cfg.t_max, 3.999)) / cfg.eps;
  long long window = suggest_window(1.5 * front + 10, horizon, 2.0, 1e-6);
  auto ic = generate_sine(cfg.eps, cfg.gamma, window);
  std::vector<double> cps;
  for (std::size_t k = 1; k <= cfg.checkpoints; ++k)
    cps.push_back(horizon * static_cast<double>(k) / static_cast<double>(cfg.checkpoints));
  struct One {
    std::vector<std::pair<double, double>> pairs;
    double abs_m = 0, abs_f = 0;
  };
  auto rows = run_ensemble(cfg.runs, [&](std::size_t i) {
    SimulationOptions so;
    so.horizon = horizon;
    so.checkpoints = cps;
    so.seed = run_seed(cfg.seed, i);
    so.lazy_dead = true;
    so.far_field = true;
    auto res = run_simulation(ic, {TrajectorySpec::frictionless()}, so);
    const auto& ab = res.absorbers[0];
    std::map<long long, double> hit(ab.hitting.begin(), ab.hitting.end());
    One o;
    // T(level) for level = 0 .. r_final - 1; T(-1) = 0.
    for (long long start = 0; start + cfg.block <= ab.final_q; start += cfg.block) {
      double x = 0;
      bool positive = true;
      for (long long l = start; l < start + cfg.block; ++l) {
        long long f = ic.cumulative_fluctuation(l + 1);
        positive = positive && f > 0;
        x += 2.0 * static_cast<double>(std::max(f, 0LL));
      }
      if (!positive) continue;
      double t_end = hit.at(start + cfg.block - 1);
      double t_begin = start == 0 ? 0.0 : hit.at(start - 1);
      o.pairs.emplace_back(x, t_end - t_begin);
    }
    for (const auto& s : ab.snapshots) {
      o.abs_m += std::abs(static_cast<double>(s.M));
      o.abs_f += std::abs(static_cast<double>(s.F));
    }
    return o;
  });
  AnsatzReport rep;
  rep.runs = cfg.runs;
  double sxy = 0, sxx = 0, am = 0, af = 0;
  for (const auto& o : rows) {
    for (const auto& [x, y] : o.pairs) {
      sxy += x * y;
      sxx += x * x;
      rep.pairs.emplace_back(x, y);
    }
    am += o.abs_m;
    af += o.abs_f;
  }
  rep.blocks = rep.pairs.size();
  if (rep.blocks == 0) throw InsufficientData("no block of levels with positive F was crossed");
  rep.slope = sxy / sxx;
  rep.m_relative = af > 0 ? am / af : kInf;
  return rep;
}

struct CenteringReport {
  double t = 0;
  long long x = 0;
  MeanSe sample;
  double target = 0;

  double z() const { return sample.se > 0 ? std::abs(sample.mean - target) / sample.se : kInf; }
  bool within(double k) const { return std::abs(sample.mean - target) <= k * sample.se; }

  json to_json() const {
    return {{"t", t}, {"x", x}, {"sample", frontlab::to_json(sample)}, {"target", target}, {"z", z()}};
  }
};

/// Free positions at time t of every particle of one initial condition; walks
/// are sampled directly since the free system has no interaction.
inline std::vector<std::pair<long long, long long>> free_positions(const InitialCondition& ic, double t, Rng& rng) {
  std::vector<std::pair<long long, long long>> out;
  out.reserve(static_cast<std::size_t>(ic.total_particles()));
  for (long long y = 1; y <= ic.window(); ++y)
    for (int c = 0; c < ic.count(y); ++c) out.emplace_back(y, y + sample_displacement(t, rng));
  return out;
}

/// Mean over runs of M^-(t,x) = #{start > x, now <= x} against V(t); needs mean density 1.
inline CenteringReport m_centering_check(const std::string& family, double t, long long x, std::size_t runs,
                                         std::uint64_t seed) {
  CenteringReport rep;
  rep.t = t;
  rep.x = x;
  auto table = global_kernel_cache().get(t);
  rep.target = table->centering_V();
  long long window = x + table->reach() + 1;
  auto vals = run_ensemble(runs, [&](std::size_t i) {
    auto ic = generate_iid(family, 1.0, window, ic_seed(seed, i));
    Rng rng = make_rng(run_seed(seed, i), 0x3c);
    long long m = 0;
    for (const auto& [y, z] : free_positions(ic, t, rng))
      if (y > x && z <= x) ++m;
    return static_cast<double>(m);
  });
  rep.sample = mean_se(vals);
  return rep;
}

/// Mean over runs of H(t,x) = #{particles at or left of x at t} against
/// rho x + rho E[(W(t) - x)_+].
inline CenteringReport appendix_identity_check(const std::string& family, double rho, double t, long long x,
                                               std::size_t runs, std::uint64_t seed) {
  if (x < 0) throw std::invalid_argument("x must be nonnegative");
  CenteringReport rep;
  rep.t = t;
  rep.x = x;
  auto table = global_kernel_cache().get(t);
  rep.target = rho * static_cast<double>(x) + rho * table->positive_part_mean(x);
  long long window = x + table->reach() + 1;
  auto vals = run_ensemble(runs, [&](std::size_t i) {
    auto ic = generate_iid(family, rho, window, ic_seed(seed, i));
    Rng rng = make_rng(run_seed(seed, i), 0x3d);
    long long h = 0;
    for (const auto& [y, z] : free_positions(ic, t, rng))
      if (z <= x) ++h;
    return static_cast<double>(h);
  });
  rep.sample = mean_se(vals);
  return rep;
}

// --- exact-identity, monotonicity and dominance batches ---------------------

struct IdentityReport {
  std::size_t runs = 0;
  std::uint64_t events = 0;
  std::uint64_t flux_mismatches = 0;
  std::size_t snapshots = 0;
  std::size_t decomposition_failures = 0;
  std::size_t exploded_runs = 0;  ///< runs stopped early at the window edge

  bool ok() const { return flux_mismatches == 0 && decomposition_failures == 0 && snapshots > 0; }
  json to_json() const {
    return {{"runs", runs},
            {"events", events},
            {"flux_mismatches", flux_mismatches},
            {"snapshots", snapshots},
            {"decomposition_failures", decomposition_failures},
            {"exploded_runs", exploded_runs}};
  }
};

/// Flux identity after every event and the decomposition at evenly spaced
/// checkpoints, for the frictionless front and a linear boundary in the same run.
inline IdentityReport identity_check(std::size_t runs, double horizon, long long window, std::size_t checkpoints,
                                     std::uint64_t seed, const std::string& ic_spec = "geometric:mean=1") {
  std::vector<double> cps;
  for (std::size_t k = 1; k <= checkpoints; ++k)
    cps.push_back(horizon * static_cast<double>(k) / static_cast<double>(checkpoints));
  auto linear = TrajectorySpec::linear(horizon, static_cast<long long>(std::ceil(std::pow(horizon, 2.0 / 3.0))), 0.1);
  auto rows = run_ensemble(runs, [&](std::size_t i) {
    auto ic = make_initial_condition(ic_spec, window, ic_seed(seed, i));
    SimulationOptions so;
    so.horizon = horizon;
    so.checkpoints = cps;
    so.seed = run_seed(seed, i);
    so.lazy_dead = true;
    so.far_field = true;
    Simulation sim(ic, {TrajectorySpec::frictionless(), linear}, so);
    IdentityReport r;
    sim.observer = [&](const Simulation& s) {
      ++r.events;
      if (s.absorbed(0) != s.q(0)) ++r.flux_mismatches;
    };
    auto res = sim.run();
    for (const auto& ab : res.absorbers)
      for (const auto& snap : ab.snapshots) {
        ++r.snapshots;
        if (snap.residual() != 0) ++r.decomposition_failures;
      }
    r.exploded_runs = res.exploded;
    return r;
  });
  IdentityReport rep;
  rep.runs = runs;
  for (const auto& r : rows) {
    rep.events += r.events;
    rep.flux_mismatches += r.flux_mismatches;
    rep.snapshots += r.snapshots;
    rep.decomposition_failures += r.decomposition_failures;
    rep.exploded_runs += r.exploded_runs;
  }
  return rep;
}

struct MonotonicityBatch {
  std::size_t probes = 0;
  std::size_t violations = 0;
  std::size_t upper_violating_probes = 0;
  std::size_t lower_violating_probes = 0;
  std::size_t upper_hypothesis_held = 0;
  std::size_t lower_hypothesis_held = 0;
  std::size_t exploded_runs = 0;
  std::string first_violation;

  json to_json() const {
    return {{"probes", probes},
            {"violations", violations},
            {"upper_violating_probes", upper_violating_probes},
            {"lower_violating_probes", lower_violating_probes},
            {"upper_hypothesis_held", upper_hypothesis_held},
            {"lower_hypothesis_held", lower_hypothesis_held},
            {"exploded_runs", exploded_runs},
            {"first_violation", first_violation}};
  }
};

/// Even probes use Q = r + offset, with r the frictionless front of the same
/// seed (jump sequences do not depend on prescribed boundaries, so Q shares
/// the randomness); odd probes use Q(t) = floor(v t) with v drawn per probe.
inline MonotonicityBatch monotonicity_batch(std::size_t probes, double horizon, long long window, long long offset,
                                            std::uint64_t seed) {
  auto rows = run_ensemble(probes, [&](std::size_t i) {
    auto ic = generate_iid("geometric", 1.0, window, ic_seed(seed, i));
    std::uint64_t s = run_seed(seed, i);
    StepFunction q;
    if (i % 2 == 0) {
      SimulationOptions so;
      so.horizon = horizon;
      so.seed = s;
      so.record_hitting_times = false;
      auto res = run_simulation(ic, {TrajectorySpec::frictionless()}, so);
      std::vector<double> b, v;
      for (const auto& [t, r] : res.absorbers[0].path) {
        if (!b.empty() && b.back() == t) {
          v.back() = static_cast<double>(r + offset);
          continue;
        }
        b.push_back(t);
        v.push_back(static_cast<double>(r + offset));
      }
      q = StepFunction(std::move(b), std::move(v), horizon);
    } else {
      Rng rng = make_rng(s, 0x77);
      double vel = 0.02 + 0.5 * uniform01(rng);
      q = StepFunction({0.0}, {0.0});
      auto path = deterministic_path(TrajectorySpec::linear(0.0, 0, vel), horizon);
      std::vector<double> b(path.times.begin(), path.times.end()), v;
      for (long long x : path.values) v.push_back(static_cast<double>(x));
      q = StepFunction(std::move(b), std::move(v), horizon);
    }
    return monotonicity_probe(ic, q, horizon, s);
  });
  MonotonicityBatch rep;
  rep.probes = probes;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    rep.upper_hypothesis_held += r.upper_hypothesis_held;
    rep.lower_hypothesis_held += r.lower_hypothesis_held;
    rep.exploded_runs += r.exploded;
    rep.upper_violating_probes += r.upper_violations > 0;
    rep.lower_violating_probes += r.lower_violations > 0;
    if (r.violations > 0) {
      if (rep.violations == 0)
        rep.first_violation = "probe " + std::to_string(i) + " at t=" + format_real(r.first_violation_time) + ": " +
                              r.first_violation;
      ++rep.violations;
    }
  }
  return rep;
}

struct DominanceReport {
  std::size_t runs = 0;
  std::uint64_t checks = 0;
  std::size_t violating_runs = 0;
  std::size_t exploded_runs = 0;
  std::uint64_t far_field_violations = 0;

  json to_json() const {
    return {{"runs", runs},
            {"checks", checks},
            {"violating_runs", violating_runs},
            {"exploded_runs", exploded_runs},
            {"far_field_violations", far_field_violations}};
  }
};

/// MDLA and frictionless fronts on the same particles; checks r_mdla <= r after
/// every event. Far particles are handled by the far field, which is exact in
/// law and acts on both fronts alike.
inline DominanceReport mdla_dominance(std::size_t runs, double horizon, long long window, std::uint64_t seed) {
  struct Row {
    std::uint64_t checks = 0;
    bool bad = false;
    bool exploded = false;
    std::uint64_t clamps = 0;
  };
  auto rows = run_ensemble(runs, [&](std::size_t i) {
    auto ic = generate_iid("geometric", 1.0, window, ic_seed(seed, i));
    SimulationOptions so;
    so.horizon = horizon;
    so.seed = run_seed(seed, i);
    so.record_hitting_times = false;
    so.lazy_dead = true;
    so.far_field = true;
    Simulation sim(ic, {TrajectorySpec::frictionless(), TrajectorySpec::mdla()}, so);
    Row out;
    sim.observer = [&](const Simulation& s) {
      ++out.checks;
      if (s.q(1) > s.q(0)) out.bad = true;
    };
    auto res = sim.run();
    out.exploded = res.exploded;
    out.clamps = res.far_field_violations;
    return out;
  });
  DominanceReport rep;
  rep.runs = runs;
  for (const auto& r : rows) {
    rep.checks += r.checks;
    rep.violating_runs += r.bad;
    rep.exploded_runs += r.exploded;
    rep.far_field_violations += r.clamps;
  }
  return rep;
}

// --- config-driven experiments ----------------------------------------------

/// Flat key/value parameters; every key must be consumed.
class Params {
 public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  double get_real(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_real(it->second);
  }
  long long get_integer(const std::string& key, long long fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_integer(it->second);
  }
  std::size_t get_count(const std::string& key, std::size_t fallback) {
    long long v = get_integer(key, static_cast<long long>(fallback));
    if (v < 0) throw std::invalid_argument(key + " must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  bool get_bool(const std::string& key, bool fallback) {
    std::string s = get_string(key, fallback ? "true" : "false");
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument(key + " must be true or false");
  }
  /// Comma or space separated reals, optionally in brackets.
  std::vector<double> get_reals(const std::string& key, std::vector<double> fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string s = it->second;
    for (char& c : s)
      if (c == '[' || c == ']' || c == ' ') c = ',';
    std::vector<double> out;
    for (const auto& item : split(s, ','))
      if (!item.empty()) out.push_back(parse_real(item));
    return out;
  }

  /// Throws on keys that no experiment parameter consumed.
  void check_all_used() const {
    std::string unknown;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    if (!unknown.empty()) throw std::invalid_argument("unknown experiment parameters: " + unknown);
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

struct ExperimentOutput {
  json summary;
  std::vector<std::pair<std::string, std::string>> tables;  ///< (file name, CSV content)
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "identities",      "monotonicity",       "mdla-dominance", "phase",         "critical-exponent",
      "limit-distribution", "sine",            "boundary-layer", "ansatz",        "m-centering",
      "appendix-identity", "shape-exponent"};
  return names;
}

namespace detail {

inline std::string table_head(const std::string& kind, std::uint64_t master_seed, const std::string& header) {
  return schema_line(kind) + "# master_seed=" + std::to_string(master_seed) + "\n" + header + "\n";
}

inline std::string values_table(const std::string& kind, std::uint64_t seed, const std::string& column,
                                 const std::vector<double>& v) {
  std::string s = table_head(kind, seed, column);
  for (double x : v) s += format_real(x) + "\n";
  return s;
}

}  // namespace detail

/// Runs a named experiment. The "preset" key selects "full" (default, the
/// sizes used for acceptance) or "small" (quick CI-sized defaults); any
/// parameter can be overridden individually.
inline ExperimentOutput run_experiment(const std::string& name, Params& p, std::uint64_t seed) {
  const std::string preset = p.get_string("preset", "full");
  if (preset != "full" && preset != "small") throw std::invalid_argument("preset must be 'full' or 'small'");
  const bool small = preset == "small";
  ExperimentOutput out;
  json& s = out.summary;
  s["experiment"] = name;
  s["master_seed"] = seed;
  s["preset"] = preset;
  s["note"] = "Monte Carlo bands are desk-scale engineering choices, not asymptotic error bars";

  if (name == "identities") {
    auto rep = identity_check(p.get_count("runs", small ? 10 : 100), p.get_real("horizon", small ? 200 : 1000),
                              p.get_integer("window", small ? 10000 : 50000), p.get_count("checkpoints", 20), seed,
                              p.get_string("ic", "geometric:mean=1"));
    s["result"] = rep.to_json();
    s["pass"] = rep.ok();
  } else if (name == "monotonicity") {
    auto rep = monotonicity_batch(p.get_count("probes", small ? 20 : 100), p.get_real("horizon", small ? 100 : 300),
                                  p.get_integer("window", small ? 1000 : 3000), p.get_integer("offset", 5), seed);
    s["result"] = rep.to_json();
    s["pass"] = rep.violations == 0;
  } else if (name == "mdla-dominance") {
    auto rep = mdla_dominance(p.get_count("runs", small ? 20 : 100), p.get_real("horizon", small ? 100 : 500),
                              p.get_integer("window", small ? 10000 : 50000), seed);
    s["result"] = rep.to_json();
    s["pass"] = rep.violating_runs == 0;
  } else if (name == "phase") {
    PhaseConfig c;
    c.rho = p.get_real("rho", 0.5);
    c.family = p.get_string("family", "poisson");
    c.runs = p.get_count("runs", small ? 20 : 100);
    c.eps = p.get_real("eps", small ? 0.05 : 0.02);
    c.times = p.get_reals("times", {1.0});
    c.explosion_window = p.get_integer("window", small ? 20000 : 100000);
    c.explosion_horizon = p.get_real("explosion_horizon", 5000);
    c.critical_times = p.get_reals("critical_times", small ? std::vector<double>{100, 1000}
                                                           : std::vector<double>{100, 1000, 10000});
    c.seed = seed;
    auto rep = phase_report(c);
    s["result"] = rep.to_json();
    std::string t;
    if (rep.phase == "subcritical") {
      t = detail::table_head("phase-subcritical", seed, "run,t,scaled");
      for (std::size_t i = 0; i < rep.scaled.size(); ++i)
        for (std::size_t k = 0; k < rep.times.size(); ++k)
          t += std::to_string(i) + "," + format_real(rep.times[k]) + "," + format_real(rep.scaled[i][k]) + "\n";
      s["pass"] = rep.median_abs_error.front() <= 0.1 * rep.kappa * std::sqrt(rep.times.front());
    } else if (rep.phase == "supercritical") {
      t = detail::values_table("explosion-times", seed, "explosion_time", rep.explosion_times);
      s["pass"] = rep.exploded_before_horizon * 10 >= rep.runs * 9;
    } else {
      t = detail::table_head("phase-critical", seed, "T,median_ratio");
      for (std::size_t j = 0; j < rep.critical_times.size(); ++j)
        t += format_real(rep.critical_times[j]) + "," + format_real(rep.median_ratio[j]) + "\n";
      s["pass"] = rep.ratio_increasing;
    }
    out.tables.emplace_back("phase.csv", t);
  } else if (name == "critical-exponent" || name == "limit-distribution") {
    const bool limit = name == "limit-distribution";
    FrontEnsembleConfig c;
    c.ic = p.get_string("ic", "geometric:mean=1");
    c.rule = parse_front_rule(p.get_string("mode", "frictionless"));
    c.engine = parse_engine(p.get_string("engine", "fast"));
    c.runs = p.get_count("runs", limit ? (small ? 300 : 500) : (small ? 100 : 500));
    double t_lo = p.get_real("t_min", small ? 100 : 1000);
    double t_hi = p.get_real("t_max", small ? 10000 : 100000);
    c.times = limit ? std::vector<double>{t_hi} : log_spaced(t_lo, t_hi, p.get_count("points", 11));
    c.window = p.get_integer("window", static_cast<long long>(40 * std::pow(t_hi, 2.0 / 3.0)) + 100000);
    c.delta = p.get_real("delta", 1e-9);
    c.seed = seed;
    auto ens = front_ensemble(c);
    std::ostringstream os;
    ens.write_csv(os, seed);
    out.tables.emplace_back("fronts.csv", os.str());
    s["window_exits"] = ens.exploded();
    s["guard_violations"] = ens.violations;
    if (!limit) {
      auto fit = exponent_fit(ens.times, ens.r, p.get_count("bootstrap", 1000), derive_seed(seed, 0xf17));
      s["fit"] = fit.to_json();
      double lo = p.get_real("alpha_low", 0.60), hi = p.get_real("alpha_high", 0.73);
      s["band"] = {lo, hi};
      s["pass"] = fit.alpha >= lo && fit.alpha <= hi;
      std::string t = detail::table_head("exponent-fit", seed, "T,median_r");
      for (std::size_t j = 0; j < fit.times.size(); ++j)
        t += format_real(fit.times[j]) + "," + format_real(fit.medians[j]) + "\n";
      out.tables.emplace_back("exponent.csv", t);
    } else {
      double sigma = p.get_real("sigma", std::sqrt(2.0));
      double sigma_bad = p.get_real("sigma_mismatch", 1.0);
      std::size_t n = p.get_count("limit_samples", small ? 2000 : 10000);
      double dxi = p.get_real("dxi", 1e-3);
      double censor = p.get_real("censor", 50);
      std::vector<double> data;
      for (double r : ens.at(0)) data.push_back(r / std::pow(t_hi, 2.0 / 3.0));
      auto good = limit_front_samples(sigma, n, 1.0, dxi, derive_seed(seed, 0x11), censor);
      auto bad = limit_front_samples(sigma_bad, n, 1.0, dxi, derive_seed(seed, 0x12), censor);
      auto res = limit_distribution_test(data, good, bad, sigma, sigma_bad, censor);
      s["result"] = res.to_json();
      double bar = p.get_real("ks_max", 0.15);
      s["ks_max"] = bar;
      s["pass"] = res.matched.statistic <= bar && res.control_worse();
      out.tables.emplace_back("scaled_fronts.csv", detail::values_table("distribution-sample", seed, "value", data));
      out.tables.emplace_back("limit_samples.csv", detail::values_table("distribution-sample", seed, "value", good));
    }
  } else if (name == "sine") {
    SineConfig c;
    c.eps = p.get_real("eps", small ? 0.005 : 2.5e-4);
    c.gamma = p.get_real("gamma", 0.5);
    c.times = p.get_reals("times", {1.0, 2.0});
    c.runs = p.get_count("runs", small ? 10 : 50);
    c.tolerance = p.get_real("tolerance", 0.15);
    c.engine = parse_engine(p.get_string("engine", "fast"));
    c.seed = seed;
    auto rep = sine_deterministic_test(c);
    s["result"] = rep.to_json();
    double need = p.get_real("min_pass_fraction", 0.8);
    s["pass"] = rep.pass_fraction >= need;
    std::string t = detail::table_head("sine-front", seed, "run,t,scaled,target");
    for (std::size_t i = 0; i < rep.scaled.size(); ++i)
      for (std::size_t k = 0; k < rep.times.size(); ++k)
        t += std::to_string(i) + "," + format_real(rep.times[k]) + "," + format_real(rep.scaled[i][k]) + "," +
             format_real(rep.targets[k]) + "\n";
    out.tables.emplace_back("sine.csv", t);
  } else if (name == "boundary-layer") {
    BoundaryLayerConfig c;
    c.regime.eps = p.get_real("eps", c.regime.eps);
    c.regime.a = p.get_real("a", c.regime.a);
    c.regime.gamma = p.get_real("gamma", c.regime.gamma);
    c.regime.gamma_prime = p.get_real("gamma_prime", c.regime.gamma_prime);
    c.t0 = p.get_real("t0", c.t0);
    c.x0 = p.get_integer("x0", c.x0);
    c.v = p.get_real("v", c.v);
    c.runs = p.get_count("runs", small ? 20 : 200);
    c.ic = p.get_string("ic", c.ic);
    c.far_field_c = p.get_real("far_field_c", c.far_field_c);
    c.include_plain = p.get_bool("include_plain", true);
    c.seed = seed;
    auto rep = boundary_layer_experiment(c);
    s["regime"] = c.regime.to_json();
    s["result"] = rep.to_json();
    s["pass"] = rep.relative_error() <= p.get_real("tolerance", 0.25) && rep.pathwise_violations == 0;
    std::string t = detail::table_head("boundary-layer", seed, "run,G_upper,G_lower,G_plain");
    for (std::size_t i = 0; i < rep.g_upper.size(); ++i)
      t += std::to_string(i) + "," + std::to_string(rep.g_upper[i]) + "," + std::to_string(rep.g_lower[i]) + "," +
           (rep.g_plain.empty() ? std::string("") : std::to_string(rep.g_plain[i])) + "\n";
    out.tables.emplace_back("boundary_layer.csv", t);
  } else if (name == "ansatz") {
    AnsatzConfig c;
    c.eps = p.get_real("eps", small ? 0.05 : 0.02);
    c.gamma = p.get_real("gamma", 0.5);
    c.t_max = p.get_real("t_max", 3.5);
    c.runs = p.get_count("runs", small ? 10 : 50);
    c.block = p.get_integer("block", 8);
    c.seed = seed;
    auto rep = ansatz_check(c);
    s["result"] = rep.to_json();
    s["band"] = {0.7, 1.3};
    s["pass"] = rep.slope >= 0.7 && rep.slope <= 1.3;
    std::string t = detail::table_head("ansatz-blocks", seed, "two_sum_F,dT");
    for (const auto& [x, y] : rep.pairs) t += format_real(x) + "," + format_real(y) + "\n";
    out.tables.emplace_back("ansatz.csv", t);
  } else if (name == "m-centering" || name == "appendix-identity") {
    std::string family = p.get_string("family", "geometric");
    double t = p.get_real("t", 100);
    std::size_t runs = p.get_count("runs", small ? 100 : 500);
    CenteringReport rep;
    if (name == "m-centering") {
      rep = m_centering_check(family, t, p.get_integer("x", 200), runs, seed);
    } else {
      rep = appendix_identity_check(family, p.get_real("rho", 1.0), t, p.get_integer("x", 20), runs, seed);
    }
    s["result"] = rep.to_json();
    s["pass"] = rep.within(3.0);
  } else if (name == "shape-exponent") {
    std::string ic_spec = p.get_string("ic", "geometric:mean=1");
    double gamma = p.get_real("gamma", 0.5);
    auto ic = make_initial_condition(ic_spec, p.get_integer("window", 100000), derive_seed(seed, 0));
    auto rep = shape_exponent_check(ic, gamma, p.get_count("trials", small ? 10000 : 100000), derive_seed(seed, 1));
    s["result"] = {{"pairs", rep.pairs}, {"max_ratio", rep.max_ratio}};
    std::string t = detail::table_head("shape-survival", seed, "r,survival");
    for (std::size_t k = 0; k < rep.levels.size(); ++k)
      t += format_real(rep.levels[k]) + "," + format_real(rep.survival[k]) + "\n";
    out.tables.emplace_back("shape.csv", t);
    s["pass"] = true;
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "'");
  }
  p.check_all_used();
  s["params"] = p.to_json();
  return out;
}

}  // namespace frontlab
