#pragma once

// Initial occupation fields on the window (0, X] and their centered integrated
// fluctuation F(x) = sum_{0<y<=x} (1 - eta(y)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "kernels.hpp"
#include "random.hpp"

namespace frontlab {

struct IidDescriptor {
  std::string family;
  double rho = 1;
  double sigma2 = 0;
  std::uint64_t seed = 0;
};

struct SineDescriptor {
  double eps = 0;
  double gamma = 0;
};

struct CustomDescriptor {
  std::string source;
};

using IcDescriptor = std::variant<IidDescriptor, SineDescriptor, CustomDescriptor>;

class InitialCondition {
 public:
  InitialCondition() = default;

  InitialCondition(std::vector<int> counts, IcDescriptor descriptor)
      : counts_(std::move(counts)), descriptor_(std::move(descriptor)) {
    F_.assign(counts_.size() + 1, 0);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] < 0) throw std::invalid_argument("negative occupation count");
      F_[i + 1] = F_[i] + 1 - counts_[i];
      total_ += counts_[i];
    }
  }

  long long window() const { return static_cast<long long>(counts_.size()); }

  /// eta(x); zero outside (0, X].
  int count(long long x) const {
    if (x < 1 || x > window()) return 0;
    return counts_[static_cast<std::size_t>(x - 1)];
  }

  /// F(x). Empty sites are assumed outside the window, so F(x) = x for x < 0
  /// and F grows by one per site beyond X.
  long long cumulative_fluctuation(long long x) const {
    if (x < 0) return x;
    if (x > window()) return F_.back() + (x - window());
    return F_[static_cast<std::size_t>(x)];
  }

  long long total_particles() const { return total_; }
  const std::vector<int>& counts() const { return counts_; }
  const IcDescriptor& descriptor() const { return descriptor_; }

  nlohmann::json descriptor_json() const {
    nlohmann::json j;
    j["window"] = window();
    j["particles"] = total_;
    std::visit(
        [&](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, IidDescriptor>) {
            j["kind"] = "iid";
            j["family"] = d.family;
            j["rho"] = d.rho;
            j["sigma2"] = d.sigma2;
            j["seed"] = d.seed;
          } else if constexpr (std::is_same_v<D, SineDescriptor>) {
            j["kind"] = "sine";
            j["eps"] = d.eps;
            j["gamma"] = d.gamma;
          } else {
            j["kind"] = "custom";
            j["source"] = d.source;
          }
        },
        descriptor_);
    return j;
  }

  void write_csv(std::ostream& out) const {
    out << schema_line("initial-condition") << "x,count\n";
    for (long long x = 1; x <= window(); ++x) out << x << ',' << count(x) << '\n';
  }

 private:
  std::vector<int> counts_;
  std::vector<long long> F_{0};
  IcDescriptor descriptor_ = CustomDescriptor{};
  long long total_ = 0;
};

/// Families: "bernoulli-mixture" (values {0,2}), "geometric" (on {0,1,...}), "poisson".
inline InitialCondition generate_iid(const std::string& family, double mean, long long window, std::uint64_t seed) {
  if (!(mean > 0)) throw std::invalid_argument("mean occupation must be positive");
  if (window <= 0) throw std::invalid_argument("window must be positive");
  Rng rng = make_rng(seed, 0x1c);
  std::vector<int> counts(static_cast<std::size_t>(window));
  IidDescriptor d{family, mean, 0, seed};
  if (family == "bernoulli-mixture") {
    if (mean > 2) throw std::invalid_argument("bernoulli-mixture needs mean <= 2");
    std::bernoulli_distribution two(mean / 2);
    for (auto& c : counts) c = two(rng) ? 2 : 0;
    d.sigma2 = mean * (2 - mean);
  } else if (family == "geometric") {
    std::geometric_distribution<int> geo(1.0 / (1.0 + mean));
    for (auto& c : counts) c = geo(rng);
    d.sigma2 = mean * (1 + mean);
  } else if (family == "poisson") {
    std::poisson_distribution<int> poi(mean);
    for (auto& c : counts) c = poi(rng);
    d.sigma2 = mean;
  } else {
    throw std::invalid_argument("unknown i.i.d. family '" + family + "'");
  }
  return InitialCondition(std::move(counts), d);
}

inline long long sine_fluctuation(double eps, double gamma, long long x) {
  return static_cast<long long>(std::floor(std::pow(eps, -gamma) * std::sin(eps * static_cast<double>(x))));
}

inline InitialCondition generate_sine(double eps, double gamma, long long window) {
  if (window <= 0) throw std::invalid_argument("window must be positive");
  if (!(eps > 0 && eps <= 1)) throw std::invalid_argument("sine initial condition needs eps in (0,1]");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("sine initial condition needs gamma in (0,1)");
  std::vector<int> counts(static_cast<std::size_t>(window));
  long long prev = 0;
  for (long long x = 1; x <= window; ++x) {
    long long cur = sine_fluctuation(eps, gamma, x);
    long long c = 1 - cur + prev;
    if (c < 0) throw std::logic_error("sine initial condition produced a negative count");
    counts[static_cast<std::size_t>(x - 1)] = static_cast<int>(c);
    prev = cur;
  }
  return InitialCondition(std::move(counts), SineDescriptor{eps, gamma});
}

inline InitialCondition read_initial_condition_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read initial condition file " + path);
  auto rows = read_csv_rows(in);
  std::vector<int> counts;
  for (const auto& r : rows) {
    if (r.size() < 2) throw std::invalid_argument("malformed initial condition row in " + path);
    long long x = parse_integer(r[0]);
    if (x != static_cast<long long>(counts.size()) + 1)
      throw std::invalid_argument("initial condition rows must list x = 1, 2, ... in order");
    counts.push_back(static_cast<int>(parse_integer(r[1])));
  }
  return InitialCondition(std::move(counts), CustomDescriptor{path});
}

/// "geometric:mean=1", "poisson:mean=0.5", "bernoulli-mixture:mean=1",
/// "sine:eps=0.01,gamma=0.5" or "file:path.csv".
inline InitialCondition make_initial_condition(const std::string& spec, long long window, std::uint64_t seed) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "file") return read_initial_condition_csv(rest);
  std::map<std::string, double> kv;
  if (!rest.empty()) {
    for (const auto& item : split(rest, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("bad initial condition parameter '" + item + "'");
      kv[item.substr(0, eq)] = parse_real(item.substr(eq + 1));
    }
  }
  auto need = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("initial condition '") + kind + "' needs " + key);
    return it->second;
  };
  if (kind == "sine") return generate_sine(need("eps"), need("gamma"), window);
  return generate_iid(kind, need("mean"), window, seed);
}

struct ShapeReport {
  std::size_t pairs = 0;
  double max_ratio = 0;
  std::vector<double> levels;    ///< r grid
  std::vector<double> survival;  ///< fraction of pairs with ratio >= r
  std::vector<double> ratios;    ///< sorted sample
};

/// |F(x2) - F(x1)| / |x2 - x1|^gamma over random pairs in [0, X] (x1 != x2).
inline ShapeReport shape_exponent_check(const InitialCondition& ic, double gamma, std::size_t trials,
                                        std::uint64_t seed = 1) {
  if (ic.window() < 1) throw std::invalid_argument("empty initial condition");
  Rng rng = make_rng(seed, 0x5a);
  std::uniform_int_distribution<long long> pick(0, ic.window());
  ShapeReport rep;
  rep.ratios.reserve(trials);
  while (rep.ratios.size() < trials) {
    long long a = pick(rng), b = pick(rng);
    if (a == b) continue;
    double num = std::abs(static_cast<double>(ic.cumulative_fluctuation(b) - ic.cumulative_fluctuation(a)));
    rep.ratios.push_back(num / std::pow(std::abs(static_cast<double>(b - a)), gamma));
  }
  std::sort(rep.ratios.begin(), rep.ratios.end());
  rep.pairs = rep.ratios.size();
  rep.max_ratio = rep.ratios.empty() ? 0 : rep.ratios.back();
  for (double r = 0; r <= 10.0 + 1e-9; r += 0.5) {
    auto it = std::lower_bound(rep.ratios.begin(), rep.ratios.end(), r);
    rep.levels.push_back(r);
    rep.survival.push_back(static_cast<double>(rep.ratios.end() - it) / static_cast<double>(rep.pairs));
  }
  return rep;
}

/// Maximum ratio over every pair in [0, min(X, limit)].
inline double shape_exponent_max_ratio(const InitialCondition& ic, double gamma, long long limit) {
  long long X = std::min(ic.window(), limit);
  double best = 0;
  for (long long a = 0; a <= X; ++a)
    for (long long b = a + 1; b <= X; ++b) {
      double num = std::abs(static_cast<double>(ic.cumulative_fluctuation(b) - ic.cumulative_fluctuation(a)));
      best = std::max(best, num / std::pow(static_cast<double>(b - a), gamma));
    }
  return best;
}

/// Window X such that the expected number of particles started beyond X that
/// reach front_estimate before `horizon` is below delta (reach <= 2 * Chernoff tail).
inline long long suggest_window(double front_estimate, double horizon, double density, double delta) {
  long long d = 1;
  auto tail_mass = [&](long long d0) {
    double s = 0;
    for (long long k = d0;; ++k) {
      double term = density * 2.0 * chernoff_tail(horizon, static_cast<double>(k));
      s += term;
      if (term < delta * 1e-6 || k > d0 + 100000000) break;
    }
    return s;
  };
  while (tail_mass(d) > delta) d *= 2;
  long long lo = d / 2, hi = d;
  while (lo + 1 < hi) {
    long long mid = (lo + hi) / 2;
    if (tail_mass(mid) > delta) lo = mid;
    else hi = mid;
  }
  return static_cast<long long>(std::ceil(front_estimate)) + hi;
}

}  // namespace frontlab
