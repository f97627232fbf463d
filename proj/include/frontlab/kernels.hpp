#pragma once

// Transition probabilities of the rate-1 continuous-time simple random walk W
// (jumps +1/-1 with probability 1/2 each) and their Gaussian counterparts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "io.hpp"
#include "random.hpp"

namespace frontlab {

inline constexpr double kDefaultTailTol = 1e-12;
inline constexpr double kPoissonTailTol = 1e-14;

namespace detail {

inline double log_poisson(double t, long long n) {
  return -t + static_cast<double>(n) * std::log(t) - std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace detail

/// Chernoff bound on P(W(t) >= h) for h >= 0.
inline double chernoff_tail(double t, double h) {
  if (h <= 0) return 1.0;
  if (t <= 0) return 0.0;
  double r = h / t;
  double rate = h * std::asinh(r) - h * r / (std::hypot(1.0, r) + 1.0);
  return std::exp(-rate);
}

/// P(W(t) = x) as a Poisson(t) mixture of symmetric binomial walks; the
/// mixture is cut once the remaining Poisson mass drops below `tail_tol`.
inline double discrete_heat_kernel(double t, long long x, double tail_tol = kPoissonTailTol) {
  if (t < 0) throw std::domain_error("heat kernel at negative time");
  x = x < 0 ? -x : x;
  if (t == 0) return x == 0 ? 1.0 : 0.0;
  const double log_half_t = std::log(t / 2.0);
  long long n = x;
  long long skip = static_cast<long long>(std::floor(t - 14.0 * std::sqrt(t) - 20.0));
  if (skip > n) n = skip + ((skip - x) & 1LL);
  double sum = 0;
  for (;; n += 2) {
    long long k = (n + x) / 2;
    double lt = -t + static_cast<double>(n) * log_half_t - std::lgamma(static_cast<double>(k) + 1.0) -
                std::lgamma(static_cast<double>(n - k) + 1.0);
    sum += std::exp(lt);
    if (static_cast<double>(n) > t) {
      // Poisson tail beyond n is at most p(n+1) / (1 - t/(n+2)).
      double tail = std::exp(detail::log_poisson(t, n + 1)) / (1.0 - t / static_cast<double>(n + 2));
      if (tail < tail_tol) break;
    }
  }
  return sum;
}

inline double gaussian_kernel(double t, double xi) {
  return std::exp(-xi * xi / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
}

/// Gaussian tail P(B(t) >= xi).
inline double gaussian_tail(double t, double xi) { return 0.5 * std::erfc(xi / std::sqrt(2.0 * t)); }

/// hk, erf, reach probability and V(t) tabulated at a single time t over the
/// symmetric range |x| <= reach(); beyond it erf is below the tail tolerance.
class KernelTable {
 public:
  explicit KernelTable(double t, double tail_tol = kDefaultTailTol) : t_(t) {
    if (t < 0) throw std::domain_error("kernel table at negative time");
    long long X = 0;
    while (chernoff_tail(t, static_cast<double>(X + 1)) >= tail_tol * 1e-2) X = X == 0 ? 1 : X * 2;
    long long lo = X / 2, hi = X;  // refine to the smallest admissible reach
    while (lo < hi) {
      long long mid = (lo + hi) / 2;
      if (chernoff_tail(t, static_cast<double>(mid + 1)) < tail_tol * 1e-2) hi = mid;
      else lo = mid + 1;
    }
    X_ = hi;
    hk_.resize(static_cast<std::size_t>(X_) + 1);
    for (long long x = 0; x <= X_; ++x) hk_[static_cast<std::size_t>(x)] = discrete_heat_kernel(t, x);
    // erf over [-X, X+1], built downward so erf(x) - erf(x+1) = hk(x) holds exactly.
    erf_.assign(static_cast<std::size_t>(2 * X_ + 2), 0.0);
    for (long long x = X_; x >= -X_; --x) erf_[index(x)] = erf_[index(x + 1)] + hk(x);
    V_ = 0;
    for (long long y = X_; y >= 1; --y) V_ += erf(y);
  }

  double t() const { return t_; }
  long long reach() const { return X_; }

  double hk(long long x) const {
    x = x < 0 ? -x : x;
    return x > X_ ? 0.0 : hk_[static_cast<std::size_t>(x)];
  }

  /// P(W(t) >= x).
  double erf(long long x) const {
    if (x > X_) return 0.0;
    if (x < -X_) return erf_[index(-X_)];
    return erf_[index(x)];
  }

  /// P(max_{s<=t} W(s) >= x), by reflection: P(W >= x) + P(W > x).
  double reach_probability(long long x) const {
    if (x <= 0) return 1.0;
    return std::min(1.0, 2.0 * erf(x) - hk(x));
  }

  /// V(t) = sum_{y>0} erf(t,y) = E[max(W(t), 0)].
  double centering_V() const { return V_; }

  /// E[(W(t) - x)_+] for integer x >= 0.
  double positive_part_mean(long long x) const {
    double s = 0;
    for (long long y = std::max<long long>(x + 1, 1); y <= X_; ++y) s += erf(y);
    return s;
  }

  void write_csv(std::ostream& out) const {
    out << schema_line("kernel-table") << "# t=" << format_real(t_) << "\n";
    out << "x,hk,erf,reach\n";
    for (long long x = -X_; x <= X_; ++x)
      out << x << ',' << format_real(hk(x)) << ',' << format_real(erf(x)) << ','
          << format_real(reach_probability(x)) << '\n';
  }

 private:
  std::size_t index(long long x) const { return static_cast<std::size_t>(x + X_); }

  double t_;
  long long X_ = 0;
  std::vector<double> hk_;
  std::vector<double> erf_;
  double V_ = 0;
};

/// Memo of kernel tables keyed by t; many concurrent readers, one writer at a time.
class KernelCache {
 public:
  explicit KernelCache(double tail_tol = kDefaultTailTol) : tol_(tail_tol) {}

  std::shared_ptr<const KernelTable> get(double t) {
    {
      std::shared_lock lock(mu_);
      auto it = tables_.find(t);
      if (it != tables_.end()) return it->second;
    }
    auto table = std::make_shared<const KernelTable>(t, tol_);
    std::unique_lock lock(mu_);
    auto [it, inserted] = tables_.emplace(t, std::move(table));
    return it->second;
  }

 private:
  double tol_;
  std::shared_mutex mu_;
  std::unordered_map<double, std::shared_ptr<const KernelTable>> tables_;
};

inline KernelCache& global_kernel_cache() {
  static KernelCache cache;
  return cache;
}

inline double discrete_erf(double t, long long x) { return global_kernel_cache().get(t)->erf(x); }
inline double centering_V(double t) { return global_kernel_cache().get(t)->centering_V(); }

/// W(t) sampled exactly: Poisson(t) jumps, Binomial(n, 1/2) of them to the right.
inline long long sample_displacement(double t, Rng& rng) {
  if (t <= 0) return 0;
  long long n = std::poisson_distribution<long long>(t)(rng);
  if (n == 0) return 0;
  long long k = std::binomial_distribution<long long>(n, 0.5)(rng);
  return 2 * k - n;
}

struct ReachEstimate {
  double exact = 0;  ///< 2 erf - hk
  double bound = 0;  ///< 2 erf
  double monte_carlo = -1;
  double monte_carlo_se = 0;
  std::size_t samples = 0;
};

inline ReachEstimate reach_probability(double t, long long x, std::size_t mc_samples = 0, std::uint64_t seed = 0) {
  ReachEstimate out;
  auto table = global_kernel_cache().get(t);
  out.exact = table->reach_probability(x);
  out.bound = x <= 0 ? 1.0 : std::min(1.0, 2.0 * table->erf(x));
  if (mc_samples > 0) {
    Rng rng = make_rng(seed, 0);
    std::size_t hits = 0;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < mc_samples; ++i) {
      if (x <= 0) {
        ++hits;
        continue;
      }
      long long n = std::poisson_distribution<long long>(t)(rng);
      long long pos = 0;
      for (long long j = 0; j < n; ++j) {
        pos += coin(rng) ? 1 : -1;
        if (pos >= x) {
          ++hits;
          break;
        }
      }
    }
    double p = static_cast<double>(hits) / static_cast<double>(mc_samples);
    out.monte_carlo = p;
    out.monte_carlo_se = std::sqrt(std::max(p * (1 - p), 1e-300) / static_cast<double>(mc_samples));
    out.samples = mc_samples;
  }
  return out;
}

/// Largest tau with 2 * chernoff_tail(tau, h) <= delta: over a window of that
/// length a walk reaches distance h with probability at most delta.
inline double lease_time(double h, double delta) {
  if (h <= 0) return 0.0;
  double lo = 0, hi = 1;
  while (2.0 * chernoff_tail(hi, h) <= delta) hi *= 2;
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    if (2.0 * chernoff_tail(mid, h) <= delta) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace frontlab
