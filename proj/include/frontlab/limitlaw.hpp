#pragma once

// Limit objects: Hit = 2 sigma int [B]_+ for a Brownian path B, the
// deterministic sine analogue, and their inverses (the limiting fronts).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "io.hpp"
#include "random.hpp"
#include "stepfn.hpp"

namespace frontlab {

struct LimitPath {
  double sigma = 1;
  double dxi = 0;
  std::vector<double> brownian;  ///< B at xi = i * dxi
  std::vector<double> hit;       ///< 2 sigma int_0^xi [B]_+ (trapezoid)
  StepFunction frnt;

  double xi_max() const { return dxi * static_cast<double>(brownian.size() - 1); }

  StepFunction hit_step() const {
    std::vector<double> b(hit.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = dxi * static_cast<double>(i);
    return StepFunction(std::move(b), hit, xi_max());
  }

  void write_csv(std::ostream& out) const {
    out << schema_line("limit-path") << "# sigma=" << format_real(sigma) << "\n" << "xi,B,hit\n";
    for (std::size_t i = 0; i < hit.size(); ++i)
      out << format_real(dxi * static_cast<double>(i)) << ',' << format_real(brownian[i]) << ','
          << format_real(hit[i]) << '\n';
  }
};

/// Trapezoid rule applied to the clipped values [B]_+, so hit is flat exactly
/// across grid cells where B <= 0 at both ends.
inline std::vector<double> hit_from_brownian(const std::vector<double>& B, double dxi, double sigma) {
  std::vector<double> h(B.size(), 0.0);
  for (std::size_t i = 1; i < B.size(); ++i)
    h[i] = h[i - 1] + sigma * dxi * (std::max(B[i - 1], 0.0) + std::max(B[i], 0.0));
  return h;
}

/// Halves the grid by inserting Brownian-bridge midpoints; the coarse values are kept.
inline std::vector<double> refine_brownian(const std::vector<double>& B, double dxi, Rng& rng) {
  std::normal_distribution<double> z(0.0, std::sqrt(dxi / 4.0));
  std::vector<double> out;
  out.reserve(2 * B.size() - 1);
  for (std::size_t i = 0; i + 1 < B.size(); ++i) {
    out.push_back(B[i]);
    out.push_back(0.5 * (B[i] + B[i + 1]) + z(rng));
  }
  out.push_back(B.back());
  return out;
}

/// Samples B on [0, xi_max] and extends it (same stream) by doubling until
/// hit exceeds `horizon`. Frnt_* is heavy-tailed, so the number of doublings
/// is capped; use sample_limit_front_value for distribution samples.
inline LimitPath sample_limit_front(double sigma, double xi_max, double dxi, std::uint64_t seed, double horizon = 1.0,
                                    int max_extensions = 12) {
  if (!(sigma > 0) || !(dxi > 0) || !(xi_max > 0)) throw std::invalid_argument("limit path needs positive parameters");
  Rng rng = make_rng(seed, 0xb1);
  std::normal_distribution<double> z(0.0, std::sqrt(dxi));
  LimitPath p;
  p.sigma = sigma;
  p.dxi = dxi;
  p.brownian.push_back(0.0);
  p.hit.push_back(0.0);
  auto n_target = static_cast<std::size_t>(std::ceil(xi_max / dxi));
  for (int ext = 0;; ++ext) {
    while (p.brownian.size() <= n_target) {
      double prev = p.brownian.back();
      double next = prev + z(rng);
      p.brownian.push_back(next);
      p.hit.push_back(p.hit.back() + sigma * dxi * (std::max(prev, 0.0) + std::max(next, 0.0)));
    }
    if (p.hit.back() > horizon) break;
    if (ext == max_extensions) throw std::runtime_error("limit path did not reach the horizon");
    n_target *= 2;
  }
  p.frnt = invert(p.hit_step());
  return p;
}

/// Frnt_*(t) = first grid point where hit exceeds t, generated without
/// storing the path; it draws the same stream as sample_limit_front, so the
/// two agree. Returns +inf once xi passes `xi_cap`.
inline double sample_limit_front_value(double sigma, double t, double dxi, std::uint64_t seed, double xi_cap = kInf) {
  if (!(sigma > 0) || !(dxi > 0)) throw std::invalid_argument("limit path needs positive parameters");
  Rng rng = make_rng(seed, 0xb1);
  std::normal_distribution<double> z(0.0, std::sqrt(dxi));
  double b = 0, h = 0;
  if (h > t) return 0.0;
  for (std::uint64_t i = 1;; ++i) {
    double xi = dxi * static_cast<double>(i);
    if (xi > xi_cap) return kInf;
    double next = b + z(rng);
    h += sigma * dxi * (std::max(b, 0.0) + std::max(next, 0.0));
    b = next;
    if (h > t) return xi;
  }
}

/// 2 int_0^xi [sin]_+.
inline double hit_sine(double xi) {
  if (xi <= 0) return 0.0;
  double k = std::floor(xi / (2 * M_PI));
  double eta = xi - 2 * M_PI * k;
  return 4 * k + (eta <= M_PI ? 2 * (1 - std::cos(eta)) : 4.0);
}

/// Right-continuous inverse of hit_sine: Frnt(4k + s) = 2 pi k + arccos(1 - s/2), s in [0,4).
inline double deterministic_front(double t) {
  if (t < 0) throw std::domain_error("front at negative time");
  double k = std::floor(t / 4);
  double s = t - 4 * k;
  return 2 * M_PI * k + std::acos(std::clamp(1 - s / 2, -1.0, 1.0));
}

}  // namespace frontlab
