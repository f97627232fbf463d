#pragma once

// Similarity solution of the one-phase Stefan problem with constant initial
// density rho in (0,1): front r(t) = kappa sqrt(t).

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "io.hpp"
#include "kernels.hpp"

namespace frontlab {

namespace detail {

// exp(z^2) erfc(z); continued fraction once the direct product loses accuracy.
inline double erfcx(double z) {
  if (z < 4.0) return std::exp(z * z) * std::erfc(z);
  // Lentz evaluation of erfcx(z) = (1/sqrt(pi)) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))).
  const double tiny = 1e-300;
  double f = z, C = z, D = 0;
  for (int n = 1; n < 500; ++n) {
    double a = 0.5 * n;
    D = z + a * D;
    if (D == 0) D = tiny;
    C = z + a / C;
    if (C == 0) C = tiny;
    D = 1.0 / D;
    double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (std::sqrt(M_PI) * f);
}

}  // namespace detail

/// g(kappa) = kappa Erf(1,kappa) / Hk(1,kappa), increasing from 0 to 1.
inline double stefan_g(double kappa) {
  if (kappa <= 0) return 0.0;
  return kappa * std::sqrt(2.0 * M_PI) * 0.5 * detail::erfcx(kappa / std::sqrt(2.0));
}

inline double stefan_g_prime(double kappa) {
  if (kappa <= 0) return std::sqrt(M_PI / 2.0);
  double g = stefan_g(kappa);
  return (1.0 + kappa * kappa) * g / kappa - kappa;
}

/// Unique positive root of g(kappa) = rho.
inline double solve_kappa(double rho, double tol = 1e-12) {
  if (!(rho > 0 && rho < 1)) throw std::domain_error("kappa is defined only for density in (0,1)");
  double lo = 0, hi = 1;
  while (stefan_g(hi) < rho) {
    lo = hi;
    hi *= 2;
    if (hi > 1e8) throw std::runtime_error("kappa bracket failed");
  }
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (stefan_g(mid) < rho ? lo : hi) = mid;
  }
  double k = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    double step = (stefan_g(k) - rho) / stefan_g_prime(k);
    double next = k - step;
    if (!(next > lo && next < hi)) break;
    k = next;
    if (std::abs(step) < 1e-16 * k) break;
  }
  if (std::abs(stefan_g(k) - rho) > std::max(tol, 1e-10)) throw std::runtime_error("kappa solver did not converge");
  return k;
}

struct FluxResidual {
  double residual = 0;
  double error_estimate = 0;
  bool converged = true;
};

class StefanSolution {
 public:
  explicit StefanSolution(double rho) : rho_(rho), kappa_(solve_kappa(rho)), e1_(gaussian_tail(1.0, kappa_)) {}

  double rho() const { return rho_; }
  double kappa() const { return kappa_; }
  double front(double t) const { return kappa_ * std::sqrt(t); }

  double u(double t, double xi) const {
    if (t <= 0) return xi > 0 ? rho_ : 0.0;
    if (xi < front(t)) return 0.0;
    return rho_ / e1_ * (e1_ - gaussian_tail(t, xi));
  }

  /// |int_0^inf (rho - u 1{xi > r}) dxi - kappa sqrt(t)| by quadrature.
  FluxResidual flux_identity_residual(double t) const {
    if (!(t > 0)) throw std::domain_error("flux identity needs t > 0");
    double r = front(t);
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0, l1 = 0;
    std::size_t levels = 0;
    FluxResidual out;
    double tail = 0;
    try {
      tail = integrator.integrate([&](double s) { return rho_ - u(t, r + s); }, 0.0,
                                  std::numeric_limits<double>::infinity(), 1e-13, &err, &l1, &levels);
    } catch (const std::exception&) {
      out.converged = false;
    }
    out.residual = std::abs(rho_ * r + tail - r);
    out.error_estimate = err;
    if (!(err < 1e-8)) out.converged = false;
    return out;
  }

  void write_profile_csv(std::ostream& out, const std::vector<double>& times, double xi_max, int points) const {
    out << schema_line("stefan-profile") << "# rho=" << format_real(rho_) << " kappa=" << format_real(kappa_)
        << "\n";
    out << "t,xi,u\n";
    for (double t : times)
      for (int i = 0; i <= points; ++i) {
        double xi = xi_max * i / points;
        out << format_real(t) << ',' << format_real(xi) << ',' << format_real(u(t, xi)) << '\n';
      }
  }

 private:
  double rho_;
  double kappa_;
  double e1_;
};

inline void write_kappa_table(std::ostream& out, const std::vector<double>& rhos) {
  out << schema_line("kappa-table") << "rho,kappa\n";
  for (double rho : rhos) out << format_real(rho) << ',' << format_real(solve_kappa(rho)) << '\n';
}

}  // namespace frontlab
