#include <catch_amalgamated.hpp>

#include <sstream>

#include <frontlab/stefan.hpp>

using namespace frontlab;
using Catch::Approx;

namespace {

// g written out directly from the Gaussian density and tail.
double g_oracle(double k) {
  double tail = 0.5 * std::erfc(k / std::sqrt(2.0));
  double dens = std::exp(-k * k / 2) / std::sqrt(2 * M_PI);
  return k * tail / dens;
}

double bisect(double rho) {
  double lo = 0, hi = 10;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g_oracle(mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("kappa solves its defining equation") {
  for (int i = 1; i <= 19; ++i) {
    double rho = 0.05 * i;
    double k = solve_kappa(rho);
    CHECK(std::abs(stefan_g(k) - rho) <= 1e-10);
    CHECK(std::abs(g_oracle(k) - rho) <= 1e-10);
  }
}

TEST_CASE("kappa at one half matches bisection") {
  double k = solve_kappa(0.5);
  CHECK(std::abs(k - bisect(0.5)) <= 1e-8);
  CHECK(k == Approx(0.612).margin(5e-4));
}

TEST_CASE("kappa increases with the density") {
  CHECK(solve_kappa(0.9) > solve_kappa(0.5));
  CHECK(solve_kappa(0.5) > solve_kappa(0.1));
  CHECK(solve_kappa(0.999) > 10);
  CHECK(std::isfinite(solve_kappa(0.99999)));
}

TEST_CASE("densities outside (0,1) are refused") {
  CHECK_THROWS_AS(solve_kappa(1.0), std::domain_error);
  CHECK_THROWS_AS(solve_kappa(1.2), std::domain_error);
  CHECK_THROWS_AS(solve_kappa(0.0), std::domain_error);
  CHECK_THROWS_AS(StefanSolution(1.5), std::domain_error);
}

TEST_CASE("g is increasing from 0 to 1") {
  CHECK(stefan_g(0) == 0);
  double prev = 0;
  for (double k = 0.01; k < 40; k *= 1.3) {
    double g = stefan_g(k);
    CHECK(g > prev);
    CHECK(g < 1);
    CHECK(std::isfinite(g));
    prev = g;
  }
  CHECK(stefan_g(1e4) == Approx(1).margin(1e-6));
}

TEST_CASE("flux identity residual") {
  StefanSolution sol(0.5);
  for (double t : {0.5, 1.0, 4.0}) {
    auto r = sol.flux_identity_residual(t);
    CHECK(r.residual <= 1e-6);
    CHECK(r.converged);
  }
  CHECK_THROWS_AS(sol.flux_identity_residual(0), std::domain_error);
}

TEST_CASE("profile vanishes at the front and stays below rho") {
  StefanSolution sol(0.7);
  for (double t : {0.3, 1.0, 5.0}) {
    double r = sol.front(t);
    CHECK(sol.u(t, r) == Approx(0).margin(1e-14));
    double prev = 0;
    for (double xi = r; xi < r + 20; xi += 0.1) {
      double u = sol.u(t, xi);
      CHECK(u >= prev);
      if (gaussian_tail(t, xi) > 1e-12) CHECK(u < 0.7);
      CHECK(u <= 0.7);
      prev = u;
    }
  }
}

TEST_CASE("profile solves the heat equation") {
  StefanSolution sol(0.5);
  const double h = 1e-3;
  for (double t : {0.5, 2.0})
    for (double xi : {1.0, 1.5, 3.0}) {
      if (xi - 2 * h <= sol.front(t + h)) continue;
      double dt = (sol.u(t + h, xi) - sol.u(t - h, xi)) / (2 * h);
      double dxx = (sol.u(t, xi + h) - 2 * sol.u(t, xi) + sol.u(t, xi - h)) / (h * h);
      CHECK(std::abs(dt - 0.5 * dxx) <= 1e-4);
    }
}

TEST_CASE("front speed is half the boundary gradient") {
  StefanSolution sol(0.5);
  const double h = 1e-5;
  for (double t : {0.5, 1.0, 3.0}) {
    double r = sol.front(t);
    double speed = (sol.front(t + h) - sol.front(t - h)) / (2 * h);
    double grad = (sol.u(t, r + h) - sol.u(t, r)) / h;
    CHECK(speed == Approx(0.5 * grad).epsilon(1e-3));
  }
}

TEST_CASE("kappa table and profile export") {
  std::ostringstream k, p;
  write_kappa_table(k, {0.25, 0.5});
  CHECK(k.str().find("rho,kappa") != std::string::npos);
  StefanSolution(0.5).write_profile_csv(p, {1.0}, 3.0, 10);
  CHECK(p.str().find("t,xi,u") != std::string::npos);
}
