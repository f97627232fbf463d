#pragma once

// Exact event-driven simulation of the free particle system together with any
// number of absorbing boundaries driven by the same particle motions: fronts
// (frictionless, MDLA, pushed) and prescribed trajectories Q(t).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "initcond.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "random.hpp"
#include "stepfn.hpp"

namespace frontlab {

enum class TrajectoryKind {
  front_frictionless,
  front_mdla,
  front_pushed,
  linear,
  truncated_upper,
  truncated_lower,
  custom
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::front_frictionless;
  double t0 = 0;
  long long x0 = 0;
  double v = 0;
  double gamma_prime = 0;
  double eps = 0;
  StepFunction custom;

  static TrajectorySpec frictionless() { return {}; }
  static TrajectorySpec mdla() { return with_kind(TrajectoryKind::front_mdla); }
  static TrajectorySpec pushed() { return with_kind(TrajectoryKind::front_pushed); }

  static TrajectorySpec linear(double t0, long long x0, double v) {
    if (!(v > 0)) throw std::invalid_argument("linear trajectory needs v > 0");
    TrajectorySpec s = with_kind(TrajectoryKind::linear);
    s.t0 = t0;
    s.x0 = x0;
    s.v = v;
    return s;
  }

  static TrajectorySpec truncated_upper(double t0, long long x0, double v, double gamma_prime, double eps) {
    TrajectorySpec s = linear(t0, x0, v);
    s.kind = TrajectoryKind::truncated_upper;
    s.gamma_prime = gamma_prime;
    s.eps = eps;
    return s;
  }

  static TrajectorySpec truncated_lower(double t0, long long x0, double v, double gamma_prime, double eps) {
    TrajectorySpec s = truncated_upper(t0, x0, v, gamma_prime, eps);
    s.kind = TrajectoryKind::truncated_lower;
    return s;
  }

  static TrajectorySpec custom_path(StepFunction q) {
    TrajectorySpec s = with_kind(TrajectoryKind::custom);
    s.custom = std::move(q);
    return s;
  }

  bool is_front() const {
    return kind == TrajectoryKind::front_frictionless || kind == TrajectoryKind::front_mdla ||
           kind == TrajectoryKind::front_pushed;
  }

  /// floor(eps^{-gamma'}), the depth below x0 at which truncated trajectories are cut.
  long long truncation() const { return static_cast<long long>(std::floor(std::pow(eps, -gamma_prime))); }

  std::string name() const {
    switch (kind) {
      case TrajectoryKind::front_frictionless: return "frictionless";
      case TrajectoryKind::front_mdla: return "mdla";
      case TrajectoryKind::front_pushed: return "pushed";
      case TrajectoryKind::linear: return "linear";
      case TrajectoryKind::truncated_upper: return "truncated-upper";
      case TrajectoryKind::truncated_lower: return "truncated-lower";
      case TrajectoryKind::custom: return "custom";
    }
    return "?";
  }

 private:
  static TrajectorySpec with_kind(TrajectoryKind k) {
    TrajectorySpec s;
    s.kind = k;
    return s;
  }
};

/// Integer-valued nondecreasing step path: values[i] on [times[i], times[i+1]).
struct IntegerPath {
  std::vector<double> times;
  std::vector<long long> values;

  long long at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    return values[static_cast<std::size_t>(it - times.begin()) - (it == times.begin() ? 0 : 1)];
  }
};

/// L(t) = x0 - ceil(v (t0 - t)) = x0 + floor(v (t - t0)) and its truncations, on [0, horizon].
inline IntegerPath deterministic_path(const TrajectorySpec& s, double horizon) {
  IntegerPath p;
  auto push = [&](double t, long long value) {
    if (!p.values.empty() && p.values.back() == value) return;
    if (!p.times.empty() && t <= p.times.back()) {
      p.values.back() = value;
      return;
    }
    p.times.push_back(t);
    p.values.push_back(value);
  };
  if (s.kind == TrajectoryKind::custom) {
    const auto& b = s.custom.breakpoints();
    const auto& v = s.custom.values();
    for (std::size_t i = 0; i < b.size() && b[i] <= horizon; ++i) {
      if (!std::isfinite(v[i]) || v[i] != std::floor(v[i]))
        throw std::invalid_argument("custom trajectory must be finite and integer valued on the horizon");
      push(b[i], static_cast<long long>(v[i]));
    }
    return p;
  }
  if (s.is_front()) throw std::logic_error("front trajectories are not prescribed");
  long long cut = s.kind == TrajectoryKind::linear ? 0 : s.x0 - s.truncation();
  auto map = [&](long long L) {
    switch (s.kind) {
      case TrajectoryKind::truncated_upper: return std::max(L, cut);
      case TrajectoryKind::truncated_lower: return L >= cut ? std::max(L, 0LL) : 0LL;
      default: return L;
    }
  };
  long long j = static_cast<long long>(std::floor(-s.v * s.t0));
  push(0.0, map(s.x0 + j));
  while (true) {
    double t = s.t0 + static_cast<double>(j + 1) / s.v;
    if (t > horizon) break;
    ++j;
    if (t <= 0) continue;
    push(t, map(s.x0 + j));
  }
  return p;
}

/// Smallest j >= 1 with occupancy[0] + ... + occupancy[j-1] == j; nullopt when
/// the cumulative count stays above the diagonal over the whole sequence.
inline std::optional<long long> compute_k(std::span<const long long> occupancy) {
  long long c = 0;
  for (std::size_t j = 1; j <= occupancy.size(); ++j) {
    c += occupancy[j - 1];
    if (c == static_cast<long long>(j)) return static_cast<long long>(j);
  }
  return std::nullopt;
}

struct DecompositionSnapshot {
  double t = 0;
  long long Q = 0;
  long long N = 0;
  long long F = 0;
  long long M = 0;
  long long G = 0;

  long long residual() const { return N - (Q - F + M + G); }
};

struct AbsorberResult {
  TrajectorySpec spec;
  std::vector<std::pair<double, long long>> path;        ///< (time, Q) at every change, starting at t = 0
  std::vector<std::pair<long long, double>> hitting;     ///< (level, first time Q > level), fronts only
  std::vector<DecompositionSnapshot> snapshots;          ///< at checkpoints (not for pushed fronts)
  std::vector<std::pair<double, long long>> checkpoint_q;
  long long final_q = 0;
  long long final_n = 0;
  bool exploded = false;
  double explosion_time = kInf;

  /// Q as a step function on [0, end]; +inf from the explosion time on.
  StepFunction front_path(double end) const {
    std::vector<double> b;
    std::vector<double> v;
    for (const auto& [t, q] : path) {
      if (q < 0) throw std::domain_error("negative path cannot be stored as a step function");
      if (!b.empty() && t == b.back()) {
        v.back() = static_cast<double>(q);
        continue;
      }
      b.push_back(t);
      v.push_back(static_cast<double>(q));
    }
    if (exploded) {
      if (explosion_time == b.back()) v.back() = kInf;
      else {
        b.push_back(explosion_time);
        v.push_back(kInf);
      }
    }
    return StepFunction(std::move(b), std::move(v), std::max(end, b.back()));
  }
};

struct RunResult {
  std::vector<AbsorberResult> absorbers;
  double end_time = 0;
  bool exploded = false;
  double explosion_time = kInf;
  std::uint64_t jumps = 0;
  std::uint64_t activations = 0;
  std::uint64_t far_field_violations = 0;
  bool window_warning = false;
  /// (unit interval index, lower site of bond) -> number of crossings; only when requested.
  std::map<std::pair<long long, long long>, long long> bond_crossings;
  std::map<long long, long long> jumps_per_interval;
};

struct SimulationOptions {
  double horizon = 0;
  std::vector<double> checkpoints;
  std::uint64_t seed = 0;
  /// Particles dead for every absorber stop being simulated; their free
  /// positions are resampled from the heat kernel when a checkpoint needs them.
  bool lazy_dead = false;
  /// Particles farther than c sqrt(t+1) + b beyond every boundary stay frozen
  /// until the boundary approaches; their displacement is then sampled.
  bool far_field = false;
  double far_field_c = 8.0;
  long long far_field_b = 10;
  long long explosion_buffer = 0;
  bool record_bond_crossings = false;
  bool record_hitting_times = true;
  std::ostream* event_log = nullptr;
};

class Simulation {
 public:
  Simulation(const InitialCondition& ic, std::vector<TrajectorySpec> specs, SimulationOptions opt)
      : ic_(ic), opt_(std::move(opt)), rng_(make_rng(opt_.seed, 0x51)) {
    if (specs.empty()) throw std::invalid_argument("simulation needs at least one absorber");
    if (specs.size() > 32) throw std::invalid_argument("at most 32 absorbers");
    for (const auto& s : specs)
      if (s.kind == TrajectoryKind::front_pushed && specs.size() != 1)
        throw std::invalid_argument("a pushed front must be the only absorber");
    if (opt_.record_bond_crossings && (opt_.lazy_dead || opt_.far_field))
      throw std::invalid_argument("bond crossings need every particle simulated explicitly");
    if (!(opt_.horizon >= 0)) throw std::invalid_argument("horizon must be nonnegative");
    full_mask_ = specs.size() == 32 ? 0xffffffffu : ((1u << specs.size()) - 1u);
    explosion_limit_ = ic.window() - opt_.explosion_buffer;

    for (auto& s : specs) {
      Absorber a;
      a.spec = s;
      if (!s.is_front()) a.det = deterministic_path(s, std::max(opt_.horizon, 0.0));
      a.q = s.is_front() ? 0 : (a.det.values.empty() ? 0 : a.det.values.front());
      a.result.spec = s;
      a.result.path.emplace_back(0.0, a.q);
      abs_.push_back(std::move(a));
    }

    // Particles in site order, so dormant ones are activated by a moving pointer.
    for (long long x = 1; x <= ic.window(); ++x)
      for (int c = 0; c < ic.count(x); ++c) {
        start_.push_back(x);
        pos_.push_back(x);
      }
    const std::size_t P = start_.size();
    mask_.assign(P, full_mask_);
    next_.assign(P, -1);
    prev_.assign(P, -1);
    moving_index_.assign(P, -1);
    frozen_time_.assign(P, 0.0);
    active_.assign(P, 0);
    heads_.reset(-1);
    for (auto& a : abs_) a.cnt.reset(0);

    refresh_far_field(true);
    for (std::size_t a = 0; a < abs_.size(); ++a)
      if (!abs_[a].spec.is_front()) raise_q(a, abs_[a].q, true);
  }

  // --- observation ---------------------------------------------------------

  double time() const { return time_; }
  std::size_t absorber_count() const { return abs_.size(); }
  long long q(std::size_t a) const { return abs_[a].q; }
  long long absorbed(std::size_t a) const { return abs_[a].n; }
  std::size_t particle_count() const { return start_.size(); }
  long long position(std::size_t pid) const { return pos_[pid]; }
  long long start_position(std::size_t pid) const { return start_[pid]; }
  bool alive(std::size_t pid, std::size_t a) const { return (mask_[pid] >> a) & 1u; }
  long long occupancy(std::size_t a, long long x) const { return abs_[a].cnt.get(x); }
  bool exploded() const { return exploded_; }
  void request_stop() { stop_ = true; }

  /// Called after every processed event.
  std::function<void(const Simulation&)> observer;

  // --- driving -------------------------------------------------------------

  RunResult run() {
    std::vector<double> cps;
    for (double c : opt_.checkpoints)
      if (c >= 0 && c <= opt_.horizon) cps.push_back(c);
    std::sort(cps.begin(), cps.end());
    std::size_t ci = 0;
    std::exponential_distribution<double> expo(1.0);
    double ff_next = 0;
    // The pending jump time survives deterministic stops while the rate is
    // unchanged, so the jump sequence does not depend on prescribed absorbers.
    double pending = kInf;
    std::size_t pending_rate = 0;
    while (!exploded_ && !stop_) {
      double next_q = kInf;
      for (const auto& a : abs_)
        if (!a.spec.is_front() && a.det_index + 1 < a.det.times.size())
          next_q = std::min(next_q, a.det.times[a.det_index + 1]);
      double next_cp = ci < cps.size() ? cps[ci] : kInf;
      double next_det = std::min({next_q, next_cp, opt_.horizon});
      if (moving_.size() != pending_rate || pending == kInf) {
        pending_rate = moving_.size();
        pending = pending_rate > 0 ? time_ + expo(rng_) / static_cast<double>(pending_rate) : kInf;
      }
      if (pending < next_det) {
        time_ = pending;
        pending = kInf;
        std::size_t pid = moving_[std::uniform_int_distribution<std::size_t>(0, moving_.size() - 1)(rng_)];
        int dir = (rng_() >> 63) ? 1 : -1;
        apply_jump(pid, dir);
        if (opt_.far_field && time_ >= ff_next) {
          refresh_far_field(false);
          ff_next = time_ + 1.0;
        }
        if (observer) observer(*this);
        continue;
      }
      time_ = next_det;
      if (next_q == next_det) {
        for (std::size_t a = 0; a < abs_.size(); ++a) {
          auto& ab = abs_[a];
          while (!ab.spec.is_front() && ab.det_index + 1 < ab.det.times.size() &&
                 ab.det.times[ab.det_index + 1] <= time_) {
            ++ab.det_index;
            raise_q(a, ab.det.values[ab.det_index], false);
          }
        }
        if (observer) observer(*this);
      }
      while (ci < cps.size() && cps[ci] <= time_) {
        record_checkpoint();
        ++ci;
      }
      if (time_ >= opt_.horizon) break;
    }
    return finish();
  }

  /// Performs one jump of particle `pid` by `dir` at the current time,
  /// applying every absorber's rule.
  void apply_jump(std::size_t pid, int dir) {
    const long long old = pos_[pid];
    const long long nw = old + dir;
    ++jumps_;
    if (opt_.record_bond_crossings) {
      long long interval = static_cast<long long>(std::floor(time_));
      ++bonds_[{interval, std::min(old, nw)}];
      ++jumps_per_interval_[interval];
    }
    if (opt_.event_log) log_jump(pid, old, nw);
    for (std::size_t a = 0; a < abs_.size() && !exploded_; ++a) {
      if (!alive(pid, a) || !abs_[a].spec.is_front()) continue;
      if (dir == -1 && old == abs_[a].q + 1) trigger(a, pid);
    }
    if (exploded_) return;
    for (std::size_t a = 0; a < abs_.size(); ++a) {
      if (!alive(pid, a) || abs_[a].spec.is_front()) continue;
      if (nw <= abs_[a].q) {
        kill(pid, a);
        ++abs_[a].n;
      }
    }
    if (mask_[pid] != 0) {
      unlink(pid);
      for (std::uint32_t m = mask_[pid]; m; m &= m - 1) {
        auto& cnt = abs_[static_cast<std::size_t>(std::countr_zero(m))].cnt;
        --cnt.at(old);
        ++cnt.at(nw);
      }
      pos_[pid] = nw;
      link(pid);
    } else {
      pos_[pid] = nw;
    }
  }

  /// N, Q, F(Q), M(t,Q), G^Q(t) at the current time.
  DecompositionSnapshot snapshot(std::size_t a) {
    if (abs_[a].spec.kind == TrajectoryKind::front_pushed)
      throw std::logic_error("pushed fronts alter particle motion; the decomposition is not defined");
    bring_frozen_up_to_date();
    return snapshot_no_update(a);
  }

  RunResult finish() {
    RunResult out;
    out.end_time = time_;
    out.exploded = exploded_;
    out.explosion_time = explosion_time_;
    out.jumps = jumps_;
    out.activations = activations_;
    out.far_field_violations = ff_violations_;
    out.bond_crossings = bonds_;
    out.jumps_per_interval = jumps_per_interval_;
    long long max_q = 0;
    for (auto& a : abs_) {
      a.result.final_q = a.q;
      a.result.final_n = a.n;
      max_q = std::max(max_q, a.q);
      out.absorbers.push_back(a.result);
    }
    if (!exploded_ && static_cast<double>(ic_.window() - max_q) < 4.0 * std::sqrt(opt_.horizon + 1.0))
      out.window_warning = true;
    return out;
  }

 private:
  template <class T>
  class SiteArray {
   public:
    void reset(T fill) {
      fill_ = fill;
      data_.clear();
      lo_ = 0;
    }
    T get(long long x) const {
      long long i = x - lo_;
      return (i >= 0 && i < static_cast<long long>(data_.size())) ? data_[static_cast<std::size_t>(i)] : fill_;
    }
    T& at(long long x) {
      if (data_.empty()) {
        lo_ = x - 64;
        data_.assign(128, fill_);
      }
      if (x < lo_) {
        long long grow = std::max<long long>(lo_ - x, static_cast<long long>(data_.size()));
        data_.insert(data_.begin(), static_cast<std::size_t>(grow), fill_);
        lo_ -= grow;
      } else if (x >= lo_ + static_cast<long long>(data_.size())) {
        long long need = x - lo_ + 1;
        data_.resize(static_cast<std::size_t>(std::max<long long>(need, 2 * static_cast<long long>(data_.size()))),
                     fill_);
      }
      return data_[static_cast<std::size_t>(x - lo_)];
    }

   private:
    std::vector<T> data_;
    long long lo_ = 0;
    T fill_{};
  };

  struct Absorber {
    TrajectorySpec spec;
    IntegerPath det;
    std::size_t det_index = 0;
    long long q = 0;
    long long n = 0;
    SiteArray<long long> cnt;  ///< particles alive for this absorber, by site
    AbsorberResult result;
  };

  void link(std::size_t pid) {
    int& head = heads_.at(pos_[pid]);
    next_[pid] = head;
    prev_[pid] = -1;
    if (head >= 0) prev_[static_cast<std::size_t>(head)] = static_cast<int>(pid);
    head = static_cast<int>(pid);
  }

  void unlink(std::size_t pid) {
    int n = next_[pid], p = prev_[pid];
    if (p >= 0) next_[static_cast<std::size_t>(p)] = n;
    else heads_.at(pos_[pid]) = n;
    if (n >= 0) prev_[static_cast<std::size_t>(n)] = p;
    next_[pid] = prev_[pid] = -1;
  }

  void add_moving(std::size_t pid) {
    moving_index_[pid] = static_cast<int>(moving_.size());
    moving_.push_back(pid);
  }

  void remove_moving(std::size_t pid) {
    int i = moving_index_[pid];
    if (i < 0) return;
    std::size_t last = moving_.back();
    moving_[static_cast<std::size_t>(i)] = last;
    moving_index_[last] = i;
    moving_.pop_back();
    moving_index_[pid] = -1;
  }

  // Clears absorber bit; a particle dead for every absorber leaves the site lists.
  void kill(std::size_t pid, std::size_t a) {
    mask_[pid] &= ~(1u << a);
    --abs_[a].cnt.at(pos_[pid]);
    if (mask_[pid] == 0) {
      unlink(pid);
      if (opt_.lazy_dead) {
        remove_moving(pid);
        frozen_time_[pid] = time_;
      }
    }
  }

  std::vector<std::size_t> alive_at(std::size_t a, long long site) {
    std::vector<std::size_t> out;
    for (int p = heads_.get(site); p >= 0; p = next_[static_cast<std::size_t>(p)])
      if (alive(static_cast<std::size_t>(p), a)) out.push_back(static_cast<std::size_t>(p));
    return out;
  }

  long long max_q() const {
    long long m = std::numeric_limits<long long>::min();
    for (const auto& a : abs_) m = std::max(m, a.q);
    return m;
  }

  long long far_margin() const {
    return static_cast<long long>(std::ceil(opt_.far_field_c * std::sqrt(time_ + 1.0))) + opt_.far_field_b;
  }

  void activate(std::size_t pid) {
    long long x = start_[pid] + sample_displacement(time_, rng_);
    long long guard = max_q();
    if (x <= guard) {
      ++ff_violations_;
      x = guard + 1;
    }
    pos_[pid] = x;
    active_[pid] = 1;
    ++activations_;
    for (std::uint32_t m = mask_[pid]; m; m &= m - 1) ++abs_[static_cast<std::size_t>(std::countr_zero(m))].cnt.at(x);
    link(pid);
    add_moving(pid);
  }

  void activate_up_to(long long x) {
    while (next_dormant_ < start_.size() && start_[next_dormant_] <= x) {
      if (time_ == 0) {
        // No displacement yet; place directly.
        std::size_t pid = next_dormant_;
        active_[pid] = 1;
        ++activations_;
        for (std::uint32_t m = mask_[pid]; m; m &= m - 1)
          ++abs_[static_cast<std::size_t>(std::countr_zero(m))].cnt.at(pos_[pid]);
        link(pid);
        add_moving(pid);
      } else {
        activate(next_dormant_);
      }
      ++next_dormant_;
    }
    activation_edge_ = std::max(activation_edge_, x);
  }

  void refresh_far_field(bool initial) {
    if (!opt_.far_field) {
      if (initial) activate_up_to(std::numeric_limits<long long>::max());
      return;
    }
    long long mq = std::max<long long>(max_q(), 0);
    activate_up_to(mq + far_margin());
  }

  void ensure_activated(long long site) {
    if (!opt_.far_field) return;
    if (site + far_margin() > activation_edge_) activate_up_to(site + 2 * far_margin());
  }

  void explode(std::size_t a) {
    exploded_ = true;
    explosion_time_ = time_;
    abs_[a].result.exploded = true;
    abs_[a].result.explosion_time = time_;
    if (opt_.event_log)
      *opt_.event_log << "{\"t\":" << format_real(time_) << ",\"type\":\"explosion\",\"pid\":-1,\"from\":" << abs_[a].q
                      << ",\"to\":-1,\"k\":-1,\"r\":" << abs_[a].q << ",\"N\":" << abs_[a].n << "}\n";
  }

  void trigger(std::size_t a, std::size_t pid) {
    auto& ab = abs_[a];
    const long long r = ab.q;
    long long k = 0;
    switch (ab.spec.kind) {
      case TrajectoryKind::front_frictionless: {
        long long c = 0;
        for (long long j = 1;; ++j) {
          long long site = r + j;
          if (site > explosion_limit_) {
            explode(a);
            return;
          }
          if (opt_.far_field && site + far_margin() > activation_edge_) {
            // Newly activated particles may land behind the scan, so it restarts;
            // doubling the activated range keeps the number of restarts logarithmic.
            activate_up_to(site + std::max(2 * far_margin(), site - r));
            c = 0;
            j = 0;
            continue;
          }
          c += ab.cnt.get(site);
          if (c == j) {
            k = j;
            break;
          }
        }
        for (long long s = r + 1; s <= r + k; ++s)
          for (std::size_t p : alive_at(a, s)) kill(p, a);
        ab.n += k;
        break;
      }
      case TrajectoryKind::front_mdla: {
        if (r + 1 > explosion_limit_) {
          explode(a);
          return;
        }
        k = 1;
        auto victims = alive_at(a, r + 1);
        for (std::size_t p : victims) kill(p, a);
        ab.n += static_cast<long long>(victims.size());
        break;
      }
      case TrajectoryKind::front_pushed: {
        if (r + 1 > explosion_limit_) {
          explode(a);
          return;
        }
        k = 1;
        ensure_activated(r + 2);
        auto others = alive_at(a, r + 1);
        kill(pid, a);
        ab.n += 1;
        for (std::size_t p : others) {
          if (p == pid) continue;
          unlink(p);
          --ab.cnt.at(pos_[p]);
          pos_[p] = r + 2;
          ++ab.cnt.at(pos_[p]);
          link(p);
        }
        break;
      }
      default: throw std::logic_error("trigger on a prescribed trajectory");
    }
    ab.q = r + k;
    ab.result.path.emplace_back(time_, ab.q);
    if (opt_.record_hitting_times)
      for (long long lvl = r; lvl < r + k; ++lvl) ab.result.hitting.emplace_back(lvl, time_);
    if (ab.q > explosion_limit_) {
      explode(a);
      return;
    }
    if (opt_.event_log)
      *opt_.event_log << "{\"t\":" << format_real(time_) << ",\"type\":\"front\",\"pid\":" << pid << ",\"from\":" << r
                      << ",\"to\":" << ab.q << ",\"k\":" << k << ",\"r\":" << ab.q << ",\"N\":" << ab.n << "}\n";
    if (opt_.far_field) refresh_far_field(false);
  }

  void raise_q(std::size_t a, long long value, bool initial) {
    auto& ab = abs_[a];
    long long from = initial ? std::numeric_limits<long long>::min() : ab.q;
    if (opt_.far_field) ensure_activated(value);
    long long lo = initial ? std::min<long long>(value, 0) : from;
    // Every particle that is (or started) at or below the new level dies.
    if (initial) {
      for (std::size_t pid = 0; pid < start_.size(); ++pid)
        if (active_[pid] && alive(pid, a) && pos_[pid] <= value) {
          kill(pid, a);
          ++ab.n;
        }
    } else {
      for (long long s = lo + 1; s <= value; ++s)
        for (std::size_t p : alive_at(a, s)) {
          kill(p, a);
          ++ab.n;
        }
    }
    ab.q = value;
    if (!initial) {
      ab.result.path.emplace_back(time_, value);
      if (opt_.event_log)
        *opt_.event_log << "{\"t\":" << format_real(time_) << ",\"type\":\"boundary\",\"pid\":-1,\"from\":" << from
                        << ",\"to\":" << value << ",\"k\":" << (value - from) << ",\"r\":" << value
                        << ",\"N\":" << ab.n << "}\n";
      if (opt_.far_field) refresh_far_field(false);
    }
  }

  void bring_frozen_up_to_date() {
    if (!opt_.lazy_dead) return;
    for (std::size_t pid = 0; pid < start_.size(); ++pid)
      if (active_[pid] && mask_[pid] == 0 && frozen_time_[pid] < time_) {
        pos_[pid] += sample_displacement(time_ - frozen_time_[pid], rng_);
        frozen_time_[pid] = time_;
      }
  }

  DecompositionSnapshot snapshot_no_update(std::size_t a) const {
    const auto& ab = abs_[a];
    DecompositionSnapshot s;
    s.t = time_;
    s.Q = ab.q;
    s.N = ab.n;
    s.F = ic_.cumulative_fluctuation(ab.q);
    long long below_now = 0, below_start = 0, g = 0;
    for (std::size_t pid = 0; pid < start_.size(); ++pid) {
      long long p = active_[pid] ? pos_[pid] : start_[pid];
      if (p <= ab.q) ++below_now;
      if (start_[pid] <= ab.q) ++below_start;
      if (!alive(pid, a) && p > ab.q) ++g;
    }
    s.M = below_now - below_start;
    s.G = g;
    return s;
  }

  void record_checkpoint() {
    bring_frozen_up_to_date();
    for (std::size_t a = 0; a < abs_.size(); ++a) {
      abs_[a].result.checkpoint_q.emplace_back(time_, abs_[a].q);
      if (abs_[a].spec.kind != TrajectoryKind::front_pushed)
        abs_[a].result.snapshots.push_back(snapshot_no_update(a));
    }
  }

  void log_jump(std::size_t pid, long long from, long long to) {
    *opt_.event_log << "{\"t\":" << format_real(time_) << ",\"type\":\"jump\",\"pid\":" << pid << ",\"from\":" << from
                    << ",\"to\":" << to << ",\"k\":0,\"r\":" << abs_[0].q << ",\"N\":" << abs_[0].n << "}\n";
  }

  const InitialCondition& ic_;
  SimulationOptions opt_;
  Rng rng_;
  std::vector<Absorber> abs_;
  std::uint32_t full_mask_ = 0;
  long long explosion_limit_ = 0;

  std::vector<long long> start_, pos_;
  std::vector<std::uint32_t> mask_;
  std::vector<int> next_, prev_, moving_index_;
  std::vector<double> frozen_time_;
  std::vector<std::uint8_t> active_;
  std::vector<std::size_t> moving_;
  SiteArray<int> heads_;
  std::size_t next_dormant_ = 0;
  long long activation_edge_ = std::numeric_limits<long long>::min();

  double time_ = 0;
  bool exploded_ = false;
  bool stop_ = false;
  double explosion_time_ = kInf;
  std::uint64_t jumps_ = 0, activations_ = 0, ff_violations_ = 0;
  std::map<std::pair<long long, long long>, long long> bonds_;
  std::map<long long, long long> jumps_per_interval_;
};

/// One run with the given absorbers.
inline RunResult run_simulation(const InitialCondition& ic, std::vector<TrajectorySpec> specs,
                                const SimulationOptions& opt) {
  Simulation sim(ic, std::move(specs), opt);
  return sim.run();
}

struct MonotonicityReport {
  std::size_t checks = 0;
  bool upper_hypothesis_held = true;  ///< Q(0) >= 0 and N^Q <= Q throughout
  bool lower_hypothesis_held = true;  ///< Q(0) = 0 and N^Q >= Q throughout
  std::size_t violations = 0;
  std::size_t upper_violations = 0;
  std::size_t lower_violations = 0;
  double first_violation_time = kInf;
  std::string first_violation;
  bool exploded = false;  ///< the run stopped at the window edge
};

/// Runs the frictionless front and the boundary Q on shared randomness and
/// checks both comparison implications. Paths are right-continuous, so the
/// state at time t is the one after every event at t; simultaneous events
/// (Q built from the front jumps with it) are checked together.
inline MonotonicityReport monotonicity_probe(const InitialCondition& ic, const StepFunction& q, double horizon,
                                             std::uint64_t seed) {
  SimulationOptions opt;
  opt.horizon = horizon;
  opt.seed = seed;
  opt.record_hitting_times = false;
  Simulation sim(ic, {TrajectorySpec::frictionless(), TrajectorySpec::custom_path(q)}, opt);
  MonotonicityReport rep;
  bool upper = sim.q(1) >= 0;
  bool lower = sim.q(1) == 0;
  struct State {
    double t;
    long long r, Q, N;
  };
  auto evaluate = [&](const State& st) {
    ++rep.checks;
    upper = upper && st.N <= st.Q;
    lower = lower && st.N >= st.Q;
    std::string what;
    if (upper && st.Q < st.r) {
      what = "upper: N^Q <= Q held but Q < r";
      ++rep.upper_violations;
    }
    if (lower && st.Q > st.r) {
      what = "lower: N^Q >= Q held but Q > r";
      ++rep.lower_violations;
    }
    if (!what.empty()) {
      if (rep.violations == 0) {
        rep.first_violation_time = st.t;
        rep.first_violation = what;
      }
      ++rep.violations;
    }
  };
  State last{sim.time(), sim.q(0), sim.q(1), sim.absorbed(1)};
  sim.observer = [&](const Simulation& s) {
    if (s.time() > last.t) evaluate(last);
    last = {s.time(), s.q(0), s.q(1), s.absorbed(1)};
  };
  rep.exploded = sim.run().exploded;
  evaluate(last);
  rep.upper_hypothesis_held = upper;
  rep.lower_hypothesis_held = lower;
  return rep;
}

inline void write_snapshots_csv(std::ostream& out, const AbsorberResult& a) {
  out << schema_line("checkpoints") << "# trajectory=" << a.spec.name() << "\n" << "t,r,N,F,M,G\n";
  for (const auto& s : a.snapshots)
    out << format_real(s.t) << ',' << s.Q << ',' << s.N << ',' << s.F << ',' << s.M << ',' << s.G << '\n';
}

inline void write_hitting_csv(std::ostream& out, const AbsorberResult& a) {
  out << schema_line("hitting-times") << "level,time\n";
  for (const auto& [lvl, t] : a.hitting) out << lvl << ',' << format_real(t) << '\n';
}

}  // namespace frontlab
