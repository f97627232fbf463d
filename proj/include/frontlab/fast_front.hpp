#pragma once

// Front-only sampler for long horizons. Particles close to the front move
// jump by jump; a particle at distance d holds a lease of length tau(d/2)
// during which it reaches the guard site d/2 closer to the front with
// probability at most delta. Its position is resampled from the heat kernel
// when the lease expires or when the front (or a k-scan) reaches the guard.
// Leased particles that would have crossed their guard are counted as
// violations and clamped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "initcond.hpp"
#include "kernels.hpp"
#include "random.hpp"
#include "simulate.hpp"
#include "stepfn.hpp"

namespace frontlab {

struct FastFrontOptions {
  double horizon = 0;
  std::vector<double> checkpoints;
  std::uint64_t seed = 0;
  TrajectoryKind rule = TrajectoryKind::front_frictionless;
  long long near_distance = 24;  ///< explicit below this distance from the front
  double delta = 1e-9;           ///< per-lease guard-crossing probability bound
  long long explosion_buffer = 0;
  bool record_path = true;
};

struct FastFrontResult {
  std::vector<std::pair<double, long long>> path;  ///< (time, r) at every move, starting at (0,0)
  std::vector<std::pair<double, long long>> checkpoint_r;
  long long final_r = 0;
  double end_time = 0;
  bool exploded = false;
  double explosion_time = kInf;
  std::uint64_t near_jumps = 0;
  std::uint64_t refreshes = 0;
  std::uint64_t violations = 0;

  StepFunction front_path() const {
    std::vector<double> b, v;
    for (const auto& [t, r] : path) {
      if (!b.empty() && b.back() == t) {
        v.back() = static_cast<double>(r);
        continue;
      }
      b.push_back(t);
      v.push_back(static_cast<double>(r));
    }
    if (exploded) {
      if (b.back() == explosion_time) v.back() = kInf;
      else {
        b.push_back(explosion_time);
        v.push_back(kInf);
      }
    }
    return StepFunction(std::move(b), std::move(v), std::max(end_time, b.back()));
  }
};

/// tau(h) for integer h, memoized.
class LeaseTable {
 public:
  explicit LeaseTable(double delta) : delta_(delta) {}
  double operator()(long long h) {
    if (h <= 0) return 0.0;
    auto i = static_cast<std::size_t>(h);
    if (i >= tau_.size()) {
      std::size_t old = tau_.size();
      tau_.resize(std::max(i + 1, 2 * old), -1.0);
    }
    if (tau_[i] < 0) tau_[i] = lease_time(static_cast<double>(h), delta_);
    return tau_[i];
  }

 private:
  double delta_;
  std::vector<double> tau_;
};

class FrontSampler {
 public:
  FrontSampler(const InitialCondition& ic, FastFrontOptions opt)
      : opt_(std::move(opt)), rng_(make_rng(opt_.seed, 0xfa)), lease_(opt_.delta) {
    if (opt_.rule != TrajectoryKind::front_frictionless && opt_.rule != TrajectoryKind::front_mdla &&
        opt_.rule != TrajectoryKind::front_pushed)
      throw std::invalid_argument("front sampler needs a front rule");
    if (opt_.near_distance < 2) throw std::invalid_argument("near distance must be at least 2");
    far_distance_ = 2 * opt_.near_distance;
    limit_ = ic.window() - opt_.explosion_buffer;
    for (long long x = 1; x <= ic.window(); ++x)
      for (int c = 0; c < ic.count(x); ++c) x_.push_back(x);
    const std::size_t P = x_.size();
    t_lease_.assign(P, 0.0);
    gen_.assign(P, 0);
    state_.assign(P, State::dead);
    next_.assign(P, -1);
    prev_.assign(P, -1);
    near_index_.assign(P, -1);
    sites_.assign(static_cast<std::size_t>(std::max<long long>(ic.window(), 1) + 4 * far_distance_ + 16), Site{});
    for (std::size_t p = 0; p < P; ++p) place(p, x_[p]);
    result_.path.emplace_back(0.0, 0);
  }

  FastFrontResult run() {
    std::vector<double> cps;
    for (double c : opt_.checkpoints)
      if (c >= 0 && c <= opt_.horizon) cps.push_back(c);
    std::sort(cps.begin(), cps.end());
    std::size_t ci = 0;
    std::exponential_distribution<double> expo(1.0);
    while (!result_.exploded) {
      double next_lease = kInf;
      while (!by_time_.empty()) {
        const auto& top = by_time_.top();
        if (state_[top.pid] == State::far && gen_[top.pid] == top.gen) {
          next_lease = top.key;
          break;
        }
        by_time_.pop();
      }
      double next_cp = ci < cps.size() ? cps[ci] : kInf;
      double next_det = std::min({next_lease, next_cp, opt_.horizon});
      double rate = static_cast<double>(near_.size());
      double dt = rate > 0 ? expo(rng_) / rate : kInf;
      if (t_ + dt < next_det) {
        t_ += dt;
        std::size_t pid = near_[std::uniform_int_distribution<std::size_t>(0, near_.size() - 1)(rng_)];
        jump(pid, (rng_() >> 63) ? 1 : -1);
        continue;
      }
      t_ = next_det;
      if (next_lease == next_det) {
        std::size_t pid = by_time_.top().pid;
        by_time_.pop();
        refresh(pid, r_ + 1);
        continue;
      }
      while (ci < cps.size() && cps[ci] <= t_) {
        result_.checkpoint_r.emplace_back(t_, r_);
        ++ci;
      }
      if (t_ >= opt_.horizon) break;
    }
    result_.final_r = r_;
    result_.end_time = t_;
    return result_;
  }

 private:
  enum class State : std::uint8_t { near, far, dead };

  struct Site {
    int head = -1;
    long long count = 0;
  };

  struct Entry {
    double key;
    std::size_t pid;
    std::uint32_t gen;
    bool operator>(const Entry& o) const { return key > o.key; }
  };
  using MinHeap = std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>>;

  Site& site(long long x) {
    if (x < 0) throw std::logic_error("front sampler site below origin");
    auto i = static_cast<std::size_t>(x);
    if (i >= sites_.size()) sites_.resize(std::max(i + 1, sites_.size() * 2));
    return sites_[i];
  }

  void link_near(std::size_t p) {
    Site& s = site(x_[p]);
    next_[p] = s.head;
    prev_[p] = -1;
    if (s.head >= 0) prev_[static_cast<std::size_t>(s.head)] = static_cast<int>(p);
    s.head = static_cast<int>(p);
    ++s.count;
  }

  void unlink_near(std::size_t p) {
    Site& s = site(x_[p]);
    int n = next_[p], q = prev_[p];
    if (q >= 0) next_[static_cast<std::size_t>(q)] = n;
    else s.head = n;
    if (n >= 0) prev_[static_cast<std::size_t>(n)] = q;
    --s.count;
  }

  void make_near(std::size_t p, long long x) {
    x_[p] = x;
    state_[p] = State::near;
    link_near(p);
    near_index_[p] = static_cast<int>(near_.size());
    near_.push_back(p);
  }

  void drop_near(std::size_t p) {
    unlink_near(p);
    int i = near_index_[p];
    std::size_t last = near_.back();
    near_[static_cast<std::size_t>(i)] = last;
    near_index_[last] = i;
    near_.pop_back();
    near_index_[p] = -1;
  }

  void make_far(std::size_t p, long long x) {
    long long d = x - r_;
    long long h = d / 2;
    double tau = lease_(h);
    if (tau <= 0) {
      make_near(p, x);
      return;
    }
    x_[p] = x;
    t_lease_[p] = t_;
    state_[p] = State::far;
    ++gen_[p];
    by_time_.push({t_ + tau, p, gen_[p]});
    by_guard_.push({static_cast<double>(x - h + 1), p, gen_[p]});
  }

  /// Near if within `near_below` of the front, leased otherwise.
  void place(std::size_t p, long long x, long long near_below = 0) {
    long long d = x - r_;
    if (d < std::max(opt_.near_distance, near_below)) make_near(p, x);
    else make_far(p, x);
  }

  /// Resamples a leased particle; it may not land below `floor_site`.
  void refresh(std::size_t p, long long floor_site, long long near_below = 0) {
    ++result_.refreshes;
    ++gen_[p];
    long long x = x_[p] + sample_displacement(t_ - t_lease_[p], rng_);
    if (x < floor_site) {
      ++result_.violations;
      x = floor_site;
    }
    place(p, x, near_below);
  }

  /// Refreshes every lease whose guard lies at or below `s`.
  void open_guards(long long s, long long near_below) {
    while (!by_guard_.empty() && by_guard_.top().key <= static_cast<double>(s)) {
      Entry e = by_guard_.top();
      by_guard_.pop();
      if (state_[e.pid] != State::far || gen_[e.pid] != e.gen) continue;
      refresh(e.pid, std::max(static_cast<long long>(e.key), r_ + 1), near_below);
    }
  }

  void absorb_site(long long s) {
    Site& st = site(s);
    while (st.head >= 0) {
      auto p = static_cast<std::size_t>(st.head);
      drop_near(p);
      state_[p] = State::dead;
    }
  }

  void explode() {
    result_.exploded = true;
    result_.explosion_time = t_;
  }

  void advance(long long k) {
    r_ += k;
    if (opt_.record_path) result_.path.emplace_back(t_, r_);
    if (r_ > limit_) {
      explode();
      return;
    }
    open_guards(r_ + 1, 0);
  }

  void jump(std::size_t p, int dir) {
    ++result_.near_jumps;
    long long old = x_[p];
    if (dir == -1 && old == r_ + 1) {
      trigger(p);
      return;
    }
    unlink_near(p);
    x_[p] = old + dir;
    link_near(p);
    if (x_[p] - r_ >= far_distance_) {
      drop_near(p);
      make_far(p, x_[p]);
    }
  }

  void trigger(std::size_t p) {
    switch (opt_.rule) {
      case TrajectoryKind::front_frictionless: {
        long long c = 0, k = 0;
        for (long long j = 1;; ++j) {
          long long s = r_ + j;
          if (s > limit_) {
            explode();
            return;
          }
          // Leases whose guard falls inside the scanned range become explicit.
          open_guards(s, 2 * j + 2);
          c += site(s).count;
          if (c == j) {
            k = j;
            break;
          }
        }
        for (long long s = r_ + 1; s <= r_ + k; ++s) absorb_site(s);
        advance(k);
        break;
      }
      case TrajectoryKind::front_mdla:
        if (r_ + 1 > limit_) return explode();
        absorb_site(r_ + 1);
        advance(1);
        break;
      case TrajectoryKind::front_pushed: {
        if (r_ + 1 > limit_) return explode();
        open_guards(r_ + 2, 0);
        drop_near(p);
        state_[p] = State::dead;
        std::vector<std::size_t> moved;
        for (int q = site(r_ + 1).head; q >= 0; q = next_[static_cast<std::size_t>(q)])
          moved.push_back(static_cast<std::size_t>(q));
        for (std::size_t q : moved) {
          unlink_near(q);
          x_[q] = r_ + 2;
          link_near(q);
        }
        advance(1);
        break;
      }
      default: break;
    }
  }

  FastFrontOptions opt_;
  Rng rng_;
  LeaseTable lease_;
  long long far_distance_ = 0;
  long long limit_ = 0;
  long long r_ = 0;
  double t_ = 0;

  std::vector<long long> x_;
  std::vector<double> t_lease_;
  std::vector<std::uint32_t> gen_;
  std::vector<State> state_;
  std::vector<int> next_, prev_, near_index_;
  std::vector<std::size_t> near_;
  std::vector<Site> sites_;
  MinHeap by_time_, by_guard_;
  FastFrontResult result_;
};

inline FastFrontResult sample_front(const InitialCondition& ic, const FastFrontOptions& opt) {
  FrontSampler s(ic, opt);
  return s.run();
}

}  // namespace frontlab
