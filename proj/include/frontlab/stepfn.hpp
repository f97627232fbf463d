#pragma once

// Nondecreasing right-continuous step functions on [0, inf), their generalized
// inverses, completed graphs and bounds on the M1 distance between them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "io.hpp"

namespace frontlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// f(t) = values[i] for t in [breakpoints[i], breakpoints[i+1]); the last piece
/// extends to domain_end. Values may be +inf (explosion). Consecutive equal
/// values are merged so the stored representation is canonical.
class StepFunction {
 public:
  StepFunction() : b_{0.0}, v_{0.0} {}

  StepFunction(std::vector<double> breakpoints, std::vector<double> values, double domain_end = kInf)
      : b_(std::move(breakpoints)), v_(std::move(values)), end_(domain_end) {
    validate();
    normalize();
  }

  static StepFunction constant(double c) { return StepFunction({0.0}, {c}); }

  double operator()(double t) const {
    if (t < 0) throw std::domain_error("step function evaluated at negative time");
    auto it = std::upper_bound(b_.begin(), b_.end(), t);
    return v_[static_cast<std::size_t>(it - b_.begin()) - 1];
  }

  /// f(t-), with f(0-) taken as f(0).
  double left_limit(double t) const {
    if (t <= 0) return v_.front();
    auto it = std::lower_bound(b_.begin(), b_.end(), t);
    return v_[static_cast<std::size_t>(it - b_.begin()) - 1];
  }

  bool is_jump(double t) const {
    if (t <= 0) return false;
    return std::binary_search(b_.begin(), b_.end(), t);
  }

  /// First time the value is +inf, or +inf if it never is.
  double explosion_time() const {
    for (std::size_t i = 0; i < v_.size(); ++i)
      if (std::isinf(v_[i])) return b_[i];
    return kInf;
  }

  const std::vector<double>& breakpoints() const { return b_; }
  const std::vector<double>& values() const { return v_; }
  double domain_end() const { return end_; }
  std::size_t size() const { return b_.size(); }

  friend bool operator==(const StepFunction& a, const StepFunction& b) {
    return a.b_ == b.b_ && a.v_ == b.v_;
  }

 private:
  void validate() const {
    if (b_.empty() || b_.size() != v_.size())
      throw std::invalid_argument("step function needs matching, nonempty breakpoint and value lists");
    if (b_.front() != 0.0) throw std::invalid_argument("first breakpoint must be 0");
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (!std::isfinite(b_[i])) throw std::invalid_argument("breakpoints must be finite");
      if (std::isnan(v_[i]) || v_[i] < 0) throw std::invalid_argument("values must be nonnegative");
      if (i > 0 && !(b_[i] > b_[i - 1])) throw std::invalid_argument("breakpoints must increase strictly");
      if (i > 0 && v_[i] < v_[i - 1]) throw std::invalid_argument("values must be nondecreasing");
    }
    if (!(end_ >= b_.back())) throw std::invalid_argument("domain end precedes last breakpoint");
  }

  void normalize() {
    std::size_t w = 0;
    for (std::size_t i = 1; i < b_.size(); ++i) {
      if (v_[i] == v_[w]) continue;
      ++w;
      b_[w] = b_[i];
      v_[w] = v_[i];
    }
    b_.resize(w + 1);
    v_.resize(w + 1);
  }

  std::vector<double> b_;
  std::vector<double> v_;
  double end_ = kInf;
};

/// Right-continuous generalized inverse: g(t) = first breakpoint whose value
/// exceeds t, +inf if none does. Agrees with sup{s : f(s) < t} at every t that
/// is not a value of f, and invert(invert(f)) == f.
inline StepFunction invert(const StepFunction& f) {
  const auto& b = f.breakpoints();
  const auto& v = f.values();
  const std::size_t n = b.size();
  std::vector<double> gb, gv;
  if (v[0] > 0) {
    gb.push_back(0.0);
    gv.push_back(0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isinf(v[i])) break;
    gb.push_back(v[i]);
    gv.push_back(i + 1 < n ? b[i + 1] : kInf);
  }
  double end = std::isfinite(f.domain_end()) ? f(f.domain_end()) : kInf;
  if (gb.empty()) {  // f is +inf from time 0
    gb.push_back(0.0);
    gv.push_back(0.0);
  }
  end = std::max(end, gb.back());
  return StepFunction(std::move(gb), std::move(gv), end);
}

/// The literal formula sup{s >= 0 : f(s) < t} (sup of the empty set is 0).
inline double invert_sup(const StepFunction& f, double t) {
  const auto& b = f.breakpoints();
  const auto& v = f.values();
  auto it = std::lower_bound(v.begin(), v.end(), t);
  if (it == v.end()) return kInf;
  return b[static_cast<std::size_t>(it - v.begin())];
}

// --- completed graphs -------------------------------------------------------

struct Point {
  double t = 0;
  double x = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Segment {
  Point from;
  Point to;
  bool vertical() const { return from.t == to.t && from.x != to.x; }
  bool horizontal() const { return from.x == to.x && from.t != to.t; }
  double length() const { return std::hypot(to.t - from.t, to.x - from.x); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Polyline through the graph of f on [0, t0] with every jump filled by a
/// vertical segment. With from_origin the curve starts at (0,0) and a jump at
/// time 0 is filled as well.
struct CompletedGraph {
  std::vector<Segment> segments;

  Point start() const { return segments.front().from; }
  Point end() const { return segments.back().to; }

  CompletedGraph transposed() const {
    CompletedGraph out;
    out.segments.reserve(segments.size());
    for (const auto& s : segments) out.segments.push_back({{s.from.x, s.from.t}, {s.to.x, s.to.t}});
    return out;
  }

  /// Drops zero-length pieces and merges consecutive collinear ones.
  CompletedGraph canonical() const {
    CompletedGraph out;
    for (const auto& s : segments) {
      if (s.from == s.to) continue;
      if (!out.segments.empty()) {
        auto& last = out.segments.back();
        bool same_dir = (last.vertical() && s.vertical()) || (last.horizontal() && s.horizontal());
        if (same_dir && last.to == s.from) {
          last.to = s.to;
          continue;
        }
      }
      out.segments.push_back(s);
    }
    if (out.segments.empty() && !segments.empty()) out.segments.push_back({start(), start()});
    return out;
  }

  /// Portion of the curve with x <= x_max (the curve is monotone in both coordinates).
  CompletedGraph clipped_x(double x_max) const {
    CompletedGraph out;
    for (const auto& s : segments) {
      if (s.from.x > x_max) break;
      Segment c = s;
      if (c.to.x > x_max) c.to.x = x_max;
      out.segments.push_back(c);
    }
    if (out.segments.empty() && !segments.empty()) out.segments.push_back({start(), start()});
    return out;
  }
};

inline CompletedGraph completed_graph(const StepFunction& f, double t0, bool from_origin = true) {
  if (!(t0 >= 0)) throw std::domain_error("completed graph needs t0 >= 0");
  if (std::isinf(f(t0))) throw std::domain_error("completed graph of an exploded path");
  std::vector<Point> pts;
  const auto& b = f.breakpoints();
  const auto& v = f.values();
  if (from_origin) pts.push_back({0.0, 0.0});
  pts.push_back({0.0, v[0]});
  for (std::size_t i = 1; i < b.size() && b[i] <= t0; ++i) {
    pts.push_back({b[i], v[i - 1]});
    pts.push_back({b[i], v[i]});
  }
  pts.push_back({t0, f(t0)});
  CompletedGraph g;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i] == pts[i - 1])) g.segments.push_back({pts[i - 1], pts[i]});
  if (g.segments.empty()) g.segments.push_back({pts.front(), pts.front()});
  return g;
}

// --- M1 distance ------------------------------------------------------------

struct M1Bounds {
  double upper = 0;  ///< sup-distance under the best parametrization tried
  double lower = 0;  ///< sampled Hausdorff distance between the two curves
  double best_weight = 0.5;
};

namespace detail {

// Cumulative parameter in [0,1] at each segment end, using the length
// w*|dt| + (1-w)*|dx|.
inline std::vector<double> weighted_knots(const CompletedGraph& g, double w) {
  std::vector<double> k(g.segments.size() + 1, 0.0);
  for (std::size_t i = 0; i < g.segments.size(); ++i) {
    const auto& s = g.segments[i];
    k[i + 1] = k[i] + w * std::abs(s.to.t - s.from.t) + (1 - w) * std::abs(s.to.x - s.from.x);
  }
  double total = k.back();
  for (std::size_t i = 0; i <= g.segments.size(); ++i)
    k[i] = total > 0 ? k[i] / total : static_cast<double>(i) / static_cast<double>(g.segments.size());
  k.back() = 1.0;
  return k;
}

inline Point point_at(const CompletedGraph& g, const std::vector<double>& knots, double u) {
  auto it = std::upper_bound(knots.begin(), knots.end(), u);
  std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
  if (i >= g.segments.size()) return g.end();
  const auto& s = g.segments[i];
  double span = knots[i + 1] - knots[i];
  double a = span > 0 ? (u - knots[i]) / span : 0.0;
  return {s.from.t + a * (s.to.t - s.from.t), s.from.x + a * (s.to.x - s.from.x)};
}

inline double dist(Point a, Point b) { return std::hypot(a.t - b.t, a.x - b.x); }

inline double point_segment_distance(Point p, const Segment& s) {
  double dt = s.to.t - s.from.t, dx = s.to.x - s.from.x;
  double len2 = dt * dt + dx * dx;
  if (len2 == 0) return dist(p, s.from);
  double a = std::clamp(((p.t - s.from.t) * dt + (p.x - s.from.x) * dx) / len2, 0.0, 1.0);
  return dist(p, {s.from.t + a * dt, s.from.x + a * dx});
}

// Both parametrizations are linear between the union of knots, so the sup of
// the pointwise distance is attained at one of them.
inline double sup_distance(const CompletedGraph& a, const std::vector<double>& ka, const CompletedGraph& b,
                           const std::vector<double>& kb) {
  std::vector<double> us(ka);
  us.insert(us.end(), kb.begin(), kb.end());
  std::sort(us.begin(), us.end());
  double best = 0;
  for (double u : us) best = std::max(best, dist(point_at(a, ka, u), point_at(b, kb, u)));
  return best;
}

inline double directed_sampled(const CompletedGraph& a, const CompletedGraph& b, int samples) {
  double worst = 0;
  for (const auto& s : a.segments) {
    for (int j = 0; j <= samples; ++j) {
      double f = static_cast<double>(j) / samples;
      Point p{s.from.t + f * (s.to.t - s.from.t), s.from.x + f * (s.to.x - s.from.x)};
      double d = kInf;
      for (const auto& q : b.segments) d = std::min(d, point_segment_distance(p, q));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

}  // namespace detail

/// Two-sided bounds on the M1 distance between completed graphs. The upper
/// bound minimizes over a grid of weighted arc-length parametrizations; the
/// lower bound is a sampled Hausdorff distance (any parametrization pair is at
/// least that far apart somewhere).
inline M1Bounds m1_distance(const CompletedGraph& a, const CompletedGraph& b, int weight_grid = 9,
                            int samples_per_segment = 8) {
  M1Bounds out;
  out.upper = kInf;
  for (int k = 1; k <= weight_grid; ++k) {
    double w = static_cast<double>(k) / (weight_grid + 1);
    double d = detail::sup_distance(a, detail::weighted_knots(a, w), b, detail::weighted_knots(b, w));
    if (d < out.upper) {
      out.upper = d;
      out.best_weight = w;
    }
  }
  out.lower = std::max(detail::directed_sampled(a, b, samples_per_segment),
                       detail::directed_sampled(b, a, samples_per_segment));
  out.lower = std::min(out.lower, out.upper);
  return out;
}

inline M1Bounds m1_distance(const StepFunction& f, const StepFunction& g, double t0, bool from_origin = true) {
  return m1_distance(completed_graph(f, t0, from_origin), completed_graph(g, t0, from_origin));
}

// --- serialization ----------------------------------------------------------

inline void write_csv(std::ostream& out, const StepFunction& f, std::string_view kind = "stepfunction") {
  out << schema_line(kind);
  out << "# domain_end=" << format_real(f.domain_end()) << "\n";
  out << "breakpoint,value\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    out << format_real(f.breakpoints()[i]) << ',' << format_real(f.values()[i]) << '\n';
}

inline StepFunction read_step_function_csv(std::istream& in) {
  std::vector<double> b, v;
  double end = kInf;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto pos = line.find("domain_end=");
      if (pos != std::string::npos) end = parse_real(line.substr(pos + 11));
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() < 2) throw std::invalid_argument("malformed step function row: " + line);
    b.push_back(parse_real(cells[0]));
    v.push_back(parse_real(cells[1]));
  }
  return StepFunction(std::move(b), std::move(v), end);
}

}  // namespace frontlab
