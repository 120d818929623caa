#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bloom/common.hpp"

namespace bloom {

/// Finite quasi-metric measure space. Immutable after construction; the
/// constructor checks the axioms and throws ValidationError naming the
/// violated one.
class SpaceModel {
 public:
  SpaceModel(std::vector<std::string> ids, RealVector measure, RealMatrix metric,
             std::optional<RealMatrix> coords = std::nullopt)
      : ids_(std::move(ids)), measure_(std::move(measure)), metric_(std::move(metric)),
        coords_(std::move(coords)) {
    validate();
    index();
  }

  int size() const { return static_cast<int>(measure_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const RealVector& measure() const { return measure_; }
  const RealMatrix& metric() const { return metric_; }
  /// Row i holds the coordinates of point i (n × dim), when available.
  const std::optional<RealMatrix>& coords() const { return coords_; }

  double d(int x, int y) const { return metric_(x, y); }
  double mass(int x) const { return measure_[x]; }

  double measure_of(const PointSet& s) const {
    double m = 0.0;
    for (int x : s) m += measure_[x];
    return m;
  }

  /// Points ordered by distance from x (x first, ties by id).
  const std::vector<int>& by_distance(int x) const { return order_[static_cast<std::size_t>(x)]; }

  /// Number of points strictly closer to x than r.
  int count_within(int x, double r) const {
    const auto& ord = by_distance(x);
    auto it = std::partition_point(ord.begin(), ord.end(), [&](int y) { return metric_(x, y) < r; });
    return static_cast<int>(it - ord.begin());
  }

  /// µ(B(x,r)) from prefix sums; O(log n).
  double ball_measure(int x, double r) const {
    int k = count_within(x, r);
    return k == 0 ? 0.0 : prefix_[static_cast<std::size_t>(x)][static_cast<std::size_t>(k - 1)];
  }

  /// Largest distance from x.
  double eccentricity(int x) const { return metric_(x, by_distance(x).back()); }

  double diameter() const { return metric_.maxCoeff(); }

  /// Smallest positive distance.
  double min_distance() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i)
      for (int j = i + 1; j < size(); ++j) m = std::min(m, metric_(i, j));
    return m;
  }

 private:
  void validate() const {
    const auto n = measure_.size();
    if (n < 1) throw ValidationError("size", "space has no points");
    if (static_cast<Eigen::Index>(ids_.size()) != n)
      throw ValidationError("dimension", "point id count differs from measure length");
    if (metric_.rows() != n || metric_.cols() != n)
      throw ValidationError("dimension", "metric table is not n x n");
    if (coords_ && coords_->rows() != n)
      throw ValidationError("dimension", "coordinate rows differ from point count");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(measure_[i] > 0.0) || !std::isfinite(measure_[i]))
        throw ValidationError("positive-measure", "mu(" + ids_[static_cast<std::size_t>(i)] + ") is not a positive finite number");
      if (metric_(i, i) != 0.0)
        throw ValidationError("zero-diagonal", "d(" + ids_[static_cast<std::size_t>(i)] + ", itself) != 0");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double v = metric_(i, j);
        if (!std::isfinite(v) || v < 0.0)
          throw ValidationError("nonnegativity", "d(" + ids_[static_cast<std::size_t>(i)] + ", " + ids_[static_cast<std::size_t>(j)] + ") is negative or not finite");
        if (v == 0.0)
          throw ValidationError("identity-of-indiscernibles", "d(" + ids_[static_cast<std::size_t>(i)] + ", " + ids_[static_cast<std::size_t>(j)] + ") = 0 for distinct points");
        if (v != metric_(j, i))
          throw ValidationError("symmetry", "d(" + ids_[static_cast<std::size_t>(i)] + ", " + ids_[static_cast<std::size_t>(j)] + ") != d(" + ids_[static_cast<std::size_t>(j)] + ", " + ids_[static_cast<std::size_t>(i)] + ")");
      }
    }
  }

  void index() {
    const int n = size();
    order_.assign(static_cast<std::size_t>(n), {});
    prefix_.assign(static_cast<std::size_t>(n), {});
    for (int x = 0; x < n; ++x) {
      auto& ord = order_[static_cast<std::size_t>(x)];
      ord = all_points(n);
      std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return metric_(x, a) < metric_(x, b); });
      auto& pre = prefix_[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (int y : ord) pre.push_back(acc += measure_[y]);
    }
  }

  std::vector<std::string> ids_;
  RealVector measure_;
  RealMatrix metric_;
  std::optional<RealMatrix> coords_;
  std::vector<std::vector<int>> order_;
  std::vector<std::vector<double>> prefix_;
};

struct Ball {
  int center = 0;
  double radius = 0.0;
  PointSet members;
  double measure = 0.0;
};

/// B(x,r) = {y : d(x,y) < r}.
inline Ball ball(const SpaceModel& s, int x, double r) {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  Ball b{x, r, {}, 0.0};
  const int k = s.count_within(x, r);
  const auto& ord = s.by_distance(x);
  b.members.assign(ord.begin(), ord.begin() + k);
  std::sort(b.members.begin(), b.members.end());
  b.measure = s.measure_of(b.members);
  return b;
}

/// V(x,y) = µ(B(x, d(x,y))).
inline double volume(const SpaceModel& s, int x, int y) {
  if (x == y) throw DomainError("volume(x, x) is undefined (kernel diagonal)");
  return s.ball_measure(x, s.d(x, y));
}

inline double set_distance(const SpaceModel& s, const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw DomainError("set_distance of an empty set");
  double m = std::numeric_limits<double>::infinity();
  for (int x : a)
    for (int y : b) m = std::min(m, s.d(x, y));
  return m;
}

/// Sorted distinct positive distances.
inline std::vector<double> realized_distances(const SpaceModel& s) {
  std::vector<double> v;
  for (int i = 0; i < s.size(); ++i)
    for (int j = i + 1; j < s.size(); ++j) v.push_back(s.d(i, j));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Realised distances, midpoints between consecutive ones, and one radius
/// beyond the diameter. Every distinct ball is B(x,r) for some r in this set.
inline std::vector<double> radius_classes(const SpaceModel& s) {
  const auto d = realized_distances(s);
  std::vector<double> r;
  for (std::size_t i = 0; i < d.size(); ++i) {
    r.push_back(d[i]);
    if (i + 1 < d.size()) r.push_back(0.5 * (d[i] + d[i + 1]));
  }
  r.push_back(d.empty() ? 1.0 : 2.0 * d.back());
  std::sort(r.begin(), r.end());
  return r;
}

struct QuasiTriangle {
  double a0 = 1.0;
  bool degenerate = false;  ///< fewer than three points: no triple to test
  int i = -1, j = -1, k = -1;  ///< witness triple when a0 > 1
};

inline QuasiTriangle quasi_triangle_constant(const SpaceModel& s) {
  QuasiTriangle q;
  const int n = s.size();
  if (n < 3) {
    q.degenerate = true;
    return q;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double ratio = s.d(i, j) / (s.d(i, k) + s.d(k, j));
        if (ratio > q.a0) q = {ratio, false, i, j, k};
      }
  return q;
}

struct SpaceProfile {
  double a0 = 1.0;
  bool degenerate = false;
  double c_mu = 1.0;
  double q = 0.0;  ///< upper dimension log2(c_mu)
  int n_geo = 1;
  int witness_center = -1;
  double witness_radius = 0.0;
};

/// Smallest N such that every ball B(x,r) is covered by N balls of radius r/2
/// (greedy cover; an upper bound on the optimal count).
inline int geometric_doubling(const SpaceModel& s) {
  const int n = s.size();
  int worst = 1;
  for (int x = 0; x < n; ++x) {
    for (double r : radius_classes(s)) {
      Ball b = ball(s, x, r);
      std::vector<char> covered(static_cast<std::size_t>(n), 1);
      for (int y : b.members) covered[static_cast<std::size_t>(y)] = 0;
      int left = static_cast<int>(b.members.size());
      int used = 0;
      while (left > 0) {
        int best = -1, gain = -1;
        for (int c = 0; c < n; ++c) {
          int g = 0;
          for (int y : b.members)
            if (!covered[static_cast<std::size_t>(y)] && s.d(c, y) < 0.5 * r) ++g;
          if (g > gain) gain = g, best = c;
        }
        for (int y : b.members)
          if (!covered[static_cast<std::size_t>(y)] && s.d(best, y) < 0.5 * r) {
            covered[static_cast<std::size_t>(y)] = 1;
            --left;
          }
        ++used;
      }
      worst = std::max(worst, used);
    }
  }
  return worst;
}

/// Candidate radii for the doubling sup: r ↦ µ(B(x,2r))/µ(B(x,r)) only
/// changes at realised distances and their halves.
inline std::vector<double> doubling_radii(const SpaceModel& s) {
  auto r = radius_classes(s);
  for (double d : realized_distances(s)) r.push_back(0.5 * d);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

inline SpaceProfile doubling_profile(const SpaceModel& s, bool with_geometric = true) {
  SpaceProfile p;
  const auto qt = quasi_triangle_constant(s);
  p.a0 = qt.a0;
  p.degenerate = qt.degenerate;
  for (int x = 0; x < s.size(); ++x)
    for (double r : doubling_radii(s)) {
      const double ratio = s.ball_measure(x, 2.0 * r) / s.ball_measure(x, r);
      if (ratio > p.c_mu) {
        p.c_mu = ratio;
        p.witness_center = x;
        p.witness_radius = r;
      }
    }
  p.q = std::log2(p.c_mu);
  if (with_geometric) p.n_geo = geometric_doubling(s);
  return p;
}

/// All distinct balls as point sets. Each carries the representative
/// (center, radius) with the smallest radius, ties broken by center id; the
/// radius is the midpoint to the next distance level. Sorted by size, then
/// lexicographically.
inline std::vector<Ball> distinct_balls(const SpaceModel& s) {
  std::map<PointSet, Ball> seen;
  for (int x = 0; x < s.size(); ++x) {
    const auto& ord = s.by_distance(x);
    std::size_t k = 0;
    while (k < ord.size()) {
      const double level = s.d(x, ord[k]);
      while (k < ord.size() && s.d(x, ord[k]) == level) ++k;
      const double r = k < ord.size() ? 0.5 * (level + s.d(x, ord[k])) : (level > 0 ? 1.5 * level : 1.0);
      PointSet members(ord.begin(), ord.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(members.begin(), members.end());
      auto it = seen.find(members);
      if (it == seen.end()) {
        Ball b{x, r, members, s.measure_of(members)};
        seen.emplace(std::move(members), std::move(b));
      } else if (r < it->second.radius) {
        it->second.center = x;
        it->second.radius = r;
      }
    }
  }
  std::vector<Ball> out;
  out.reserve(seen.size());
  for (auto& [k, b] : seen) out.push_back(std::move(b));
  std::stable_sort(out.begin(), out.end(),
                   [](const Ball& a, const Ball& b) { return a.members.size() < b.members.size(); });
  return out;
}

/// ⟨f⟩_P, the µ-average over a nonempty set.
template <class Vec>
auto average(const SpaceModel& s, const Vec& f, const PointSet& p) {
  if (p.empty()) throw DomainError("average over an empty set");
  typename Vec::Scalar acc(0);
  double m = 0.0;
  for (int x : p) acc += f[x] * s.mass(x), m += s.mass(x);
  return acc / m;
}

/// ∫_P |f − ⟨f⟩_P| dµ.
template <class Vec>
double oscillation_mass(const SpaceModel& s, const Vec& f, const PointSet& p) {
  const auto a = average(s, f, p);
  double acc = 0.0;
  for (int x : p) acc += std::abs(f[x] - a) * s.mass(x);
  return acc;
}

/// Ω(f,P) = ⟨|f − ⟨f⟩_P|⟩_P.
template <class Vec>
double oscillation(const SpaceModel& s, const Vec& f, const PointSet& p) {
  return oscillation_mass(s, f, p) / s.measure_of(p);
}

}  // namespace bloom
