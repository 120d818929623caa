#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "bloom/space.hpp"

namespace bloom {

struct Cube {
  int center = 0;
  PointSet members;
  int parent = -1;  ///< index in the next coarser generation, -1 for the root generation
  std::vector<int> children;  ///< indices in the next finer generation
  double measure = 0.0;
};

struct Generation {
  int k = 0;  ///< scale exponent: cubes have size about delta^k
  std::vector<Cube> cubes;
};

/// Nested partitions of a finite space, coarsest generation first.
struct DyadicSystem {
  double delta = 0.25;
  std::uint64_t seed = 0;
  std::vector<Generation> generations;

  double scale(std::size_t g) const { return std::pow(delta, generations[g].k); }
  std::size_t depth() const { return generations.size(); }
};

struct CubeRef {
  int gen = 0;
  int index = 0;
  auto operator<=>(const CubeRef&) const = default;
};

inline const Cube& cube_at(const DyadicSystem& s, CubeRef r) {
  return s.generations[static_cast<std::size_t>(r.gen)].cubes[static_cast<std::size_t>(r.index)];
}

inline double default_delta(double a0) { return a0 <= 1.0 ? 0.25 : 1.0 / (8.0 * a0 * a0); }

/// Greedy farthest-point δ^k-nets, nested across generations. Net selection
/// follows a seeded priority order; parent links go to the nearest coarser
/// center (ties by id); cubes are unions of descendant leaves.
inline DyadicSystem build_dyadic_tree(const SpaceModel& s, double delta, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  const int n = s.size();
  DyadicSystem sys;
  sys.delta = delta;
  sys.seed = seed;

  std::vector<int> priority = all_points(n);
  std::mt19937_64 rng(seed);
  std::shuffle(priority.begin(), priority.end(), rng);

  if (n == 1) {
    sys.generations.push_back({0, {Cube{0, {0}, -1, {}, s.mass(0)}}});
    return sys;
  }
  const double diam = s.diameter();
  const double dmin = s.min_distance();
  const double ld = std::log(delta);
  int k0 = static_cast<int>(std::ceil(std::log(diam) / ld)) - 1;
  while (std::pow(delta, k0) <= diam) --k0;
  while (std::pow(delta, k0 + 1) > diam) ++k0;
  int k1 = static_cast<int>(std::ceil(std::log(dmin) / ld));
  while (std::pow(delta, k1) > dmin) ++k1;
  while (std::pow(delta, k1 - 1) <= dmin) --k1;

  // Nested nets, coarsest first.
  std::vector<std::vector<int>> nets;
  std::vector<int> centers;
  for (int k = k0; k <= k1; ++k) {
    const double sep = std::pow(delta, k);
    if (centers.empty()) centers.push_back(priority[0]);
    std::vector<double> gap(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int y = 0; y < n; ++y)
      for (int c : centers) gap[static_cast<std::size_t>(y)] = std::min(gap[static_cast<std::size_t>(y)], s.d(y, c));
    for (;;) {
      int best = -1;
      for (int y : priority) {
        const double g = gap[static_cast<std::size_t>(y)];
        if (g < sep) continue;
        if (best < 0 || g > gap[static_cast<std::size_t>(best)]) best = y;
      }
      if (best < 0) break;
      centers.push_back(best);
      for (int y = 0; y < n; ++y) gap[static_cast<std::size_t>(y)] = std::min(gap[static_cast<std::size_t>(y)], s.d(y, best));
    }
    std::vector<int> sorted = centers;
    std::sort(sorted.begin(), sorted.end());
    nets.push_back(sorted);
  }

  // Generations, finest first, then reversed.
  std::vector<Generation> gens(nets.size());
  const std::size_t last = nets.size() - 1;
  gens[last].k = k1;
  for (int c : nets[last]) gens[last].cubes.push_back(Cube{c, {c}, -1, {}, s.mass(c)});
  for (std::size_t g = last; g-- > 0;) {
    gens[g].k = k0 + static_cast<int>(g);
    const auto& coarse = nets[g];
    std::vector<int> slot(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      slot[static_cast<std::size_t>(coarse[i])] = static_cast<int>(i);
      gens[g].cubes.push_back(Cube{coarse[i], {}, -1, {}, 0.0});
    }
    auto& fine = gens[g + 1].cubes;
    for (std::size_t j = 0; j < fine.size(); ++j) {
      const int c = fine[j].center;
      int parent = slot[static_cast<std::size_t>(c)];
      if (parent < 0) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < coarse.size(); ++i)
          if (s.d(c, coarse[i]) < best) best = s.d(c, coarse[i]), parent = static_cast<int>(i);
      }
      fine[j].parent = parent;
      auto& p = gens[g].cubes[static_cast<std::size_t>(parent)];
      p.children.push_back(static_cast<int>(j));
      p.members.insert(p.members.end(), fine[j].members.begin(), fine[j].members.end());
    }
    for (auto& q : gens[g].cubes) {
      std::sort(q.members.begin(), q.members.end());
      q.measure = s.measure_of(q.members);
    }
  }
  sys.generations = std::move(gens);
  return sys;
}

struct AxiomViolation {
  std::string axiom;
  int gen = -1;
  std::vector<int> cubes;
  int point = -1;
  std::string detail;
};

struct AxiomReport {
  std::vector<AxiomViolation> violations;
  double a_dy = 0.0;  ///< largest a with B(x, a δ^k) ⊆ Q for every cube
  double A_dy = 0.0;  ///< outer constant: Q ⊆ B(x, A δ^k), and outer balls nest
  double A_contain = 0.0;  ///< max d(x,y)/δ^k over cubes; any A above it gives containment
  int branching = 0;  ///< M
  double c_mu0 = 1.0;  ///< max µ(parent)/µ(child)
  bool ok() const { return violations.empty(); }
};

namespace detail {

/// point → cube index per generation, -1 when uncovered, -2 when covered twice.
inline std::vector<std::vector<int>> labels(const DyadicSystem& sys, int n) {
  std::vector<std::vector<int>> lab(sys.depth(), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (std::size_t g = 0; g < sys.depth(); ++g)
    for (std::size_t i = 0; i < sys.generations[g].cubes.size(); ++i)
      for (int x : sys.generations[g].cubes[i].members) {
        int& l = lab[g][static_cast<std::size_t>(x)];
        l = l == -1 ? static_cast<int>(i) : -2;
      }
  return lab;
}

inline bool outer_balls_nest(const SpaceModel& s, const DyadicSystem& sys,
                             const std::vector<std::vector<int>>& lab, double A) {
  for (std::size_t l = 1; l < sys.depth(); ++l)
    for (const auto& q : sys.generations[l].cubes) {
      const double rl = A * sys.scale(l);
      const int cnt = s.count_within(q.center, rl);
      const auto& ord = s.by_distance(q.center);
      for (std::size_t k = 0; k < l; ++k) {
        const int a = lab[k][static_cast<std::size_t>(q.center)];
        if (a < 0) continue;
        const int xa = sys.generations[k].cubes[static_cast<std::size_t>(a)].center;
        const double rk = A * sys.scale(k);
        for (int i = 0; i < cnt; ++i)
          if (s.d(xa, ord[static_cast<std::size_t>(i)]) >= rk) return false;
      }
    }
  return true;
}

}  // namespace detail

/// Checks partition, centers, nesting, parent/child containment, ball
/// sandwich, branching and the parent/child measure ratio.
inline AxiomReport verify_dyadic_axioms(const DyadicSystem& sys, const SpaceModel& s) {
  AxiomReport rep;
  const int n = s.size();
  const auto lab = detail::labels(sys, n);
  auto fail = [&](std::string axiom, int g, std::vector<int> cubes, int point, std::string detail) {
    rep.violations.push_back({std::move(axiom), g, std::move(cubes), point, std::move(detail)});
  };

  for (std::size_t g = 0; g < sys.depth(); ++g) {
    const auto& cubes = sys.generations[g].cubes;
    for (int x = 0; x < n; ++x) {
      const int l = lab[g][static_cast<std::size_t>(x)];
      if (l == -1) fail("partition", static_cast<int>(g), {}, x, "point in no cube");
      if (l == -2) {
        std::vector<int> owners;
        for (std::size_t i = 0; i < cubes.size(); ++i)
          if (contains(cubes[i].members, x)) owners.push_back(static_cast<int>(i));
        fail("partition", static_cast<int>(g), owners, x, "point in several cubes");
      }
    }
    for (std::size_t i = 0; i < cubes.size(); ++i)
      if (!contains(cubes[i].members, cubes[i].center))
        fail("center", static_cast<int>(g), {static_cast<int>(i)}, cubes[i].center, "center outside its cube");
  }

  // Every finer cube lies inside exactly one cube of every coarser generation.
  for (std::size_t l = 1; l < sys.depth(); ++l)
    for (std::size_t j = 0; j < sys.generations[l].cubes.size(); ++j) {
      const auto& q = sys.generations[l].cubes[j];
      for (std::size_t k = 0; k < l; ++k) {
        int first = q.members.empty() ? -1 : lab[k][static_cast<std::size_t>(q.members.front())];
        for (int x : q.members)
          if (lab[k][static_cast<std::size_t>(x)] != first || first < 0) {
            fail("nesting", static_cast<int>(l), {static_cast<int>(j)}, x,
                 "cube is not contained in a single generation-" + std::to_string(sys.generations[k].k) + " cube");
            break;
          }
      }
    }

  // Parent links: child ⊆ parent and the children partition the parent.
  for (std::size_t g = 0; g + 1 < sys.depth(); ++g)
    for (std::size_t i = 0; i < sys.generations[g].cubes.size(); ++i) {
      const auto& p = sys.generations[g].cubes[i];
      PointSet uni;
      for (int c : p.children) {
        const auto& ch = sys.generations[g + 1].cubes[static_cast<std::size_t>(c)];
        if (ch.parent != static_cast<int>(i) || !is_subset(ch.members, p.members))
          fail("containment", static_cast<int>(g + 1), {c}, -1, "child not inside its parent");
        uni.insert(uni.end(), ch.members.begin(), ch.members.end());
        const double ratio = p.measure / ch.measure;
        rep.c_mu0 = std::max(rep.c_mu0, ratio);
        if (ch.measure > p.measure * (1 + 1e-12))
          fail("measure-ratio", static_cast<int>(g + 1), {c}, -1, "child heavier than parent");
      }
      std::sort(uni.begin(), uni.end());
      if (uni != p.members) fail("containment", static_cast<int>(g), {static_cast<int>(i)}, -1, "children do not cover the parent");
      rep.branching = std::max(rep.branching, static_cast<int>(p.children.size()));
    }

  // Ball sandwich.
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < sys.depth(); ++g)
    for (const auto& q : sys.generations[g].cubes) {
      const double sc = sys.scale(g);
      double inner = std::numeric_limits<double>::infinity(), outer = 0.0;
      for (int y = 0; y < n; ++y) {
        if (contains(q.members, y)) outer = std::max(outer, s.d(q.center, y));
        else inner = std::min(inner, s.d(q.center, y));
      }
      a = std::min(a, inner / sc);
      rep.A_contain = std::max(rep.A_contain, outer / sc);
    }
  rep.a_dy = std::isinf(a) ? 1.0 : a;
  if (!(rep.a_dy > 0.0)) fail("ball-sandwich", -1, {}, -1, "inner ball radius vanishes");

  if (rep.ok()) {
    std::vector<double> cand{rep.A_contain};
    for (std::size_t g = 0; g < sys.depth(); ++g)
      for (double d : realized_distances(s))
        if (d / sys.scale(g) > rep.A_contain) cand.push_back(d / sys.scale(g));
    std::sort(cand.begin(), cand.end());
    rep.A_dy = std::numeric_limits<double>::infinity();
    for (double c : cand) {
      const double A = c * (1 + 1e-9) + 1e-300;
      if (detail::outer_balls_nest(s, sys, lab, A)) {
        rep.A_dy = A;
        break;
      }
    }
    if (std::isinf(rep.A_dy)) fail("ball-sandwich", -1, {}, -1, "outer balls never nest");
  }
  return rep;
}

/// Builds and verifies; throws ConstructionError naming the first violated axiom.
inline DyadicSystem build_dyadic_system(const SpaceModel& s, double delta, std::uint64_t seed) {
  DyadicSystem sys = build_dyadic_tree(s, delta, seed);
  const auto rep = verify_dyadic_axioms(sys, s);
  if (!rep.ok()) throw ConstructionError(rep.violations.front().axiom, rep.violations.front().detail);
  return sys;
}

inline std::vector<DyadicSystem> build_adjacent_systems(const SpaceModel& s, double delta, int count,
                                                        const std::vector<std::uint64_t>& seeds) {
  if (count < 1) throw DomainError("need at least one dyadic system");
  if (static_cast<int>(seeds.size()) < count) throw DomainError("fewer seeds than systems");
  std::vector<DyadicSystem> out;
  for (int t = 0; t < count; ++t) out.push_back(build_dyadic_system(s, delta, seeds[static_cast<std::size_t>(t)]));
  return out;
}

/// Cubes of one system with witness sets E_Q ⊆ Q.
struct SparseFamily {
  std::shared_ptr<const DyadicSystem> system;
  double eta = 1.0;
  std::vector<CubeRef> cubes;
  std::vector<PointSet> witness;  ///< parallel to cubes

  const Cube& cube(std::size_t i) const { return cube_at(*system, cubes[i]); }
  std::size_t size() const { return cubes.size(); }
};

struct SparseReport {
  bool ok = true;
  double worst_ratio = std::numeric_limits<double>::infinity();  ///< min µ(E_Q)/µ(Q)
  int worst_cube = -1;
  int max_overlap = 0;
  std::vector<int> failing;  ///< family indices with µ(E_Q) < η µ(Q) or E_Q ⊄ Q
};

inline SparseReport verify_sparse(const SparseFamily& fam, const SpaceModel& s) {
  SparseReport rep;
  std::vector<int> count(static_cast<std::size_t>(s.size()), 0);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& q = fam.cube(i);
    const auto& e = fam.witness[i];
    for (int x : e) ++count[static_cast<std::size_t>(x)];
    const double ratio = s.measure_of(e) / q.measure;
    if (ratio < rep.worst_ratio) rep.worst_ratio = ratio, rep.worst_cube = static_cast<int>(i);
    if (!is_subset(e, q.members) || ratio < fam.eta * (1 - 1e-12)) {
      rep.ok = false;
      rep.failing.push_back(static_cast<int>(i));
    }
  }
  for (int c : count) rep.max_overlap = std::max(rep.max_overlap, c);
  return rep;
}

/// Family of all cubes of the given generations with E_Q = Q.
inline SparseFamily full_generations(std::shared_ptr<const DyadicSystem> sys, const std::vector<int>& gens, double eta = 1.0) {
  SparseFamily f{std::move(sys), eta, {}, {}};
  for (int g : gens)
    for (std::size_t i = 0; i < f.system->generations[static_cast<std::size_t>(g)].cubes.size(); ++i) {
      f.cubes.push_back({g, static_cast<int>(i)});
      f.witness.push_back(cube_at(*f.system, f.cubes.back()).members);
    }
  return f;
}

/// Maximal proper dyadic subcubes P of Q with ⟨g⟩_P > threshold, where g is a
/// nonnegative function. Subcubes with the same point set as Q are descended.
inline std::vector<CubeRef> maximal_subcubes_above(const DyadicSystem& sys, const SpaceModel& s, CubeRef q,
                                                   const RealVector& g, double threshold) {
  std::vector<CubeRef> out;
  const std::size_t size_q = cube_at(sys, q).members.size();
  std::vector<CubeRef> stack;
  for (int c : cube_at(sys, q).children) stack.push_back({q.gen + 1, c});
  while (!stack.empty()) {
    CubeRef r = stack.back();
    stack.pop_back();
    const Cube& c = cube_at(sys, r);
    if (c.members.size() < size_q && average(s, g, c.members) > threshold) {
      out.push_back(r);
      continue;
    }
    for (int ch : c.children) stack.push_back({r.gen + 1, ch});
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Augmentation {
  SparseFamily family;
  double constant = 0.0;  ///< smallest C in the pointwise oscillation bound
  int worst_point = -1;
  int worst_cube = -1;
};

/// Closes S under the oscillation stopping rule: for Q in the family, the
/// maximal proper subcubes P with ⟨|b − ⟨b⟩_Q|⟩_P > 2Ω(b,Q) are added. Added
/// cubes get E_P = P minus its own stopping cubes, so the result is
/// η/(2(η+1))-sparse. Also measures the smallest C with
/// |b(x) − ⟨b⟩_Q| ≤ C Σ_{P∈S̃, P⊆Q} Ω(b,P) χ_P(x) on every Q ∈ S̃.
template <class Vec>
Augmentation augment_sparse_family(const Vec& b, const SparseFamily& fam, const SpaceModel& s) {
  const DyadicSystem& sys = *fam.system;
  std::map<CubeRef, PointSet> wit;
  for (std::size_t i = 0; i < fam.size(); ++i) wit.emplace(fam.cubes[i], fam.witness[i]);
  std::vector<CubeRef> queue(fam.cubes.begin(), fam.cubes.end());
  std::set<CubeRef> done;
  while (!queue.empty()) {
    CubeRef q = queue.back();
    queue.pop_back();
    if (!done.insert(q).second) continue;
    const Cube& c = cube_at(sys, q);
    const auto avg = average(s, b, c.members);
    RealVector dev = RealVector::Zero(s.size());
    for (int x : c.members) dev[x] = std::abs(b[x] - avg);
    const double omega = oscillation(s, b, c.members);
    const auto stops = maximal_subcubes_above(sys, s, q, dev, 2.0 * omega);
    if (!wit.count(q)) {
      PointSet e = c.members;
      for (CubeRef p : stops) {
        PointSet rest;
        const auto& pm = cube_at(sys, p).members;
        std::set_difference(e.begin(), e.end(), pm.begin(), pm.end(), std::back_inserter(rest));
        e.swap(rest);
      }
      wit.emplace(q, e);
    }
    for (CubeRef p : stops)
      if (!done.count(p)) queue.push_back(p);
  }
  Augmentation out;
  out.family = SparseFamily{fam.system, fam.eta / (2.0 * (fam.eta + 1.0)), {}, {}};
  for (auto& [r, e] : wit) {
    out.family.cubes.push_back(r);
    out.family.witness.push_back(e);
  }

  // Empirical constant.
  const auto& cubes = out.family.cubes;
  std::vector<double> omega(cubes.size());
  for (std::size_t i = 0; i < cubes.size(); ++i) omega[i] = oscillation(s, b, cube_at(sys, cubes[i]).members);
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const auto& qm = cube_at(sys, cubes[i]).members;
    const auto avg = average(s, b, qm);
    for (int x : qm) {
      const double lhs = std::abs(b[x] - avg);
      double rhs = 0.0;
      for (std::size_t j = 0; j < cubes.size(); ++j) {
        const auto& pm = cube_at(sys, cubes[j]).members;
        if (contains(pm, x) && is_subset(pm, qm)) rhs += omega[j];
      }
      double ratio = 0.0;
      if (rhs > 0.0) ratio = lhs / rhs;
      else if (lhs > 1e-12 * (1.0 + std::abs(avg))) ratio = std::numeric_limits<double>::infinity();
      if (ratio > out.constant) out.constant = ratio, out.worst_point = x, out.worst_cube = static_cast<int>(i);
    }
  }
  return out;
}

}  // namespace bloom
