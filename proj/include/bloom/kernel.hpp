#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bloom/space.hpp"

namespace bloom {

struct Perturbation {
  double amplitude = 0.1;
  std::uint64_t seed = 0;
};

/// Builtin kernel families:
///  - "power-sign":   σ(x,y)/V(x,y), σ = sign of the coordinate difference
///                    along `axis` (index order when coordinates tie or are
///                    absent), or σ ≡ 1 with orientation "constant";
///  - "riesz-like":   ((x−y)/|x−y|)_axis / V(x,y), needs coordinates;
///  - "hilbert-grid": 1/(x − y) on the `axis` coordinate (indices without
///                    coordinates).
/// An optional perturbation multiplies by 1 + amplitude·φ(x,y), φ ∈ [−1,1].
struct KernelSpec {
  std::string family = "power-sign";
  std::string orientation = "coordinate";
  int axis = 0;
  std::optional<Perturbation> perturbation;
  bool transposed = false;

  std::string name() const { return perturbation ? "perturbed" : family; }
};

inline bool is_builtin_family(const std::string& f) {
  return f == "power-sign" || f == "riesz-like" || f == "hilbert-grid";
}

/// K*(x,y) = K(y,x).
inline KernelSpec adjoint(KernelSpec k) {
  k.transposed = !k.transposed;
  return k;
}

namespace detail {

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_noise(std::uint64_t seed, int x, int y) {
  const auto h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(x) * 0x100000001b3ULL + static_cast<std::uint64_t>(y)));
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

inline double coord(const SpaceModel& s, int x, int axis) {
  if (s.coords()) {
    if (axis >= s.coords()->cols()) throw DomainError("kernel axis exceeds coordinate dimension");
    return (*s.coords())(x, axis);
  }
  return static_cast<double>(x);
}

}  // namespace detail

inline Complex evaluate(const KernelSpec& k, const SpaceModel& s, int x, int y) {
  if (x == y) throw DomainError("kernel evaluated on the diagonal");
  if (k.transposed) std::swap(x, y);
  double v = 0.0;
  if (k.family == "power-sign") {
    double sigma = 1.0;
    if (k.orientation == "coordinate") {
      const double diff = s.coords() ? detail::coord(s, x, k.axis) - detail::coord(s, y, k.axis) : 0.0;
      sigma = diff > 0 ? 1.0 : diff < 0 ? -1.0 : (x > y ? 1.0 : -1.0);
    } else if (k.orientation != "constant") {
      throw DomainError("power-sign orientation must be 'coordinate' or 'constant'");
    }
    v = sigma / volume(s, x, y);
  } else if (k.family == "riesz-like") {
    if (!s.coords()) throw DomainError("riesz-like kernel needs coordinates");
    const Eigen::RowVectorXd diff = s.coords()->row(x) - s.coords()->row(y);
    const double len = diff.norm();
    if (len == 0.0) throw DomainError("riesz-like kernel on coincident coordinates");
    if (k.axis >= diff.size()) throw DomainError("kernel axis exceeds coordinate dimension");
    v = diff[k.axis] / len / volume(s, x, y);
  } else if (k.family == "hilbert-grid") {
    const double diff = detail::coord(s, x, k.axis) - detail::coord(s, y, k.axis);
    if (diff == 0.0) throw DomainError("hilbert-grid kernel on coincident coordinates");
    v = 1.0 / diff;
  } else {
    throw DomainError("unknown kernel family '" + k.family + "'");
  }
  if (k.perturbation) v *= 1.0 + k.perturbation->amplitude * detail::unit_noise(k.perturbation->seed, x, y);
  return v;
}

/// K(i,j) for i ≠ j, zero diagonal.
inline ComplexMatrix kernel_matrix(const KernelSpec& k, const SpaceModel& s) {
  const int n = s.size();
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) m(i, j) = evaluate(k, s, i, j);
  return m;
}

struct EnvelopePoint {
  double t = 0.0;
  double omega = 0.0;
};

struct NonDegeneracy {
  double c0 = 0.0;  ///< +inf when some annulus carries no usable partner
  double cbar = 1.0;
  int witness_center = -1;
  double witness_radius = 0.0;
  int checked = 0;  ///< (center, radius) pairs with a possibly nonempty annulus
  int skipped = 0;  ///< pairs with r beyond the eccentricity (no annulus on a finite space)
  bool holds() const { return std::isfinite(c0); }
};

struct KernelCertificate {
  double c_k = 0.0;
  std::vector<EnvelopePoint> envelope;  ///< nondecreasing upper fit, sorted by t
  double dini = 0.0;
  double dini_tail = 0.0;  ///< ω(t_min): linear-tail estimate of ∫_0^{t_min} ω(t)/t dt
  double subadditivity_defect = 0.0;
  NonDegeneracy nondeg_y;  ///< ∀x,r ∃y in the annulus around x
  NonDegeneracy nondeg_x;  ///< ∀y,r ∃x in the annulus around y
  double weak_type_c = 0.0;
  double a0 = 1.0;
  double c_mu = 1.0;
  double upper_dim = 0.0;

  /// ω(t) of the fitted envelope (0 below the smallest sample).
  double omega(double t) const {
    double v = 0.0;
    for (const auto& e : envelope) {
      if (e.t > t) break;
      v = e.omega;
    }
    return v;
  }
};

/// Non-degeneracy of M(center, partner): for every center c and radius class
/// r ≤ ecc(c) there is a partner in r ≤ d(c,·) < C̄r with
/// |M(c,·)| ≥ 1/(c0 µ(B(c,r))). C̄ defaults to the smallest value making every
/// such annulus nonempty.
inline NonDegeneracy nondegeneracy(const ComplexMatrix& m, const SpaceModel& s, std::optional<double> cbar = std::nullopt) {
  NonDegeneracy nd;
  const auto radii = radius_classes(s);
  const int n = s.size();
  if (!cbar) {
    double need = 1.0;
    for (int c = 0; c < n; ++c)
      for (double r : radii) {
        if (r > s.eccentricity(c)) continue;
        double next = std::numeric_limits<double>::infinity();
        for (int y = 0; y < n; ++y)
          if (s.d(c, y) >= r) next = std::min(next, s.d(c, y));
        need = std::max(need, next / r);
      }
    cbar = need * (1.0 + 1e-9);
  }
  nd.cbar = *cbar;
  for (int c = 0; c < n; ++c)
    for (double r : radii) {
      if (r > s.eccentricity(c)) {
        ++nd.skipped;
        continue;
      }
      ++nd.checked;
      double best = 0.0;
      for (int y = 0; y < n; ++y) {
        const double dist = s.d(c, y);
        if (dist >= r && dist < nd.cbar * r) best = std::max(best, std::abs(m(c, y)));
      }
      const double c0 = best > 0.0 ? 1.0 / (best * s.ball_measure(c, r)) : std::numeric_limits<double>::infinity();
      if (c0 > nd.c0) nd.c0 = c0, nd.witness_center = c, nd.witness_radius = r;
    }
  return nd;
}

/// Measures size, smoothness envelope, Dini value, non-degeneracy in both
/// orientations and the weak-type constant.
inline KernelCertificate certify(const ComplexMatrix& km, const SpaceModel& s, const SpaceProfile& prof) {
  KernelCertificate cert;
  cert.a0 = prof.a0;
  cert.c_mu = prof.c_mu;
  cert.upper_dim = prof.q;
  const int n = s.size();
  RealMatrix vol = RealMatrix::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) {
        vol(x, y) = volume(s, x, y);
        cert.c_k = std::max(cert.c_k, std::abs(km(x, y)) * vol(x, y));
      }

  std::vector<EnvelopePoint> samples;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      const double dxy = s.d(x, y);
      for (int xp = 0; xp < n; ++xp) {
        if (xp == x || xp == y) continue;
        if (!(s.d(x, xp) < dxy / (2.0 * prof.a0))) continue;
        const double v = vol(x, y) * (std::abs(km(x, y) - km(xp, y)) + std::abs(km(y, x) - km(y, xp)));
        samples.push_back({s.d(x, xp) / dxy, v});
      }
    }
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  double run = 0.0;
  for (const auto& e : samples) {
    run = std::max(run, e.omega);
    if (!cert.envelope.empty() && cert.envelope.back().t == e.t) cert.envelope.back().omega = run;
    else cert.envelope.push_back({e.t, run});
  }
  const auto& env = cert.envelope;
  for (std::size_t i = 0; i + 1 < env.size(); ++i)
    cert.dini += 0.5 * (env[i].omega / env[i].t + env[i + 1].omega / env[i + 1].t) * (env[i + 1].t - env[i].t);
  if (!env.empty()) {
    const auto& last = env.back();
    if (last.t < 1.0) cert.dini += 0.5 * (last.omega / last.t + last.omega) * (1.0 - last.t);
    cert.dini_tail = env.front().omega;
  }
  for (std::size_t i = 0; i < env.size(); ++i)
    for (std::size_t j = i; j < env.size(); ++j) {
      const double t = env[i].t + env[j].t;
      if (t > 1.0) break;
      cert.subadditivity_defect = std::max(cert.subadditivity_defect, cert.omega(t) - env[i].omega - env[j].omega);
    }

  cert.nondeg_y = nondegeneracy(km, s);
  cert.nondeg_x = nondegeneracy(km.transpose(), s);

  for (int x = 0; x < n; ++x) {
    std::vector<std::pair<double, double>> lv;
    for (int y = 0; y < n; ++y)
      if (y != x) lv.push_back({std::abs(km(x, y)), s.mass(y)});
    std::sort(lv.begin(), lv.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double mass = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      mass += lv[i].second;
      if (i + 1 < lv.size() && lv[i + 1].first == lv[i].first) continue;
      cert.weak_type_c = std::max(cert.weak_type_c, lv[i].first * mass);
    }
  }
  return cert;
}

inline KernelCertificate certify(const KernelSpec& k, const SpaceModel& s, const SpaceProfile& prof) {
  return certify(kernel_matrix(k, s), s, prof);
}

/// Size constant the adjoint is guaranteed to satisfy: C_mu (2A0)^Q c_K.
inline double adjoint_size_bound(const KernelCertificate& c) {
  return c.c_mu * std::pow(2.0 * c.a0, c.upper_dim) * c.c_k;
}

/// ξ for companion balls in the orientation where partners x are searched
/// around y (the `nondeg_x` certificate): covers the center-distance bracket,
/// both kernel comparisons, and the annulus width.
inline double certified_xi(const KernelCertificate& c) {
  return std::max({1.0, c.nondeg_x.cbar, c.nondeg_x.c0, adjoint_size_bound(c)});
}

}  // namespace bloom
