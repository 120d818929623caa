#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "bloom/kernel.hpp"

namespace bloom {

/// (Tf)(x) = Σ_{y≠x} K(x,y) f(y) µ(y), stored as M = K·diag(µ) with zero diagonal.
struct OperatorMatrix {
  ComplexMatrix kernel;
  RealVector measure;
  ComplexMatrix entries;

  int size() const { return static_cast<int>(kernel.rows()); }
};

inline OperatorMatrix make_operator(ComplexMatrix kernel, const SpaceModel& s) {
  if (kernel.rows() != s.size() || kernel.cols() != s.size()) throw DomainError("kernel matrix does not match the space");
  kernel.diagonal().setZero();
  OperatorMatrix t{std::move(kernel), s.measure(), {}};
  t.entries = t.kernel * t.measure.cast<Complex>().asDiagonal();
  return t;
}

inline OperatorMatrix make_operator(const KernelSpec& k, const SpaceModel& s) { return make_operator(kernel_matrix(k, s), s); }

/// Operator with kernel K*(x,y) = K(y,x).
inline OperatorMatrix adjoint(const OperatorMatrix& t) {
  OperatorMatrix a{t.kernel.transpose(), t.measure, {}};
  a.entries = a.kernel * a.measure.cast<Complex>().asDiagonal();
  return a;
}

inline ComplexVector apply_operator(const OperatorMatrix& t, const ComplexVector& f) { return t.entries * f; }

inline ComplexVector apply_adjoint(const OperatorMatrix& t, const ComplexVector& g) {
  return t.kernel.transpose() * (t.measure.cast<Complex>().asDiagonal() * g);
}

/// [b,T]f = b·Tf − T(bf).
inline ComplexVector commutator_apply(const ComplexVector& b, const OperatorMatrix& t, const ComplexVector& f) {
  return b.cwiseProduct(apply_operator(t, f)) - apply_operator(t, b.cwiseProduct(f));
}

inline ComplexMatrix commutator_matrix(const ComplexVector& b, const OperatorMatrix& t) {
  return b.asDiagonal() * t.entries - t.entries * b.asDiagonal();
}

/// Bilinear pairing ∫ f g dµ (no conjugation).
inline Complex pairing(const ComplexVector& f, const ComplexVector& g, const RealVector& mu) {
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) acc += f[i] * g[i] * mu[i];
  return acc;
}

enum class NormMethod { SvdExact, BruteOracle, MultistartAscent };

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::SvdExact: return "svd-exact";
    case NormMethod::BruteOracle: return "brute-oracle";
    case NormMethod::MultistartAscent: return "multistart-ascent";
  }
  return "?";
}

inline NormMethod parse_norm_method(const std::string& s) {
  if (s == "svd-exact") return NormMethod::SvdExact;
  if (s == "brute-oracle") return NormMethod::BruteOracle;
  if (s == "multistart-ascent") return NormMethod::MultistartAscent;
  throw DomainError("unknown norm method '" + s + "'");
}

struct AscentOptions {
  int starts = 64;
  int iterations = 500;
  std::uint64_t seed = 0;
  long brute_evaluations = 2'000'000;
};

struct NormEstimate {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();  ///< +inf: no certified upper bound
  NormMethod method = NormMethod::SvdExact;
  ComplexVector witness;  ///< f with ‖Mf‖_{q,λ2} = lower·‖f‖_{p,λ1}
  double p = 2.0, q = 2.0;
  AscentOptions options;
  long evaluations = 0;
};

namespace detail {

inline double lp(const ComplexVector& v, double p) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// Norming functional of v in ℓ^p: unit ℓ^{p'} vector w with Σ w v = ‖v‖_p.
inline ComplexVector dual_vector(const ComplexVector& v, double p) {
  const double n = lp(v, p);
  ComplexVector w = ComplexVector::Zero(v.size());
  if (n == 0.0) return w;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > 0.0) w[i] = std::pow(a / n, p - 1.0) * std::conj(v[i]) / a;
  }
  return w;
}

inline double ratio(const ComplexMatrix& a, const ComplexVector& u, double p, double q) {
  const double d = lp(u, p);
  return d == 0.0 ? 0.0 : lp(a * u, q) / d;
}

/// Nonlinear power iteration for ‖A‖_{ℓ^p→ℓ^q} with step halving on
/// non-improvement. Returns the best ratio; u is updated in place.
inline double power_ascent(const ComplexMatrix& a, ComplexVector& u, double p, double q, int iterations) {
  const double pc = conjugate(p);
  u /= lp(u, p);
  double best = ratio(a, u, p, q);
  int stalled = 0;
  for (int it = 0; it < iterations && stalled < 8; ++it) {
    // ‖Au‖_q = Σ w (Au) = Σ (Aᵀw) u with w the norming functional of Au.
    const ComplexVector z = a.transpose() * dual_vector(a * u, q);
    ComplexVector next = dual_vector(z, pc);
    if (lp(next, p) == 0.0) break;
    next /= lp(next, p);
    double v = ratio(a, next, p, q);
    double t = 1.0;
    while (v < best && t > 1e-6) {
      t *= 0.5;
      ComplexVector mix = u + t * (next - u);
      const double m = lp(mix, p);
      if (m == 0.0) break;
      mix /= m;
      v = ratio(a, mix, p, q);
      if (v >= best) next = mix;
    }
    if (v < best) break;
    stalled = v <= best * (1.0 + 1e-15) ? stalled + 1 : 0;
    best = v;
    u = next;
  }
  return best;
}

}  // namespace detail

/// Reduction to plain sequence norms: ‖Mf‖_{q,λ2}/‖f‖_{p,λ1} = ‖A u‖_q/‖u‖_p
/// with A = D2 M D1^{-1}, D1 = diag(λ1 µ^{1/p}), D2 = diag(λ2 µ^{1/q}), u = D1 f.
struct Reweighted {
  ComplexMatrix a;
  RealVector d1;
};

inline Reweighted reweight(const ComplexMatrix& m, const RealVector& mu, const RealVector& l1, double p,
                           const RealVector& l2, double q) {
  const RealVector d1 = (l1.array() * mu.array().pow(1.0 / p)).matrix();
  const RealVector d2 = (l2.array() * mu.array().pow(1.0 / q)).matrix();
  ComplexMatrix a = d2.cast<Complex>().asDiagonal() * m;
  a = a * d1.cwiseInverse().cast<Complex>().asDiagonal();
  return {std::move(a), d1};
}

/// ‖M‖_{L^p_{λ1} → L^q_{λ2}} on a finite measure space.
///  - svd-exact: p = q = 2 only, exact largest singular value;
///  - brute-oracle: real matrices with n ≤ 6, angular grid over the unit
///    sphere with a certified covering bound, then polished;
///  - multistart-ascent: seeded nonlinear power iterations, lower bound only.
inline NormEstimate operator_norm(const ComplexMatrix& m, const RealVector& mu, double p, const RealVector& l1, double q,
                                  const RealVector& l2, NormMethod method, const AscentOptions& opt = {}) {
  if (!(p >= 1.0) || !(q >= 1.0) || !std::isfinite(p) || !std::isfinite(q))
    throw DomainError("operator_norm needs 1 <= p, q < infinity");
  require_positive(l1);
  require_positive(l2);
  const int n = static_cast<int>(m.rows());
  NormEstimate est;
  est.method = method;
  est.p = p;
  est.q = q;
  est.options = opt;
  const auto rw = reweight(m, mu, l1, p, l2, q);
  const auto finish = [&](const ComplexVector& u) {
    est.witness = rw.d1.cwiseInverse().cast<Complex>().asDiagonal() * u;
  };
  if (rw.a.isZero(0.0)) {
    est.lower = est.upper = 0.0;
    finish(ComplexVector::Zero(n));
    return est;
  }

  switch (method) {
    case NormMethod::SvdExact: {
      if (p != 2.0 || q != 2.0) throw CapabilityError("svd-exact supports p = q = 2 only");
      Eigen::JacobiSVD<ComplexMatrix> svd(rw.a, Eigen::ComputeFullV);
      est.lower = est.upper = svd.singularValues()[0];
      finish(svd.matrixV().col(0));
      return est;
    }
    case NormMethod::BruteOracle: {
      if (n > 6) throw CapabilityError("brute-oracle supports n <= 6");
      if (!rw.a.imag().isZero(0.0)) throw CapabilityError("brute-oracle supports real matrices only");
      const int dims = n - 1;
      ComplexVector best_u = ComplexVector::Zero(n);
      double best = 0.0;
      if (dims == 0) {
        best_u[0] = 1.0;
        best = detail::ratio(rw.a, best_u, p, q);
        est.lower = est.upper = best;
        est.evaluations = 1;
        finish(best_u);
        return est;
      }
      // Hyperspherical angles: φ_1..φ_{n-2} ∈ [0,π], φ_{n-1} ∈ [0,π] (half sphere, u_n ≥ 0).
      const int m_steps = std::max(2, std::min(20000, static_cast<int>(std::pow(static_cast<double>(opt.brute_evaluations), 1.0 / dims)) - 1));
      const double h = std::numbers::pi / m_steps;
      std::vector<int> idx(static_cast<std::size_t>(dims), 0);
      ComplexVector u(n);
      for (;;) {
        double sprod = 1.0;
        for (int i = 0; i < dims; ++i) {
          const double phi = idx[static_cast<std::size_t>(i)] * h;
          u[i] = sprod * std::cos(phi);
          sprod *= std::sin(phi);
        }
        u[dims] = sprod;
        const double v = detail::ratio(rw.a, u, p, q);
        ++est.evaluations;
        if (v > best) best = v, best_u = u;
        int k = 0;
        while (k < dims && ++idx[static_cast<std::size_t>(k)] > m_steps) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == dims) break;
      }
      const double rho = 0.5 * h * std::sqrt(static_cast<double>(dims));
      const double e = 1.0 / p - 0.5;
      const double c_p = std::pow(n, std::max(0.0, e));
      const double m_p = std::pow(n, std::min(0.0, e));
      const double kappa = c_p * rho / m_p;
      est.upper = kappa < 1.0 ? best * (1.0 + kappa) / (1.0 - kappa) : std::numeric_limits<double>::infinity();
      ComplexVector polished = best_u;
      const double pol = detail::power_ascent(rw.a, polished, p, q, 2000);
      if (pol > best) best = pol, best_u = polished;
      est.lower = best;
      finish(best_u / detail::lp(best_u, p));
      return est;
    }
    case NormMethod::MultistartAscent: {
      std::mt19937_64 rng(opt.seed);
      std::normal_distribution<double> g;
      const bool real = rw.a.imag().isZero(0.0);
      ComplexVector best_u;
      for (int s = 0; s < opt.starts; ++s) {
        ComplexVector u(n);
        for (int i = 0; i < n; ++i) {
          const double re = g(rng);
          u[i] = real ? Complex(re, 0.0) : Complex(re, g(rng));
        }
        const double v = detail::power_ascent(rw.a, u, p, q, opt.iterations);
        ++est.evaluations;
        if (v > est.lower) est.lower = v, best_u = u;
      }
      finish(best_u);
      return est;
    }
  }
  throw CapabilityError("unsupported norm method");
}

inline NormEstimate operator_norm(const OperatorMatrix& t, const RealVector& l1, double p, const RealVector& l2, double q,
                                  NormMethod method, const AscentOptions& opt = {}) {
  return operator_norm(t.entries, t.measure, p, l1, q, l2, method, opt);
}

}  // namespace bloom
