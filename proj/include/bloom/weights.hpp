#pragma once

#include "bloom/dyadic.hpp"
#include "bloom/space.hpp"

namespace bloom {

/// w(P) = ∫_P w dµ.
inline double weight_mass(const SpaceModel& s, const RealVector& w, const PointSet& p) {
  double m = 0.0;
  for (int x : p) m += w[x] * s.mass(x);
  return m;
}

/// ∫_P w^e dµ.
inline double power_mass(const SpaceModel& s, const RealVector& w, double e, const PointSet& p) {
  double m = 0.0;
  for (int x : p) m += std::pow(w[x], e) * s.mass(x);
  return m;
}

struct Characteristic {
  double value = 1.0;
  Ball witness;
};

/// A_p ratio on one set: (∫ w)(∫ w^{−1/(p−1)})^{p−1} / µ^p.
inline double ap_ratio(const SpaceModel& s, const RealVector& w, double p, const PointSet& b) {
  const double m = s.measure_of(b);
  return weight_mass(s, w, b) * std::pow(power_mass(s, w, -1.0 / (p - 1.0), b), p - 1.0) / std::pow(m, p);
}

/// [w]_{A_p}: exact sup over the given balls.
inline Characteristic ap_characteristic(const SpaceModel& s, const RealVector& w, double p, const std::vector<Ball>& balls) {
  if (!(p > 1.0)) throw DomainError("A_p needs p > 1");
  require_positive(w);
  Characteristic c{0.0, {}};
  for (const auto& b : balls) {
    const double r = ap_ratio(s, w, p, b.members);
    if (r > c.value) c = {r, b};
  }
  return c;
}

inline Characteristic ap_characteristic(const SpaceModel& s, const RealVector& w, double p) {
  return ap_characteristic(s, w, p, distinct_balls(s));
}

/// [λ]_{A_{p,p}} = [λ^p]_{A_p}^{1/p}.
inline Characteristic app_characteristic(const SpaceModel& s, const RealVector& lambda, double p, const std::vector<Ball>& balls) {
  auto c = ap_characteristic(s, lambda.array().pow(p).matrix(), p, balls);
  c.value = std::pow(c.value, 1.0 / p);
  return c;
}

struct BloomTuple {
  double p = 2.0, q = 2.0;
  double p_conj = 2.0, q_conj = 2.0;
  double alpha = 0.0;  ///< α = Q(1/p − 1/q)
  double alpha_over_q = 0.0;  ///< 1/p − 1/q
  double upper_dim = 0.0;
  double nu_exponent = 1.0;  ///< 1/(1/p + 1/q')
  double s = 2.0;  ///< 2/(1 + α/Q)
  RealVector nu;
};

inline void check_exponents(double p, double q) {
  if (!(p > 1.0) || !std::isfinite(q)) throw DomainError("exponents must satisfy 1 < p <= q < infinity");
  if (p > q) throw DomainError("exponents: p must not exceed q");
}

/// Bloom weight ν = (λ1/λ2)^{1/(1/p+1/q')} and its exponents.
inline BloomTuple bloom_tuple(const RealVector& lambda1, const RealVector& lambda2, double p, double q, double upper_dim) {
  check_exponents(p, q);
  require_positive(lambda1);
  require_positive(lambda2);
  BloomTuple t;
  t.p = p;
  t.q = q;
  t.p_conj = conjugate(p);
  t.q_conj = conjugate(q);
  t.alpha_over_q = 1.0 / p - 1.0 / q;
  t.upper_dim = upper_dim;
  t.alpha = upper_dim * t.alpha_over_q;
  t.nu_exponent = 1.0 / (1.0 / p + 1.0 / t.q_conj);
  t.s = 2.0 / (1.0 + t.alpha_over_q);
  t.nu = (lambda1.array() / lambda2.array()).pow(t.nu_exponent).matrix();
  return t;
}

/// ‖f‖_{L^p_w} = (Σ |f_i w_i|^p µ_i)^{1/p}.
template <class Vec>
double weighted_lp_norm(const SpaceModel& s, const Vec& f, const RealVector& w, double p) {
  if (!(p >= 1.0)) throw DomainError("weighted_lp_norm needs p >= 1");
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i) acc += std::pow(std::abs(f[i]) * w[i], p) * s.mass(i);
  return std::pow(acc, 1.0 / p);
}

struct BmoNorm {
  double value = 0.0;
  Ball witness;
};

/// sup_B w(B)^{−α/Q} w(B)^{−1} ∫_B |b − ⟨b⟩_B| dµ over the given balls.
/// `alpha_over_q` is the ratio α/Q = 1/p − 1/q.
template <class Vec>
BmoNorm bmo_fractional_norm(const SpaceModel& s, const Vec& b, const RealVector& w, double alpha_over_q,
                            const std::vector<Ball>& balls) {
  BmoNorm out;
  for (const auto& B : balls) {
    const double wb = weight_mass(s, w, B.members);
    const double v = oscillation_mass(s, b, B.members) / std::pow(wb, 1.0 + alpha_over_q);
    if (out.witness.members.empty() || v > out.value) out = {v, B};
  }
  return out;
}

template <class Vec>
BmoNorm bmo_fractional_norm(const SpaceModel& s, const Vec& b, const RealVector& w, double alpha, double upper_dim) {
  const double e = alpha == 0.0 ? 0.0 : alpha / upper_dim;
  return bmo_fractional_norm(s, b, w, e, distinct_balls(s));
}

/// λ1^p(P)^{1/p} λ2^{−q'}(P)^{1/q'}: the normaliser shared by the sparse BMO
/// norm and the fractional sparse operator.
inline double two_weight_scale(const SpaceModel& s, const RealVector& l1, const RealVector& l2, double p, double q,
                               const PointSet& P) {
  const double qc = conjugate(q);
  return std::pow(power_mass(s, l1, p, P), 1.0 / p) * std::pow(power_mass(s, l2, -qc, P), 1.0 / qc);
}

/// sup_{Q∈S} ∫_Q |b − ⟨b⟩_Q| / (λ1^p(Q)^{1/p} λ2^{−q'}(Q)^{1/q'}).
template <class Vec>
double bmo_sparse_norm(const SpaceModel& s, const Vec& b, const RealVector& l1, const RealVector& l2, double p, double q,
                       const SparseFamily& fam) {
  double out = 0.0;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& m = fam.cube(i).members;
    out = std::max(out, oscillation_mass(s, b, m) / two_weight_scale(s, l1, l2, p, q, m));
  }
  return out;
}

struct S2Violation {
  Ball ball;
  double ratio = 0.0;
};

struct S2Report {
  double char1 = 1.0;  ///< [λ1]_{A_{p,p}}
  double char2 = 1.0;  ///< [λ2]_{A_{q,q}}
  double nu_as = 1.0;  ///< [ν]_{A_s}
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  bool as_bound_ok = true;
  std::vector<S2Violation> violations;
  int balls = 0;
  bool ok() const { return violations.empty() && as_bound_ok; }
};

/// For every ball: 1 ≤ λ1^p(B)^{1/p} λ2^{−q'}(B)^{1/q'} / ν(B)^{1+α/Q} ≤ [λ1][λ2],
/// and [ν]_{A_s}^{1/p+1/q'} ≤ [λ1][λ2].
inline S2Report verify_lemma_s2(const SpaceModel& s, const RealVector& l1, const RealVector& l2, double p, double q,
                                double upper_dim, const std::vector<Ball>& balls, double tol = 1e-9) {
  const auto t = bloom_tuple(l1, l2, p, q, upper_dim);
  S2Report rep;
  rep.char1 = app_characteristic(s, l1, p, balls).value;
  rep.char2 = app_characteristic(s, l2, q, balls).value;
  rep.nu_as = ap_characteristic(s, t.nu, t.s, balls).value;
  const double bound = rep.char1 * rep.char2;
  for (const auto& B : balls) {
    const double ratio = two_weight_scale(s, l1, l2, p, q, B.members) /
                         std::pow(weight_mass(s, t.nu, B.members), 1.0 + t.alpha_over_q);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio < 1.0 - tol || ratio > bound + tol) rep.violations.push_back({B, ratio});
  }
  rep.balls = static_cast<int>(balls.size());
  rep.as_bound_ok = std::pow(rep.nu_as, 1.0 / p + 1.0 / t.q_conj) <= bound + tol;
  return rep;
}

}  // namespace bloom
