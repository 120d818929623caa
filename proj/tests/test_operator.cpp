#include <gtest/gtest.h>

#include "bloom/generators.hpp"
#include "bloom/operator.hpp"
#include "bloom/weights.hpp"

using namespace bloom;

namespace {

KernelSpec family(const std::string& name) {
  KernelSpec k;
  k.family = name;
  return k;
}

}  // namespace

TEST(Operator, HilbertColumn) {
  const auto s = grid_1d(4);
  const auto t = make_operator(family("hilbert-grid"), s);
  const ComplexVector tf = apply_operator(t, indicator({3}, 4));
  for (int x = 0; x < 3; ++x) EXPECT_DOUBLE_EQ(tf[x].real(), 1.0 / (x - 3));
  EXPECT_EQ(tf[3], Complex(0.0));
  EXPECT_EQ(sup_norm(apply_operator(t, ComplexVector::Zero(4))), 0.0);
}

TEST(Operator, LinearAndAdjoint) {
  const auto s = random_cloud(15, 3);
  for (const auto& name : {"power-sign", "riesz-like", "hilbert-grid"}) {
    const auto t = make_operator(family(name), s);
    const ComplexVector f = random_complex(15, 1), g = random_complex(15, 2);
    const Complex a(0.3, -1.2), b(2.0, 0.5);
    const ComplexVector lhs = apply_operator(t, a * f + b * g);
    const ComplexVector rhs = a * apply_operator(t, f) + b * apply_operator(t, g);
    EXPECT_LE(sup_norm(lhs - rhs), 1e-12 * (1 + sup_norm(rhs)));
    const Complex tfg = pairing(apply_operator(t, f), g, s.measure());
    const Complex ftg = pairing(f, apply_adjoint(t, g), s.measure());
    EXPECT_LE(std::abs(tfg - ftg), 1e-12 * (1 + std::abs(tfg)));
    EXPECT_TRUE(adjoint(t).entries.isApprox(make_operator(adjoint(family(name)), s).entries, 1e-15));
  }
}

TEST(Operator, ExchangedOrderOnSeparatedSupports) {
  const auto s = grid_1d(10);
  const auto t = make_operator(family("power-sign"), s);
  const PointSet o{0, 1, 2}, p{6, 7, 8, 9};
  const ComplexVector f = random_complex(10, 4).cwiseProduct(indicator(o, 10));
  const ComplexVector g = random_complex(10, 5).cwiseProduct(indicator(p, 10));
  Complex xy = 0.0, yx = 0.0;
  for (int x : p)
    for (int y : o) xy += g[x] * t.kernel(x, y) * f[y] * s.mass(x) * s.mass(y);
  for (int y : o)
    for (int x : p) yx += f[y] * t.kernel(x, y) * g[x] * s.mass(y) * s.mass(x);
  EXPECT_NEAR(std::abs(xy - yx), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(xy - pairing(apply_operator(t, f), g, s.measure())), 0.0, 1e-14);
}

TEST(Commutator, KillsConstantsAndIgnoresShifts) {
  const auto s = random_cloud(12, 8);
  const auto t = make_operator(family("riesz-like"), s);
  const ComplexVector f = random_complex(12, 9), b = random_complex(12, 10);
  const ComplexVector c = ComplexVector::Constant(12, Complex(3.0, -1.0));
  EXPECT_LE(sup_norm(commutator_apply(c, t, f)), 1e-12 * std::abs(c[0]) * sup_norm(apply_operator(t, f)));
  EXPECT_LE(sup_norm(commutator_apply(ComplexVector(b + c), t, f) - commutator_apply(b, t, f)), 1e-12);
  EXPECT_LE(sup_norm(commutator_matrix(b, t) * f - commutator_apply(b, t, f)), 1e-12);
}

TEST(Commutator, HilbertExplicitVector) {
  const auto s = grid_1d(4);
  const auto t = make_operator(family("hilbert-grid"), s);
  ComplexVector b(4);
  b << 0, 1, 0, 0;
  const ComplexVector out = commutator_apply(b, t, indicator({0}, 4));
  ComplexVector expect(4);
  expect << 0, 1, 0, 0;
  EXPECT_LE(sup_norm(out - expect), 1e-15);
}

TEST(OperatorNorm, ZeroMatrixByAllMethods) {
  const auto s = grid_1d(4);
  const RealVector one = RealVector::Ones(4);
  for (auto m : {NormMethod::SvdExact, NormMethod::BruteOracle, NormMethod::MultistartAscent}) {
    const auto e = operator_norm(ComplexMatrix::Zero(4, 4), s.measure(), 2.0, one, 2.0, one, m);
    EXPECT_EQ(e.lower, 0.0);
    EXPECT_EQ(e.upper, 0.0);
  }
}

TEST(OperatorNorm, SvdAgreesWithBruteOracleOnFourPoints) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_cloud(4, seed);
    const auto t = make_operator(family("riesz-like"), s);
    const RealVector l1 = random_weight(4, seed + 1, 0.5), l2 = random_weight(4, seed + 2, 0.5);
    const auto svd = operator_norm(t, l1, 2.0, l2, 2.0, NormMethod::SvdExact);
    const auto brute = operator_norm(t, l1, 2.0, l2, 2.0, NormMethod::BruteOracle);
    EXPECT_NEAR(brute.lower, svd.lower, 1e-6 * svd.lower);
    EXPECT_LE(brute.lower, svd.lower * (1 + 1e-12));
    EXPECT_GE(brute.upper, svd.lower * (1 - 1e-12));
  }
}

TEST(OperatorNorm, WitnessAttainsLowerBound) {
  const auto s = random_cloud(6, 3);
  const auto t = make_operator(family("power-sign"), s);
  const RealVector l1 = random_weight(6, 4), l2 = random_weight(6, 5);
  for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{1.5, 3.0}}) {
    for (auto m : {NormMethod::BruteOracle, NormMethod::MultistartAscent}) {
      const auto e = operator_norm(t, l1, p, l2, q, m);
      const double r = weighted_lp_norm(s, apply_operator(t, e.witness), l2, q) / weighted_lp_norm(s, e.witness, l1, p);
      EXPECT_NEAR(r, e.lower, 1e-10 * e.lower);
    }
    const auto brute = operator_norm(t, l1, p, l2, q, NormMethod::BruteOracle);
    const auto ascent = operator_norm(t, l1, p, l2, q, NormMethod::MultistartAscent);
    EXPECT_LE(ascent.lower, brute.upper * (1 + 1e-12));
  }
}

TEST(OperatorNorm, HomogeneousAndBelowSvd) {
  const auto s = grid_1d(20);
  const auto t = make_operator(family("power-sign"), s);
  const RealVector one = RealVector::Ones(20);
  const double base = operator_norm(t.entries, s.measure(), 2.0, one, 2.0, one, NormMethod::SvdExact).lower;
  const double scaled = operator_norm(ComplexMatrix(Complex(0, -3) * t.entries), s.measure(), 2.0, one, 2.0, one, NormMethod::SvdExact).lower;
  EXPECT_NEAR(scaled, 3.0 * base, 1e-12 * base);
  AscentOptions opt;
  opt.seed = 7;
  const double ascent = operator_norm(t.entries, s.measure(), 2.0, one, 2.0, one, NormMethod::MultistartAscent, opt).lower;
  EXPECT_LE(ascent, base * (1 + 1e-12));
  EXPECT_GE(ascent, 0.98 * base);
}

TEST(OperatorNorm, CapabilityLimits) {
  const auto s = grid_1d(8);
  const auto t = make_operator(family("power-sign"), s);
  const RealVector one = RealVector::Ones(8);
  EXPECT_THROW(operator_norm(t, one, 2.0, one, 3.0, NormMethod::SvdExact), CapabilityError);
  EXPECT_THROW(operator_norm(t, one, 2.0, one, 2.0, NormMethod::BruteOracle), CapabilityError);
  const auto s4 = grid_1d(4);
  const ComplexMatrix c = Complex(0, 1) * make_operator(family("power-sign"), s4).entries;
  EXPECT_THROW(operator_norm(c, s4.measure(), 2.0, RealVector::Ones(4), 2.0, RealVector::Ones(4), NormMethod::BruteOracle),
               CapabilityError);
  EXPECT_THROW(parse_norm_method("magic"), DomainError);
}
