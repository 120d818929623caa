#include <gtest/gtest.h>

#include <numeric>

#include "bloom/generators.hpp"
#include "bloom/kernel.hpp"
#include "bloom/lower_bound.hpp"

using namespace bloom;

namespace {

KernelSpec family(const std::string& name) {
  KernelSpec k;
  k.family = name;
  return k;
}

struct Setup {
  SpaceModel s;
  SpaceProfile prof;
  OperatorMatrix t;
  KernelCertificate cert, cert_adjoint;
};

Setup hilbert_grid(int n) {
  auto s = grid_1d(n);
  auto prof = doubling_profile(s);
  auto t = make_operator(family("hilbert-grid"), s);
  auto cert = certify(t.kernel, s, prof);
  auto cert_adjoint = certify(ComplexMatrix(t.kernel.transpose()), s, prof);
  return {std::move(s), prof, std::move(t), std::move(cert), std::move(cert_adjoint)};
}

// osc/2 = ∫ b f = ⟨g1,[b,T']h1⟩ + ⟨g2,[b,T']h2⟩ + ∫ b f̃̃ for the factorised operator T'.
double pairing_identity_gap(const SpaceModel& s, const ComplexVector& b, const OscillationReport& r) {
  const Complex rhs = r.pairing1 + r.pairing2 + pairing(b, r.awf.error, s.measure());
  return std::abs(0.5 * r.oscillation - rhs);
}

}  // namespace

TEST(MedianValue, Examples) {
  RealVector b(4);
  b << 0, 1, 2, 3;
  EXPECT_DOUBLE_EQ(median_value(grid_1d(4), b, {0, 1, 2, 3}), 1.0);
  RealVector c(3);
  c << 0, 0, 5;
  EXPECT_DOUBLE_EQ(median_value(grid_1d(3), c, {0, 1, 2}), 0.0);
  EXPECT_THROW(median_value(grid_1d(3), c, {}), DomainError);
  EXPECT_THROW(median_value(grid_1d(3), random_complex(3, 1), {0, 1}), DomainError);
}

TEST(MedianValue, HalfMeasureOnBothSides) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_cloud(15, seed);
    const RealVector b = random_real(15, seed + 3);
    PointSet all(15);
    std::iota(all.begin(), all.end(), 0);
    const double m = median_value(s, b, all);
    double above = 0.0, below = 0.0;
    for (int x : all) {
      if (b[x] > m) above += s.mass(x);
      if (b[x] < m) below += s.mass(x);
    }
    EXPECT_LE(above, 0.5 * s.measure_of(all) * (1 + 1e-12));
    EXPECT_LE(below, 0.5 * s.measure_of(all) * (1 + 1e-12));
  }
}

TEST(MedianDecomposition, Grid8SplitSymbol) {
  const auto s = grid_1d(8);
  RealVector b(8);
  b << 0, 0, 1, 1, 4, 4, 5, 5;
  const Ball base = ball(s, 0, 1.5), comp = ball(s, 6, 1.5);
  const auto d = median_decomposition(s, b, base, comp);
  EXPECT_DOUBLE_EQ(d.alpha, 5.0);
  EXPECT_EQ(d.e1, (PointSet{}));
  EXPECT_EQ(d.e2, (PointSet{0, 1}));
  EXPECT_EQ(d.f1, (PointSet{5, 6, 7}));
  EXPECT_EQ(d.f2, (PointSet{6, 7}));
}

TEST(MedianDecomposition, RandomSymbolsPassExhaustiveChecks) {
  const auto s = grid_1d(24);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RealVector b = random_real(24, seed);
    const Ball base = ball(s, 3, 2.5), comp = ball(s, 15, 2.5);
    EXPECT_NO_THROW(median_decomposition(s, b, base, comp)) << "seed " << seed;
  }
}

TEST(MedianCompanion, SignDefiniteAndFarAway) {
  const auto u = hilbert_grid(16);
  const Ball base = ball(u.s, 2, 1.5);
  const auto c = find_median_companion(u.s, u.t.kernel, base);
  EXPECT_GE(u.s.d(base.center, c.companion.center), 3.0 * base.radius);
  EXPECT_FALSE(intersects(base.members, c.companion.members));
  double kappa = std::numeric_limits<double>::infinity();
  bool pos = false, neg = false;
  for (int x : base.members)
    for (int y : c.companion.members) {
      kappa = std::min(kappa, std::abs(u.t.kernel(x, y)));
      pos |= u.t.kernel(x, y).real() > 0, neg |= u.t.kernel(x, y).real() < 0;
    }
  EXPECT_FALSE(pos && neg);
  EXPECT_DOUBLE_EQ(c.kappa, kappa);
  EXPECT_NEAR(c.constant, 8.0 * c.hull.measure / (base.measure * kappa * c.companion.measure), 1e-12 * c.constant);
  EXPECT_TRUE(is_subset(base.members, c.hull.members));
  EXPECT_TRUE(is_subset(c.companion.members, c.hull.members));
  EXPECT_THROW(find_median_companion(u.s, u.t.kernel, ball(u.s, 8, 6.5)), CapabilityError);
}

TEST(EnclosingBall, SmallestContainingBall) {
  const auto s = grid_1d(10);
  const Ball b = enclosing_ball(s, 2, {2, 5});
  EXPECT_EQ(b.members, (PointSet{0, 1, 2, 3, 4, 5}));
}

TEST(Admissibility, CompanionBallIsAdmissible) {
  const auto u = hilbert_grid(40);
  const double a = 2 * u.cert.a0 * u.cert.a0 + u.cert.a0;
  const auto comp = find_companion_ball(u.s, u.t.kernel, u.cert, ball(u.s, 5, 1.5), a);
  const auto rep = check_admissible(u.s, comp.sextuple);
  EXPECT_TRUE(rep.ok()) << rep.failing();
  EXPECT_EQ(comp.sextuple.kernel(comp.sextuple.tilde.center, comp.sextuple.base.center), u.t.kernel(comp.sextuple.tilde.center, 5));
  EXPECT_DOUBLE_EQ(comp.kernel_value, std::abs(u.t.kernel(comp.sextuple.tilde.center, 5)));
  EXPECT_THROW(find_companion_ball(u.s, u.t.kernel, u.cert, ball(u.s, 5, 1.5), 0.5 * a), DomainError);
}

TEST(Admissibility, HalvedEpsilonNamesIntegralCondition) {
  const auto u = hilbert_grid(40);
  const double a = 2 * u.cert.a0 * u.cert.a0 + u.cert.a0;
  auto t = find_companion_ball(u.s, u.t.kernel, u.cert, ball(u.s, 5, 1.5), a).sextuple;
  ASSERT_GT(t.eps, 0.0);
  t.eps *= 0.5;
  const auto rep = check_admissible(u.s, t);
  EXPECT_FALSE(rep.ok());
  EXPECT_EQ(rep.failing().rfind("integral-", 0), 0u);
  EXPECT_THROW(dualize_admissible(u.s, t, u.prof), DomainError);
}

TEST(Admissibility, DualSextupleSwapsBallsAndInflatesXi) {
  const auto u = hilbert_grid(40);
  const double a = 2 * u.cert.a0 * u.cert.a0 + u.cert.a0;
  const auto t = find_companion_ball(u.s, u.t.kernel, u.cert, ball(u.s, 5, 1.5), a).sextuple;
  const auto d = dualize_admissible(u.s, t, u.prof);
  EXPECT_EQ(d.base.members, t.tilde.members);
  EXPECT_EQ(d.tilde.members, t.base.members);
  EXPECT_TRUE(d.kernel.isApprox(t.kernel.transpose(), 0.0));
  EXPECT_DOUBLE_EQ(d.xi, t.xi * u.prof.c_mu * std::pow(u.prof.a0 * (1 + t.xi), u.prof.q));
  EXPECT_TRUE(check_admissible(u.s, d).ok());
}

TEST(Awf, PreconditionsAndZeroInput) {
  const auto u = hilbert_grid(40);
  RealVector b = RealVector::Zero(40);
  for (int x = 0; x < 40; ++x) b[x] = x % 3;
  const auto r = bound_oscillation(u.s, to_complex(b), u.t, ball(u.s, 5, 1.5), Orientation::Opp, u.cert, u.prof);
  const Sextuple& t = r.awf.primal;
  const ComplexVector g = indicator(t.tilde.members, 40);
  const auto z = awf_single(u.s, ComplexVector::Zero(40), g, t, 1.0);
  EXPECT_EQ(sup_norm(z.h), 0.0);
  EXPECT_EQ(sup_norm(z.f_tilde), 0.0);
  EXPECT_EQ(z.residual, 0.0);
  EXPECT_THROW(awf_single(u.s, indicator({30}, 40), g, t, 1.0), PreconditionError);
  EXPECT_THROW(awf_single(u.s, indicator({t.base.members.front()}, 40), g, t, 1.0), PreconditionError);
  EXPECT_THROW(awf_single(u.s, ComplexVector::Zero(40), ComplexVector(-g), t, 1.0), PreconditionError);
}

TEST(Awf, DoubleStepReconstructsInput) {
  const auto u = hilbert_grid(48);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ComplexVector b = random_complex(48, seed);
    const auto r = bound_oscillation(u.s, b, u.t, ball(u.s, 4 + static_cast<int>(seed), 1.5), Orientation::Opp, u.cert, u.prof);
    const auto& d = r.awf;
    EXPECT_LE(d.residual, 1e-12) << "seed " << seed;
    EXPECT_LE(d.mean, 1e-12) << "seed " << seed;
    EXPECT_TRUE(d.error_in_e);
    EXPECT_LE(d.error_ratio, 0.25);
    EXPECT_TRUE(std::isfinite(d.gh_constant));
    EXPECT_LE(d.first.residual, 1e-12);
    EXPECT_LE(d.second.residual, 1e-12);
  }
}

TEST(Oscillation, ConstantSymbolHasNothingToBound) {
  const auto u = hilbert_grid(24);
  const auto r = bound_oscillation(u.s, ComplexVector::Constant(24, 2.0), u.t, ball(u.s, 3, 1.5), Orientation::Opp, u.cert, u.prof);
  EXPECT_EQ(r.oscillation, 0.0);
  EXPECT_EQ(r.constant, 0.0);
}

TEST(Oscillation, PairingIdentityInBothOrientations) {
  const auto u = hilbert_grid(48);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ComplexVector b = random_complex(48, seed + 11);
    const Ball base = ball(u.s, 6, 2.5);
    const auto opp = bound_oscillation(u.s, b, u.t, base, Orientation::Opp, u.cert, u.prof);
    EXPECT_LE(pairing_identity_gap(u.s, b, opp), 1e-10 * opp.oscillation);
    const auto std_ = bound_oscillation(u.s, b, u.t, base, Orientation::Std, u.cert_adjoint, u.prof);
    EXPECT_LE(pairing_identity_gap(u.s, b, std_), 1e-10 * std_.oscillation);
    EXPECT_LE(std::abs(std_.converted1 - std_.pairing1), 1e-12 * (1 + std::abs(std_.pairing1)));
    EXPECT_LE(std::abs(std_.converted2 - std_.pairing2), 1e-12 * (1 + std::abs(std_.pairing2)));
    EXPECT_GT(opp.constant, 0.0);
    EXPECT_TRUE(std::isfinite(opp.constant));
  }
}

TEST(Oscillation, ConstantIsScaleInvariant) {
  const auto u = hilbert_grid(40);
  const ComplexVector b = random_complex(40, 5);
  const Ball base = ball(u.s, 4, 1.5);
  const auto r1 = bound_oscillation(u.s, b, u.t, base, Orientation::Opp, u.cert, u.prof);
  const Complex c(-1.5, 2.0);
  const auto r2 = bound_oscillation(u.s, ComplexVector(c * b), u.t, base, Orientation::Opp, u.cert, u.prof);
  EXPECT_NEAR(r2.oscillation, std::abs(c) * r1.oscillation, 1e-12 * r2.oscillation);
  EXPECT_NEAR(r2.constant, r1.constant, 1e-10 * r1.constant);
  EXPECT_EQ(r2.a, r1.a);
}

TEST(LowerBound, ConstantSymbolGivesZero) {
  const auto u = hilbert_grid(12);
  const RealVector one = RealVector::Ones(12);
  const auto r = lower_bound_bmo(u.s, ComplexVector::Constant(12, 4.0), u.t, 2.0, 2.0, one, one, 1.0, LowerMethod::Median, u.prof);
  EXPECT_EQ(r.bmo, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_EQ(r.skipped, 0);
  EXPECT_TRUE(r.chains_ok());
}

TEST(LowerBound, MethodPreconditions) {
  const auto u = hilbert_grid(8);
  const RealVector one = RealVector::Ones(8);
  EXPECT_THROW(lower_bound_bmo(u.s, random_complex(8, 1), u.t, 2, 2, one, one, 1.0, LowerMethod::Median, u.prof), DomainError);
  EXPECT_THROW(lower_bound_bmo(u.s, to_complex(random_real(8, 1)), u.t, 2, 2, one, one, 1.0, LowerMethod::Awf, u.prof), DomainError);
}

TEST(LowerBound, ChainsAreMonotoneOnEvaluatedBalls) {
  const auto u = hilbert_grid(24);
  const RealVector one = RealVector::Ones(24);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ComplexVector b = to_complex(random_real(24, seed));
    const double theta =
        operator_norm(commutator_matrix(b, u.t), u.s.measure(), 2.0, one, 2.0, one, NormMethod::SvdExact).lower;
    for (auto m : {LowerMethod::Median, LowerMethod::Awf}) {
      const auto r = lower_bound_bmo(u.s, b, u.t, 2, 2, one, one, theta, m, u.prof, &u.cert_adjoint);
      EXPECT_TRUE(r.chains_ok()) << "seed " << seed;
      EXPECT_LT(r.skipped, r.balls);
      EXPECT_GT(r.max_constant, 0.0);
      for (const auto& row : r.rows)
        if (row.skip.empty() && !row.chain.empty()) {
          EXPECT_DOUBLE_EQ(row.chain.front(), oscillation_mass(u.s, b, row.base.members));
          EXPECT_EQ(row.chain.size(), m == LowerMethod::Median ? 7u : 6u);
        }
    }
  }
}
