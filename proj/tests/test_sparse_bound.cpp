#include <gtest/gtest.h>

#include "bloom/generators.hpp"
#include "bloom/sparse_bound.hpp"

using namespace bloom;

namespace {

KernelSpec family(const std::string& name) {
  KernelSpec k;
  k.family = name;
  return k;
}

std::shared_ptr<const DyadicSystem> grid4_system() {
  return std::make_shared<const DyadicSystem>(build_dyadic_system(grid_1d(4), 0.5, 0));
}

}  // namespace

TEST(SparseApply, SingleCubeAndCounting) {
  const auto s = grid_1d(4);
  const auto sys = grid4_system();
  const auto root = full_generations(sys, {0});
  const RealVector chi = RealVector::Ones(4);
  EXPECT_TRUE(sparse_apply(s, root, chi).isApprox(chi, 0.0));
  const int last = static_cast<int>(sys->depth()) - 1;
  const auto both = full_generations(sys, {0, last});
  EXPECT_TRUE(sparse_apply(s, both, chi).isApprox(RealVector::Constant(4, 2.0), 0.0));
}

TEST(SparseApply, TwoNestedCubes) {
  const auto s = grid_1d(4);
  const auto sys = grid4_system();
  ASSERT_GE(sys->depth(), 2u);
  SparseFamily fam{sys, 1.0, {{0, 0}, {1, 0}}, {}};
  fam.witness = {fam.cube(0).members, fam.cube(1).members};
  RealVector f(4);
  f << 1, 2, 3, 4;
  const auto& inner = fam.cube(1).members;
  double inner_avg = 0.0;
  for (int x : inner) inner_avg += f[x];
  inner_avg /= static_cast<double>(inner.size());
  RealVector expect = RealVector::Constant(4, 2.5);
  for (int x : inner) expect[x] += inner_avg;
  EXPECT_TRUE(sparse_apply(s, fam, f).isApprox(expect, 1e-15));
}

TEST(SparseCommutatorPair, Examples) {
  const auto s = grid_1d(4);
  const auto root = full_generations(grid4_system(), {0});
  RealVector b(4);
  b << 0, 0, 1, 1;
  const auto pair = sparse_commutator_pair(s, b, root, RealVector::Ones(4));
  EXPECT_TRUE(pair.primary.isApprox(RealVector::Constant(4, 0.5), 1e-15));
  EXPECT_TRUE(pair.dual.isApprox(RealVector::Constant(4, 0.5), 1e-15));
  const auto flat = sparse_commutator_pair(s, RealVector::Constant(4, 3.0), root, RealVector::Ones(4));
  EXPECT_EQ(flat.primary.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(flat.dual.cwiseAbs().maxCoeff(), 0.0);
  const auto zero = sparse_commutator_pair(s, b, root, RealVector::Zero(4));
  EXPECT_EQ(zero.primary.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FractionalSparse, UnweightedDiagonalReducesToSparse) {
  const auto s = random_cloud(16, 2);
  auto sys = std::make_shared<const DyadicSystem>(build_dyadic_system(s, 0.25, 1));
  const auto fam = stopping_family(sys, s, random_weight(16, 3, 1.0));
  const RealVector f = random_weight(16, 4, 1.0), one = RealVector::Ones(16);
  EXPECT_TRUE(fractional_sparse_apply(s, one, one, 3.0, 3.0, fam, f).isApprox(sparse_apply(s, fam, f), 1e-13));
  EXPECT_EQ(fractional_sparse_apply(s, one, one, 2.0, 2.0, fam, RealVector(RealVector::Zero(16))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FractionalSparse, SingleCubeClosedForm) {
  const auto s = grid_1d(4);
  const auto root = full_generations(grid4_system(), {0});
  const RealVector l1 = random_weight(4, 1), l2 = random_weight(4, 2), f = random_weight(4, 3);
  double a = 0, b = 0, m = 0;
  for (int x = 0; x < 4; ++x) a += std::pow(l1[x], 2.0), b += std::pow(l2[x], -4.0 / 3.0), m += f[x];
  const double term = std::pow(a, 0.5) * std::pow(b, 0.75) / 4.0 * (m / 4.0);
  EXPECT_TRUE(fractional_sparse_apply(s, l1, l2, 2.0, 4.0, root, f).isApprox(RealVector::Constant(4, term), 1e-14));
}

TEST(FractionalSparse, OverlapFactorIsNeeded) {
  // Root plus all leaves with f ≡ 1 doubles the operator, so the bound
  // without the overlap factor fails by exactly 2 while the tracked one holds.
  const auto s = grid_1d(4);
  const auto sys = grid4_system();
  const auto fam = full_generations(sys, {0, static_cast<int>(sys->depth()) - 1});
  const RealVector one = RealVector::Ones(4);
  const auto c = check_fractional_sparse(s, one, one, 2.0, 2.0, fam, ComplexVector::Ones(4), 1.0, 1.0);
  EXPECT_EQ(c.depth, 2);
  EXPECT_NEAR(c.sharpness(), 2.0, 1e-14);
  EXPECT_TRUE(c.holds());
  EXPECT_NEAR(c.lhs, c.tracked_bound, 1e-14);
}

TEST(FractionalSparse, TrackedBoundHoldsOnRandomFamilies) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto s = random_cloud(20, seed);
    auto sys = std::make_shared<const DyadicSystem>(build_dyadic_system(s, 0.25, seed));
    const RealVector l1 = random_weight(20, seed + 1, 0.8), l2 = random_weight(20, seed + 2, 0.8);
    const ComplexVector f = random_complex(20, seed + 3);
    const auto fam = augment_sparse_family(random_real(20, seed + 4), stopping_family(sys, s, f.cwiseAbs()), s).family;
    for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{2.0, 4.0}, std::pair{1.5, 3.0}}) {
      const auto c = check_fractional_sparse(s, l1, l2, p, q, fam, f, 1.0, 1.0);
      EXPECT_TRUE(c.holds()) << "seed " << seed << " p " << p << " q " << q;
    }
  }
}

TEST(Domination, TrivialInputs) {
  const auto s = grid_1d(8);
  const auto t = make_operator(family("hilbert-grid"), s);
  const auto flat = dominate_commutator(s, ComplexVector::Constant(8, 2.0), t, random_complex(8, 1), 3, {1, 2, 3}, 0.25);
  EXPECT_EQ(flat.c_dom, 0.0);
  EXPECT_TRUE(flat.ok);
  const auto zero = dominate_commutator(s, random_complex(8, 2), t, ComplexVector::Zero(8), 3, {1, 2, 3}, 0.25);
  EXPECT_EQ(zero.c_dom, 0.0);
}

TEST(Domination, Grid4HilbertMatchesPointwiseRatio) {
  const auto s = grid_1d(4);
  const auto t = make_operator(family("hilbert-grid"), s);
  ComplexVector b(4);
  b << 0, 1, 2, 3;
  const ComplexVector f = indicator({0}, 4);
  const auto w = dominate_commutator(s, b, t, f, 3, {1, 2, 3}, 0.5);
  ASSERT_TRUE(w.ok);
  EXPECT_TRUE(std::isfinite(w.c_dom));
  EXPECT_GT(w.c_dom, 0.0);
  // Left side: b(x) K(x,0) − 0 since b(0) = 0.
  double expect = 0.0;
  for (int x = 1; x < 4; ++x) {
    const double lhs = std::abs(b[x] * t.kernel(x, 0));
    double rhs = 0.0;
    for (const auto& fam : w.families)
      for (std::size_t i = 0; i < fam.size(); ++i) {
        const auto& q = fam.cube(i).members;
        if (!contains(q, x)) continue;
        Complex bq = 0.0;
        for (int y : q) bq += b[y];
        bq /= static_cast<double>(q.size());
        double fq = 0.0, bf = 0.0;
        for (int y : q) fq += std::abs(f[y]), bf += std::abs(b[y] - bq) * std::abs(f[y]);
        rhs += std::abs(b[x] - bq) * fq / static_cast<double>(q.size()) + bf / static_cast<double>(q.size());
      }
    expect = std::max(expect, lhs / rhs);
  }
  EXPECT_NEAR(w.c_dom, expect, 1e-13 * expect);
}

TEST(UpperBound, ConstantSymbolIsSkipped) {
  const auto s = grid_1d(8);
  const auto t = make_operator(family("power-sign"), s);
  const RealVector one = RealVector::Ones(8);
  const ComplexVector b = ComplexVector::Constant(8, 1.5);
  const auto sys = build_dyadic_system(s, 0.25, 1);
  const auto tests = upper_test_corpus(s, b, t, one, 2.0, one, 2.0, sys, 0);
  const auto r = verify_upper_bound(s, b, t, 2.0, 2.0, one, one, 1.0, tests, 3, {1, 2, 3}, 0.25);
  EXPECT_TRUE(r.skipped);
  EXPECT_TRUE(r.rows.empty());
}

TEST(UpperBound, UnweightedAndFractionalChainsHold) {
  const auto s = grid_1d(4);
  const auto prof = doubling_profile(s);
  const auto t = make_operator(family("hilbert-grid"), s);
  const auto sys = build_dyadic_system(s, 0.25, 1);
  for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{2.0, 4.0}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RealVector l1 = p == q ? RealVector::Ones(4) : random_weight(4, seed, 0.5);
      const RealVector l2 = p == q ? RealVector::Ones(4) : random_weight(4, seed + 9, 0.5);
      const ComplexVector b = to_complex(random_real(4, seed + 20));
      const auto tests = upper_test_corpus(s, b, t, l1, p, l2, q, sys, seed);
      const auto r = verify_upper_bound(s, b, t, p, q, l1, l2, prof.q, tests, 3, {1, 2, 3}, 0.25);
      EXPECT_TRUE(r.dominated());
      EXPECT_TRUE(r.sparse_chain_ok());
      EXPECT_TRUE(std::isfinite(r.max_ratio));
      EXPECT_GT(r.max_ratio, 0.0);
    }
  }
}
