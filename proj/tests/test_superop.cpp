#include <gtest/gtest.h>

#include <random>

#include "qgst/errors.hpp"
#include "qgst/gateset.hpp"
#include "qgst/superop.hpp"
#include "test_support.hpp"

using namespace qgst;

namespace {

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

}  // namespace

TEST(Basis, OrthonormalUnderHilbertSchmidt) {
  const auto& b = gellmann_basis();
  for (int i = 0; i < kSuperDim; ++i) {
    for (int j = 0; j < kSuperDim; ++j) {
      const Complex ip = (b.elements[i].adjoint() * b.elements[j]).trace();
      EXPECT_NEAR(ip.real(), i == j ? 1.0 : 0.0, 1e-12);
      EXPECT_NEAR(ip.imag(), 0.0, 1e-12);
    }
  }
}

TEST(Basis, ElementsAreHermitianAndOnlyFirstHasTrace) {
  const auto& b = gellmann_basis();
  for (int i = 0; i < kSuperDim; ++i) {
    EXPECT_TRUE(is_hermitian(b.elements[i]));
    EXPECT_NEAR(std::abs(b.elements[i].trace()), i == 0 ? std::sqrt(3.0) : 0.0, 1e-12);
  }
  EXPECT_EQ(b.labels[0], "I");
  EXPECT_EQ(b.index_of("Z2"), 8);
  EXPECT_EQ(b.index_of("nope"), -1);
}

TEST(Basis, CompletenessReconstructsArbitraryOperators) {
  auto rng = rng_for(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Operator3 a;
    for (int i = 0; i < kDim; ++i) {
      for (int j = 0; j < kDim; ++j) a(i, j) = Complex(n(rng), n(rng));
    }
    EXPECT_LT((devectorize_complex(vectorize_complex(a)) - a).norm(), 1e-12);
  }
  // sum_i B_i (x) conj(B_i) is the swap: its (ab, cd) entry is delta_ad delta_bc.
  Eigen::Matrix<Complex, 9, 9> swap = Eigen::Matrix<Complex, 9, 9>::Zero();
  for (const auto& e : gellmann_basis().elements) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) swap(3 * a + b, 3 * c + d) += e(a, c) * std::conj(e(d, b));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          EXPECT_NEAR(std::abs(swap(3 * a + b, 3 * c + d) - Complex((a == d && b == c) ? 1.0 : 0.0)), 0.0,
                      1e-12);
}

TEST(Basis, GellMannCommutatorStructure) {
  // [X01, Y01] = 2i Z-type diag(1,-1,0): checks the raw matrices against the
  // su(3) structure constant f_123 = 1.
  const auto& gm = gellmann_matrices();
  const Operator3 comm = gm[0] * gm[3] - gm[3] * gm[0];
  Operator3 expect = Operator3::Zero();
  expect(0, 0) = Complex(0, 2);
  expect(1, 1) = Complex(0, -2);
  EXPECT_LT((comm - expect).norm(), 1e-12);
}

TEST(Vectorize, RealCoordinatesForHermitianAndErrorOtherwise) {
  const Superket v = vectorize(projector(0));
  EXPECT_NEAR(v(0), 1.0 / std::sqrt(3.0), 1e-12);
  EXPECT_LT((devectorize(v) - projector(0)).norm(), 1e-12);
  Operator3 nh = Operator3::Zero();
  nh(0, 1) = 1.0;
  EXPECT_THROW(vectorize(nh), NonHermitianError);
  EXPECT_NEAR(identity_superket()(0), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(identity_superket().tail(8).norm(), 0.0, 1e-12);
}

TEST(Ptm, IdentityChannelIsIdentityMatrix) {
  EXPECT_LT((ptm_from_unitary(Operator3::Identity()) - Ptm::Identity()).norm(), 1e-12);
  KrausChannel id{{Operator3::Identity()}};
  EXPECT_LT((ptm_from_kraus(id) - Ptm::Identity()).norm(), 1e-12);
}

TEST(Ptm, ElementFormulaMatchesDirectTrace) {
  auto rng = rng_for(2);
  const Operator3 u = testutil::haar_unitary(rng);
  const Ptm r = ptm_from_unitary(u);
  const auto& b = gellmann_basis();
  for (int i = 0; i < kSuperDim; ++i) {
    for (int j = 0; j < kSuperDim; ++j) {
      const Complex direct = (b.elements[i].adjoint() * u * b.elements[j] * u.adjoint()).trace();
      EXPECT_NEAR(r(i, j), direct.real(), 1e-12);
    }
  }
  // unitary channel: orthogonal PTM, TP first row
  EXPECT_LT((r.transpose() * r - Ptm::Identity()).norm(), 1e-11);
  EXPECT_NEAR(r(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(r.row(0).tail(8).norm(), 0.0, 1e-12);
}

TEST(Ptm, HomomorphismAndComposition) {
  auto rng = rng_for(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Operator3 u = testutil::haar_unitary(rng);
    const Operator3 v = testutil::haar_unitary(rng);
    // apply u first, then v
    const Ptm lhs = ptm_from_unitary(v * u);
    EXPECT_LT((lhs - compose(ptm_from_unitary(u), ptm_from_unitary(v))).norm(), 1e-11);
    EXPECT_LT((lhs - compose_sequence({ptm_from_unitary(u), ptm_from_unitary(v)})).norm(), 1e-11);
  }
  EXPECT_LT((compose_sequence({}) - Ptm::Identity()).norm(), 1e-15);
}

TEST(Ptm, ActionOnStatesMatchesConjugation) {
  auto rng = rng_for(4);
  const Operator3 u = testutil::haar_unitary(rng);
  const Operator3 rho = testutil::haar_state(rng);
  const Superket out = ptm_from_unitary(u) * vectorize(rho);
  EXPECT_LT((devectorize(out) - u * rho * u.adjoint()).norm(), 1e-12);
}

TEST(Ptm, QutritHadamardHasOrderFour) {
  const Operator3 h = qutrit_dft();
  EXPECT_TRUE(is_unitary(h));
  const Operator3 h4 = h * h * h * h;
  EXPECT_LT((h4 - Operator3::Identity()).norm(), 1e-12);
  const Ptm r = ptm_from_unitary(h);
  EXPECT_LT((r * r * r * r - Ptm::Identity()).norm(), 1e-12);
  EXPECT_GT((r * r - Ptm::Identity()).norm(), 0.1);
}

TEST(Ptm, Errors) {
  Operator3 m = Operator3::Identity() * 2.0;
  EXPECT_THROW(ptm_from_unitary(m), NonUnitaryError);
  EXPECT_THROW(ptm_from_kraus(KrausChannel{}), EmptyChannelError);
}

TEST(Kraus, AmplitudeDampingPtmMatchesStateEvolution) {
  const double g = 0.3;
  KrausChannel ch;
  Operator3 k0 = Operator3::Identity();
  k0(1, 1) = std::sqrt(1 - g);
  Operator3 k1 = Operator3::Zero();
  k1(0, 1) = std::sqrt(g);
  ch.operators = {k0, k1};
  EXPECT_TRUE(ch.is_trace_preserving());
  const Superket out = ptm_from_kraus(ch) * vectorize(projector(1));
  const Operator3 rho = devectorize(out);
  EXPECT_NEAR(rho(0, 0).real(), g, 1e-12);
  EXPECT_NEAR(rho(1, 1).real(), 1 - g, 1e-12);
}

TEST(Cptp, UnitaryAndKrausChannelsAreCptp) {
  auto rng = rng_for(5);
  const CptpReport rep = check_cptp(ptm_from_unitary(testutil::haar_unitary(rng)));
  EXPECT_TRUE(rep.is_tp);
  EXPECT_TRUE(rep.is_cp);
  EXPECT_GT(rep.min_choi_eig, -1e-10);
  // unit trace Choi
  EXPECT_NEAR(choi_matrix(Ptm::Identity()).trace().real(), 1.0, 1e-12);
}

TEST(Cptp, TransposeIsPositiveButNotCompletelyPositive) {
  // rho -> rho^T in the Gell-Mann basis flips the sign of the Y coordinates.
  Ptm t = Ptm::Identity();
  for (int i = 4; i <= 6; ++i) t(i, i) = -1.0;
  const CptpReport rep = check_cptp(t);
  EXPECT_TRUE(rep.is_tp);
  EXPECT_FALSE(rep.is_cp);
  EXPECT_NEAR(rep.min_choi_eig, -1.0 / 3.0, 1e-10);
  const Ptm clipped = clip_to_cp(t);
  EXPECT_GT(check_cptp(clipped).min_choi_eig, -1e-12);
}

TEST(Cptp, NonTpDetected) {
  Ptm r = Ptm::Identity() * 0.5;
  EXPECT_FALSE(check_cptp(r).is_tp);
}

TEST(Choi, RoundTrip) {
  auto rng = rng_for(6);
  const Ptm r = ptm_from_unitary(testutil::haar_unitary(rng)) * 0.9 + Ptm::Identity() * 0.1;
  EXPECT_LT((ptm_from_choi(choi_matrix(r)) - r).norm(), 1e-12);
  EXPECT_NEAR(frobenius_distance(r, r), 0.0, 0.0);
}
