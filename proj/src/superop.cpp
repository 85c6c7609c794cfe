#include "qgst/superop.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qgst/errors.hpp"

namespace qgst {

namespace {

const Complex kI{0.0, 1.0};

Operator3 unit(int r, int c, Complex v = 1.0) {
  Operator3 m = Operator3::Zero();
  m(r, c) = v;
  return m;
}

Operator3 symmetric(int a, int b) { return unit(a, b) + unit(b, a); }

Operator3 antisymmetric(int a, int b) { return unit(a, b, -kI) + unit(b, a, kI); }

}  // namespace

int OperatorBasis::index_of(std::string_view label) const {
  for (int i = 0; i < kSuperDim; ++i) {
    if (labels[i] == label) return i;
  }
  return -1;
}

const std::array<Operator3, kSuperDim - 1>& gellmann_matrices() {
  static const std::array<Operator3, kSuperDim - 1> mats = [] {
    std::array<Operator3, kSuperDim - 1> m;
    m[0] = symmetric(0, 1);
    m[1] = symmetric(0, 2);
    m[2] = symmetric(1, 2);
    m[3] = antisymmetric(0, 1);
    m[4] = antisymmetric(0, 2);
    m[5] = antisymmetric(1, 2);
    m[6] = Operator3::Zero();
    m[6].diagonal() << 1.0, -1.0, 0.0;
    m[7] = Operator3::Zero();
    m[7].diagonal() << 1.0, 1.0, -2.0;
    m[7] /= std::sqrt(3.0);
    return m;
  }();
  return mats;
}

OperatorBasis build_basis() {
  OperatorBasis basis;
  basis.labels = {"I", "X01", "X02", "X12", "Y01", "Y02", "Y12", "Z1", "Z2"};
  basis.elements[0] = Operator3::Identity() / std::sqrt(static_cast<double>(kDim));
  const auto& gm = gellmann_matrices();
  for (int i = 0; i < kSuperDim - 1; ++i) basis.elements[i + 1] = gm[i] / std::sqrt(2.0);
  return basis;
}

const OperatorBasis& gellmann_basis() {
  static const OperatorBasis basis = build_basis();
  return basis;
}

bool is_hermitian(const Operator3& op, double tol) {
  return (op - op.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Operator3& op, double tol) {
  return (op.adjoint() * op - Operator3::Identity()).cwiseAbs().maxCoeff() <= tol;
}

Eigen::Matrix<Complex, kSuperDim, 1> vectorize_complex(const Operator3& op,
                                                       const OperatorBasis& basis) {
  Eigen::Matrix<Complex, kSuperDim, 1> c;
  for (int m = 0; m < kSuperDim; ++m) c(m) = (basis.elements[m].adjoint() * op).trace();
  return c;
}

Superket vectorize(const Operator3& op, const OperatorBasis& basis, double tol) {
  if (!is_hermitian(op, tol)) {
    throw NonHermitianError("vectorize: operator is not hermitian");
  }
  return vectorize_complex(op, basis).real();
}

Operator3 devectorize(const Superket& coords, const OperatorBasis& basis) {
  Operator3 op = Operator3::Zero();
  for (int m = 0; m < kSuperDim; ++m) op += coords(m) * basis.elements[m];
  return op;
}

Operator3 devectorize_complex(const Eigen::Matrix<Complex, kSuperDim, 1>& coords,
                              const OperatorBasis& basis) {
  Operator3 op = Operator3::Zero();
  for (int m = 0; m < kSuperDim; ++m) op += coords(m) * basis.elements[m];
  return op;
}

Operator3 projector(int k) { return unit(k, k); }

Superket identity_superket(const OperatorBasis& basis) {
  return vectorize(Operator3::Identity(), basis);
}

Ptm ptm_from_unitary(const Operator3& u, const OperatorBasis& basis) {
  if (!is_unitary(u)) throw NonUnitaryError("ptm_from_unitary: operator is not unitary");
  Ptm r;
  for (int j = 0; j < kSuperDim; ++j) {
    const Operator3 image = u * basis.elements[j] * u.adjoint();
    for (int i = 0; i < kSuperDim; ++i) {
      r(i, j) = (basis.elements[i].adjoint() * image).trace().real();
    }
  }
  return r;
}

bool KrausChannel::is_trace_preserving(double tol) const {
  Operator3 sum = Operator3::Zero();
  for (const auto& k : operators) sum += k.adjoint() * k;
  return (sum - Operator3::Identity()).cwiseAbs().maxCoeff() <= tol;
}

Ptm ptm_from_kraus(const KrausChannel& channel, const OperatorBasis& basis) {
  if (channel.operators.empty()) throw EmptyChannelError("ptm_from_kraus: no Kraus operators");
  Ptm r = Ptm::Zero();
  for (int j = 0; j < kSuperDim; ++j) {
    Operator3 image = Operator3::Zero();
    for (const auto& k : channel.operators) image += k * basis.elements[j] * k.adjoint();
    for (int i = 0; i < kSuperDim; ++i) {
      r(i, j) = (basis.elements[i].adjoint() * image).trace().real();
    }
  }
  return r;
}

Ptm compose(const Ptm& first, const Ptm& then) { return then * first; }

Ptm compose_sequence(const std::vector<Ptm>& sequence) {
  Ptm r = Ptm::Identity();
  for (const auto& g : sequence) r = g * r;
  return r;
}

ChoiMatrix choi_matrix(const Ptm& r, const OperatorBasis& basis) {
  const Eigen::Matrix<Complex, kSuperDim, kSuperDim> rc = r.cast<Complex>();
  ChoiMatrix choi = ChoiMatrix::Zero();
  for (int i = 0; i < kDim; ++i) {
    for (int j = 0; j < kDim; ++j) {
      const Operator3 eij = unit(i, j);
      const Operator3 image = devectorize_complex(rc * vectorize_complex(eij, basis), basis);
      // block (i, j) of J holds Lambda(E_ij)
      choi.block<kDim, kDim>(i * kDim, j * kDim) = image;
    }
  }
  return choi / static_cast<double>(kDim);
}

Ptm ptm_from_choi(const ChoiMatrix& choi, const OperatorBasis& basis) {
  const ChoiMatrix j = choi * static_cast<double>(kDim);
  Ptm r;
  for (int col = 0; col < kSuperDim; ++col) {
    // Lambda(B) = sum_ij B(i, j) Lambda(E_ij)
    const Operator3& b = basis.elements[col];
    Operator3 image = Operator3::Zero();
    for (int i = 0; i < kDim; ++i) {
      for (int k = 0; k < kDim; ++k) image += b(i, k) * j.block<kDim, kDim>(i * kDim, k * kDim);
    }
    for (int row = 0; row < kSuperDim; ++row) {
      r(row, col) = (basis.elements[row].adjoint() * image).trace().real();
    }
  }
  return r;
}

CptpReport check_cptp(const Ptm& r, const OperatorBasis& basis, double tol) {
  CptpReport rep;
  Eigen::Matrix<double, 1, kSuperDim> tp_row = Eigen::Matrix<double, 1, kSuperDim>::Zero();
  tp_row(0) = 1.0;
  rep.is_tp = (r.row(0) - tp_row).cwiseAbs().maxCoeff() <= tol;
  const ChoiMatrix choi = choi_matrix(r, basis);
  Eigen::SelfAdjointEigenSolver<ChoiMatrix> es(0.5 * (choi + choi.adjoint()),
                                               Eigen::EigenvaluesOnly);
  rep.min_choi_eig = es.eigenvalues().minCoeff();
  rep.is_cp = rep.min_choi_eig >= -tol;
  return rep;
}

Ptm clip_to_cp(const Ptm& r, const OperatorBasis& basis) {
  const ChoiMatrix choi = choi_matrix(r, basis);
  Eigen::SelfAdjointEigenSolver<ChoiMatrix> es(0.5 * (choi + choi.adjoint()));
  const Eigen::Matrix<double, kSuperDim, 1> clipped = es.eigenvalues().cwiseMax(0.0);
  const ChoiMatrix fixed =
      es.eigenvectors() * clipped.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  return ptm_from_choi(fixed, basis);
}

double frobenius_distance(const Ptm& a, const Ptm& b) { return (a - b).norm(); }

}  // namespace qgst
