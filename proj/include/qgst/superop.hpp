#pragma once

// Qutrit operator algebra and Pauli-transfer-matrix superoperators.
//
// Everything downstream (gate sets, estimation, error analysis) works with
// 9x9 real transfer matrices expressed in the normalized Gell-Mann basis
// built here. Coordinates use the plain Hilbert-Schmidt inner product
// Tr(A^dagger B), so the identity channel has the identity matrix as its PTM.

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qgst {

inline constexpr int kDim = 3;
inline constexpr int kSuperDim = kDim * kDim;
inline constexpr int kNumOutcomes = kDim;

using Complex = std::complex<double>;
using Operator3 = Eigen::Matrix<Complex, kDim, kDim>;
using Superket = Eigen::Matrix<double, kSuperDim, 1>;
using Ptm = Eigen::Matrix<double, kSuperDim, kSuperDim>;
using ChoiMatrix = Eigen::Matrix<Complex, kSuperDim, kSuperDim>;

struct OperatorBasis {
  std::array<Operator3, kSuperDim> elements;
  std::array<std::string, kSuperDim> labels;

  // Index of `label` in the basis, or -1.
  int index_of(std::string_view label) const;
};

// The eight unnormalized Gell-Mann matrices in label order
// X01, X02, X12, Y01, Y02, Y12, Z1, Z2 (Tr(P_i P_j) = 2 delta_ij).
const std::array<Operator3, kSuperDim - 1>& gellmann_matrices();

// Identity/sqrt(3) followed by the Gell-Mann matrices divided by sqrt(2).
OperatorBasis build_basis();

// Shared immutable instance of build_basis().
const OperatorBasis& gellmann_basis();

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;

bool is_hermitian(const Operator3& op, double tol = kHermitianTol);
bool is_unitary(const Operator3& op, double tol = kUnitaryTol);

// Real coordinates Tr(B_m^dagger op) of a hermitian operator.
// Throws NonHermitianError if op is not hermitian within `tol`.
Superket vectorize(const Operator3& op, const OperatorBasis& basis = gellmann_basis(),
                   double tol = kHermitianTol);

// Complex coordinates of an arbitrary operator.
Eigen::Matrix<Complex, kSuperDim, 1> vectorize_complex(
    const Operator3& op, const OperatorBasis& basis = gellmann_basis());

Operator3 devectorize(const Superket& coords, const OperatorBasis& basis = gellmann_basis());
Operator3 devectorize_complex(const Eigen::Matrix<Complex, kSuperDim, 1>& coords,
                              const OperatorBasis& basis = gellmann_basis());

// |k><k| for k in [0, kDim).
Operator3 projector(int k);

// Superket of the identity operator; the TP effect row lives along it.
Superket identity_superket(const OperatorBasis& basis = gellmann_basis());

// Tr(B_i^dagger U B_j U^dagger). Throws NonUnitaryError.
Ptm ptm_from_unitary(const Operator3& u, const OperatorBasis& basis = gellmann_basis());

struct KrausChannel {
  std::vector<Operator3> operators;

  // sum_k K_k^dagger K_k == I within tol
  bool is_trace_preserving(double tol = 1e-10) const;
};

// sum_k Tr(B_i^dagger K_k B_j K_k^dagger). Throws EmptyChannelError.
Ptm ptm_from_kraus(const KrausChannel& channel, const OperatorBasis& basis = gellmann_basis());

// The channel that applies `first` and then `then`: then * first.
Ptm compose(const Ptm& first, const Ptm& then);

// Product of transfer matrices applied left to right.
Ptm compose_sequence(const std::vector<Ptm>& sequence);

inline constexpr double kCptpTol = 1e-8;

struct CptpReport {
  bool is_tp = false;
  bool is_cp = false;
  double min_choi_eig = 0.0;
};

// Choi matrix sum_ij |i><j| (x) Lambda(|i><j|), divided by d so a CPTP map
// has unit trace.
ChoiMatrix choi_matrix(const Ptm& r, const OperatorBasis& basis = gellmann_basis());

// Inverse of choi_matrix; the Choi matrix must be hermitian.
Ptm ptm_from_choi(const ChoiMatrix& choi, const OperatorBasis& basis = gellmann_basis());

CptpReport check_cptp(const Ptm& r, const OperatorBasis& basis = gellmann_basis(),
                      double tol = kCptpTol);

// Nearest CP map in Frobenius distance of Choi matrices (negative Choi
// eigenvalues clipped). Trace preservation is not re-imposed.
Ptm clip_to_cp(const Ptm& r, const OperatorBasis& basis = gellmann_basis());

// Frobenius norm of a - b.
double frobenius_distance(const Ptm& a, const Ptm& b);

}  // namespace qgst
