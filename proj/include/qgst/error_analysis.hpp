#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qgst/superop.hpp"

namespace qgst {

// Post-gate error generator: est = exp(L) * ideal.
struct ErrorGenerator {
  Ptm matrix = Ptm::Zero();
};

// Principal real logarithm of a 9x9 matrix. Throws BranchError (with the
// offending eigenvalues in the message) when an eigenvalue sits on the
// closed negative real axis.
Ptm principal_log(const Ptm& m);
Ptm matrix_exp(const Ptm& m);

ErrorGenerator error_generator(const Ptm& est, const Ptm& ideal);

enum class GeneratorKind { Hamiltonian, Stochastic, Correlation, Active };

struct ElementaryGenerator {
  GeneratorKind kind;
  int p = 0;       // index into gellmann_matrices()
  int q = -1;      // second index for C/A, q > p
  std::string label;
  Ptm matrix;
};

inline constexpr int kNumTraceless = kSuperDim - 1;
inline constexpr int kNumPairs = kNumTraceless * (kNumTraceless - 1) / 2;
inline constexpr int kNumElementary = 2 * kNumTraceless + 2 * kNumPairs;

// The 72 elementary generators with P, Q the unnormalized Gell-Mann matrices:
//   H_P[rho]   = -i[P, rho]
//   S_P[rho]   = P rho P - 1/2 {P^2, rho}
//   C_PQ[rho]  = P rho Q + Q rho P - 1/2 {{P, Q}, rho}
//   A_PQ[rho]  = i (P rho Q - Q rho P + 1/2 {[P, Q], rho})
// Order: all H, all S, then C and A over pairs q > p in label order.
std::vector<ElementaryGenerator> elementary_generators(const OperatorBasis& basis = gellmann_basis());

// Shared table of elementary_generators().
const std::vector<ElementaryGenerator>& elementary_generator_table();

// 81x72 matrix whose columns are the row-major flattened generators.
Eigen::MatrixXd generator_design_matrix();

struct ErrorGeneratorDecomposition {
  std::array<double, kNumTraceless> h{};
  std::array<double, kNumTraceless> s{};
  std::array<double, kNumPairs> c{};
  std::array<double, kNumPairs> a{};
  double residual_norm = 0.0;

  // Coefficients in elementary_generators() order.
  std::vector<double> coefficients() const;
  // Reconstructed block sum_P h_P H_P etc.
  Ptm block(GeneratorKind kind) const;
  // Entry-wise 2-norms of the four reconstructed blocks (H, S, C, A).
  std::array<double, 4> block_norms() const;
};

ErrorGeneratorDecomposition project_error_generator(const ErrorGenerator& l);

// ||L_H|| / (||L_H|| + ||L_S|| + ||L_C|| + ||L_A||). Throws DegenerateError
// when every block vanishes.
double hamiltonian_power(const ErrorGeneratorDecomposition& d);

// Tr(ideal^T est) / d^2
double entanglement_fidelity(const Ptm& est, const Ptm& ideal);
// 1 - (d F_e + 1) / (d + 1)
double average_gate_infidelity(const Ptm& est, const Ptm& ideal);

std::string kind_name(GeneratorKind kind);

// Everything reported per gate. Fields that cannot be formed (principal log
// undefined, all blocks zero) stay empty and `note` says why.
struct GateAnalysis {
  std::string name;
  double infidelity = 0.0;
  Ptm ptm = Ptm::Zero();
  std::optional<ErrorGenerator> generator;
  std::optional<ErrorGeneratorDecomposition> decomposition;
  std::optional<double> p_h;
  std::string note;
};

GateAnalysis analyze_gate(const std::string& name, const Ptm& est, const Ptm& ideal);

}  // namespace qgst
