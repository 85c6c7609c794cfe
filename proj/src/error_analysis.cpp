#include "qgst/error_analysis.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <unsupported/Eigen/MatrixFunctions>

#include "qgst/errors.hpp"

namespace qgst {

namespace {

constexpr double kBranchTol = 1e-10;
constexpr double kEigenbasisConditionLimit = 1e8;

using ComplexPtm = Eigen::Matrix<Complex, kSuperDim, kSuperDim>;
using Superop = std::function<Operator3(const Operator3&)>;

const Complex kI{0.0, 1.0};

Ptm superop_matrix(const Superop& f, const OperatorBasis& basis) {
  Ptm m;
  for (int j = 0; j < kSuperDim; ++j) {
    const Operator3 image = f(basis.elements[j]);
    for (int i = 0; i < kSuperDim; ++i) {
      m(i, j) = (basis.elements[i].adjoint() * image).trace().real();
    }
  }
  return m;
}

Operator3 anticomm(const Operator3& a, const Operator3& b) { return a * b + b * a; }

std::string describe(const Eigen::Matrix<Complex, kSuperDim, 1>& ev) {
  std::ostringstream os;
  os.precision(6);
  for (int i = 0; i < ev.size(); ++i) {
    os << (i ? ", " : "") << ev(i).real() << (ev(i).imag() < 0 ? "-" : "+")
       << std::abs(ev(i).imag()) << "i";
  }
  return os.str();
}

}  // namespace

std::string kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Hamiltonian: return "H";
    case GeneratorKind::Stochastic: return "S";
    case GeneratorKind::Correlation: return "C";
    case GeneratorKind::Active: return "A";
  }
  return "?";
}

Ptm principal_log(const Ptm& m) {
  Eigen::EigenSolver<Ptm> es(m);
  if (es.info() != Eigen::Success) throw BranchError("eigendecomposition failed");
  const Eigen::Matrix<Complex, kSuperDim, 1> ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) {
    const bool on_axis = std::abs(ev(i).imag()) <= kBranchTol * scale;
    if ((on_axis && ev(i).real() <= kBranchTol * scale) || std::abs(ev(i)) <= kBranchTol * scale) {
      throw BranchError("principal logarithm undefined; eigenvalues: " + describe(ev));
    }
  }
  const ComplexPtm v = es.eigenvectors();
  Eigen::JacobiSVD<ComplexPtm> svd(v);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) > 0.0 && sv(0) / sv(sv.size() - 1) < kEigenbasisConditionLimit) {
    Eigen::Matrix<Complex, kSuperDim, 1> logs;
    for (int i = 0; i < ev.size(); ++i) logs(i) = std::log(ev(i));
    const ComplexPtm l = v * logs.asDiagonal() * v.inverse();
    if (l.imag().cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, l.real().cwiseAbs().maxCoeff())) {
      return l.real();
    }
  }
  // Defective or ill-conditioned eigenbasis: Schur-Parlett.
  return m.log();
}

Ptm matrix_exp(const Ptm& m) { return m.exp(); }

ErrorGenerator error_generator(const Ptm& est, const Ptm& ideal) {
  Eigen::FullPivLU<Ptm> lu(ideal);
  if (!lu.isInvertible()) throw BranchError("ideal gate PTM is singular");
  return {principal_log(est * lu.inverse())};
}

std::vector<ElementaryGenerator> elementary_generators(const OperatorBasis& basis) {
  const auto& gm = gellmann_matrices();
  std::vector<ElementaryGenerator> out;
  out.reserve(kNumElementary);
  for (int p = 0; p < kNumTraceless; ++p) {
    const Operator3 P = gm[p];
    out.push_back({GeneratorKind::Hamiltonian, p, -1, "H_" + basis.labels[p + 1],
                   superop_matrix([&](const Operator3& r) -> Operator3 {
                     return -kI * (P * r - r * P);
                   }, basis)});
  }
  for (int p = 0; p < kNumTraceless; ++p) {
    const Operator3 P = gm[p];
    const Operator3 P2 = P * P;
    out.push_back({GeneratorKind::Stochastic, p, -1, "S_" + basis.labels[p + 1],
                   superop_matrix([&](const Operator3& r) -> Operator3 {
                     return P * r * P - 0.5 * anticomm(P2, r);
                   }, basis)});
  }
  for (int p = 0; p < kNumTraceless; ++p) {
    for (int q = p + 1; q < kNumTraceless; ++q) {
      const Operator3 P = gm[p];
      const Operator3 Q = gm[q];
      const Operator3 pq = anticomm(P, Q);
      out.push_back({GeneratorKind::Correlation, p, q,
                     "C_" + basis.labels[p + 1] + "_" + basis.labels[q + 1],
                     superop_matrix([&](const Operator3& r) -> Operator3 {
                       return P * r * Q + Q * r * P - 0.5 * anticomm(pq, r);
                     }, basis)});
    }
  }
  for (int p = 0; p < kNumTraceless; ++p) {
    for (int q = p + 1; q < kNumTraceless; ++q) {
      const Operator3 P = gm[p];
      const Operator3 Q = gm[q];
      const Operator3 comm = P * Q - Q * P;
      out.push_back({GeneratorKind::Active, p, q,
                     "A_" + basis.labels[p + 1] + "_" + basis.labels[q + 1],
                     superop_matrix([&](const Operator3& r) -> Operator3 {
                       return kI * (P * r * Q - Q * r * P + 0.5 * anticomm(comm, r));
                     }, basis)});
    }
  }
  return out;
}

const std::vector<ElementaryGenerator>& elementary_generator_table() {
  static const std::vector<ElementaryGenerator> table = elementary_generators();
  return table;
}

Eigen::MatrixXd generator_design_matrix() {
  const auto& table = elementary_generator_table();
  Eigen::MatrixXd d(kSuperDim * kSuperDim, static_cast<Eigen::Index>(table.size()));
  for (std::size_t k = 0; k < table.size(); ++k) {
    for (int i = 0; i < kSuperDim; ++i) {
      for (int j = 0; j < kSuperDim; ++j) d(i * kSuperDim + j, k) = table[k].matrix(i, j);
    }
  }
  return d;
}

std::vector<double> ErrorGeneratorDecomposition::coefficients() const {
  std::vector<double> out;
  out.reserve(kNumElementary);
  out.insert(out.end(), h.begin(), h.end());
  out.insert(out.end(), s.begin(), s.end());
  out.insert(out.end(), c.begin(), c.end());
  out.insert(out.end(), a.begin(), a.end());
  return out;
}

Ptm ErrorGeneratorDecomposition::block(GeneratorKind kind) const {
  const auto& table = elementary_generator_table();
  const auto coeffs = coefficients();
  Ptm out = Ptm::Zero();
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].kind == kind) out += coeffs[k] * table[k].matrix;
  }
  return out;
}

std::array<double, 4> ErrorGeneratorDecomposition::block_norms() const {
  return {block(GeneratorKind::Hamiltonian).norm(), block(GeneratorKind::Stochastic).norm(),
          block(GeneratorKind::Correlation).norm(), block(GeneratorKind::Active).norm()};
}

ErrorGeneratorDecomposition project_error_generator(const ErrorGenerator& l) {
  static const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(
      generator_design_matrix());
  Eigen::VectorXd target(kSuperDim * kSuperDim);
  for (int i = 0; i < kSuperDim; ++i) {
    for (int j = 0; j < kSuperDim; ++j) target(i * kSuperDim + j) = l.matrix(i, j);
  }
  const Eigen::VectorXd x = solver.solve(target);

  ErrorGeneratorDecomposition d;
  int k = 0;
  for (auto& v : d.h) v = x(k++);
  for (auto& v : d.s) v = x(k++);
  for (auto& v : d.c) v = x(k++);
  for (auto& v : d.a) v = x(k++);
  static const Eigen::MatrixXd design = generator_design_matrix();
  d.residual_norm = (target - design * x).norm();
  return d;
}

double hamiltonian_power(const ErrorGeneratorDecomposition& d) {
  const auto n = d.block_norms();
  const double total = n[0] + n[1] + n[2] + n[3];
  if (!(total > 0.0)) throw DegenerateError("all error-generator blocks vanish; p_H undefined");
  return n[0] / total;
}

double entanglement_fidelity(const Ptm& est, const Ptm& ideal) {
  return (ideal.transpose() * est).trace() / static_cast<double>(kSuperDim);
}

double average_gate_infidelity(const Ptm& est, const Ptm& ideal) {
  const double d = kDim;
  return 1.0 - (d * entanglement_fidelity(est, ideal) + 1.0) / (d + 1.0);
}

GateAnalysis analyze_gate(const std::string& name, const Ptm& est, const Ptm& ideal) {
  GateAnalysis g;
  g.name = name;
  g.ptm = est;
  g.infidelity = average_gate_infidelity(est, ideal);
  try {
    g.generator = error_generator(est, ideal);
  } catch (const BranchError& e) {
    g.note = e.what();
    return g;
  }
  g.decomposition = project_error_generator(*g.generator);
  try {
    g.p_h = hamiltonian_power(*g.decomposition);
  } catch (const DegenerateError& e) {
    g.note = e.what();
  }
  return g;
}

}  // namespace qgst
