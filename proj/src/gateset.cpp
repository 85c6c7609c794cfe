#include "qgst/gateset.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qgst/clifford.hpp"
#include "qgst/errors.hpp"

namespace qgst {

namespace {

Operator3 exp_hermitian(const Operator3& generator, double angle) {
  // exp(-i angle G) via the eigendecomposition of the hermitian generator.
  Eigen::SelfAdjointEigenSolver<Operator3> es(generator);
  Eigen::Matrix<Complex, kDim, 1> phases;
  for (int i = 0; i < kDim; ++i) {
    phases(i) = std::exp(Complex(0.0, -angle * es.eigenvalues()(i)));
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

GateSetModel::GateSetModel() : rho0(ideal_rho0()), effects(ideal_effects()) {}

void GateSetModel::add_gate(GateLabel name, const Operator3& unitary,
                            std::optional<Operator3> axis, double angle) {
  Gate g;
  g.name = std::move(name);
  g.ideal_unitary = unitary;
  g.ptm = ptm_from_unitary(unitary);
  g.axis = std::move(axis);
  g.angle = angle;
  add_gate(std::move(g));
}

void GateSetModel::add_gate(Gate gate) {
  if (gate.name.empty()) throw UnknownGateError("gate label must not be empty");
  if (contains(gate.name)) throw UnknownGateError("duplicate gate label '" + gate.name + "'");
  gates_.push_back(std::move(gate));
}

bool GateSetModel::contains(std::string_view name) const {
  for (const auto& g : gates_) {
    if (g.name == name) return true;
  }
  return false;
}

int GateSetModel::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    if (gates_[i].name == name) return static_cast<int>(i);
  }
  throw UnknownGateError("unknown gate label '" + std::string(name) + "'");
}

const Gate& GateSetModel::gate(std::string_view name) const { return gates_[index_of(name)]; }

Gate& GateSetModel::gate(std::string_view name) { return gates_[index_of(name)]; }

std::vector<GateLabel> GateSetModel::labels() const {
  std::vector<GateLabel> out;
  out.reserve(gates_.size());
  for (const auto& g : gates_) out.push_back(g.name);
  return out;
}

Ptm GateSetModel::word_ptm(const Word& word) const {
  Ptm r = Ptm::Identity();
  for (const auto& label : word) r = gate(label).ptm * r;
  return r;
}

Operator3 GateSetModel::word_unitary(const Word& word) const {
  Operator3 u = Operator3::Identity();
  for (const auto& label : word) u = gate(label).ideal_unitary * u;
  return u;
}

double GateSetModel::povm_completeness_error() const {
  Superket sum = Superket::Zero();
  for (const auto& e : effects) sum += e;
  return (sum - identity_superket()).cwiseAbs().maxCoeff();
}

Superket ideal_rho0() { return vectorize(projector(0)); }

std::array<Superket, kNumOutcomes> ideal_effects() {
  std::array<Superket, kNumOutcomes> e;
  for (int k = 0; k < kNumOutcomes; ++k) e[k] = vectorize(projector(k));
  return e;
}

Operator3 subspace_x_rotation(int j, int k, double theta) {
  Operator3 gen = Operator3::Zero();
  gen(j, k) = 1.0;
  gen(k, j) = 1.0;
  return exp_hermitian(gen, theta / 2.0);
}

Operator3 qutrit_dft() {
  const Complex omega = std::polar(1.0, 2.0 * std::numbers::pi / kDim);
  Operator3 h;
  for (int j = 0; j < kDim; ++j) {
    for (int k = 0; k < kDim; ++k) h(j, k) = std::pow(omega, j * k) / std::sqrt(double(kDim));
  }
  return h;
}

double z2_coefficient() { return 1.0 / std::sqrt(3.0); }

GateSetModel build_native_gateset() {
  const auto& gm = gellmann_matrices();
  const double third_turn = 2.0 * std::numbers::pi / 3.0;
  const double quarter_turn = std::numbers::pi / 2.0;

  const Operator3 z1_axis = kZ1Coefficient * gm[6];
  const Operator3 z2_axis = z2_coefficient() * gm[7];
  const Operator3 x01_axis = 0.5 * gm[0];
  const Operator3 x12_axis = 0.5 * gm[2];

  GateSetModel m;
  m.add_gate("Gi", Operator3::Identity());
  m.add_gate("Gz1", exp_hermitian(z1_axis, third_turn), z1_axis, third_turn);
  m.add_gate("Gz2", exp_hermitian(z2_axis, third_turn), z2_axis, third_turn);
  m.add_gate("Gx01", subspace_x_rotation(0, 1, quarter_turn), x01_axis, quarter_turn);
  m.add_gate("Gx12", subspace_x_rotation(1, 2, quarter_turn), x12_axis, quarter_turn);
  m.add_gate("Gh", qutrit_dft());
  for (const char* name : {"Gz1", "Gz2", "Gh"}) {
    if (!is_clifford(m.gate(name).ideal_unitary)) {
      throw NotAGroupError(std::string("native gate ") + name + " is not a qutrit Clifford");
    }
  }
  return m;
}

GateSetModel ideal_model_like(const GateSetModel& model) {
  GateSetModel ideal;
  for (const auto& g : model.gates()) {
    Gate copy = g;
    copy.ptm = ptm_from_unitary(g.ideal_unitary);
    ideal.add_gate(std::move(copy));
  }
  return ideal;
}

}  // namespace qgst
