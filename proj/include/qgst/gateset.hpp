#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgst/superop.hpp"

namespace qgst {

using GateLabel = std::string;
using Word = std::vector<GateLabel>;

struct Gate {
  GateLabel name;
  Operator3 ideal_unitary;
  Ptm ptm;
  // Hermitian generator for rotation gates, ideal_unitary = exp(-i angle * axis).
  // Overrotation noise is only defined for gates that carry one.
  std::optional<Operator3> axis;
  double angle = 0.0;
};

// Named gates in insertion order plus state preparation and a 3-outcome POVM,
// all as superkets in the normalized Gell-Mann basis.
class GateSetModel {
 public:
  GateSetModel();

  // Adds a gate whose PTM is the ideal unitary channel.
  void add_gate(GateLabel name, const Operator3& unitary, std::optional<Operator3> axis = {},
                double angle = 0.0);
  void add_gate(Gate gate);

  bool contains(std::string_view name) const;
  // Position of the gate in insertion order. Throws UnknownGateError.
  int index_of(std::string_view name) const;
  const Gate& gate(std::string_view name) const;
  Gate& gate(std::string_view name);
  const std::vector<Gate>& gates() const { return gates_; }
  std::vector<Gate>& gates() { return gates_; }
  std::vector<GateLabel> labels() const;
  std::size_t size() const { return gates_.size(); }

  Superket rho0;
  std::array<Superket, kNumOutcomes> effects;

  // Word PTM with gates applied left to right (first label acts first).
  Ptm word_ptm(const Word& word) const;
  // Ideal unitary of the word, same ordering.
  Operator3 word_unitary(const Word& word) const;

  // Sum of effects minus the identity superket (max abs entry).
  double povm_completeness_error() const;

 private:
  std::vector<Gate> gates_;
};

// Ideal |0><0| preparation and computational-basis effects.
Superket ideal_rho0();
std::array<Superket, kNumOutcomes> ideal_effects();

// Subspace rotation exp(-i theta X_jk / 2) using the unnormalized generator.
Operator3 subspace_x_rotation(int j, int k, double theta);

// Qutrit discrete Fourier transform (1/sqrt 3) [omega^{jk}].
Operator3 qutrit_dft();

// Coefficients applied to the Z1/Z2 directions so that exp(-i (2 pi / 3) c Z)
// is a diagonal Clifford: c1 = 1 gives diag(w^2, w, 1), c2 = 1/sqrt(3) gives a
// phase multiple of diag(1, 1, w).
inline constexpr double kZ1Coefficient = 1.0;
double z2_coefficient();

// Gi, Gz1, Gz2, Gx01, Gx12, Gh as ideal unitaries with unitary PTMs.
GateSetModel build_native_gateset();

// Rebuilds the ideal model (unitary PTMs, ideal SPAM) for the same gates.
GateSetModel ideal_model_like(const GateSetModel& model);

}  // namespace qgst
