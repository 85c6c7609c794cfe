#pragma once

#include <cstdint>
#include <vector>

#include "qgst/clifford.hpp"
#include "qgst/gateset.hpp"

namespace qgst {

struct RbConfig {
  std::vector<int> lengths;
  int sequences_per_length = 30;
  // 0 means exact outcome probabilities instead of sampled frequencies.
  std::int64_t shots = 10000;
  std::uint64_t seed = 0;

  // Throws FitError on empty/non-increasing lengths or lengths < 1.
  void validate() const;
};

std::vector<int> default_rb_lengths();

// Random Cliffords g_1..g_m plus the element undoing U_gm ... U_g1.
struct RbSequence {
  std::vector<int> elements;
  int inverse = 0;
};

// Sequence `index` of length m; a pure function of (seed, m, index).
RbSequence rb_sequence(const CliffordGroup& group, int m, std::uint64_t seed, int index);
std::vector<RbSequence> rb_sequences(const CliffordGroup& group, int m, int count,
                                     std::uint64_t seed);

struct RbPoint {
  int length = 0;
  int seq_index = 0;
  double survival = 0.0;
};

struct RbSurvival {
  int length = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

// A p^m + B with 1-sigma errors from the fit covariance.
struct RbFit {
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
  double a_err = 0.0;
  double b_err = 0.0;
  double p_err = 0.0;
  int iterations = 0;
};

struct RbResult {
  std::vector<RbPoint> points;
  std::vector<RbSurvival> survival;
  RbFit fit;
  double infidelity = 0.0;
};

// (d - 1)(1 - p) / d
double rb_infidelity(double p);

// Weighted bounded least squares of A p^m + B on per-length means, with
// A, B, p in [0, 1]. A flat decay is returned as p = 1. Throws FitError when
// the fit does not converge or there are fewer than three lengths.
RbFit fit_rb_decay(const std::vector<RbSurvival>& survival);

// Cliffords run as their compiled native words under the model's noisy PTMs;
// survival is the probability of outcome 0. Throws CompilationError when the
// group has no native circuits.
RbResult run_rb(const GateSetModel& model, const CliffordGroup& group, const RbConfig& cfg);

// Mean average gate infidelity over all group elements of est's compiled
// word PTM against the ideal word PTM.
double mean_clifford_infidelity(const GateSetModel& est, const GateSetModel& ideal,
                                const CliffordGroup& group);

}  // namespace qgst
