#pragma once

#include <cstdint>
#include <vector>

#include "qgst/design.hpp"
#include "qgst/gateset.hpp"
#include "qgst/noise.hpp"

namespace qgst {

// Observed (possibly fractional) outcome counts aligned with design.circuits.
struct GstDataset {
  ExperimentDesign design;
  std::vector<std::array<double, kNumOutcomes>> counts;

  // Throws EstimationError unless there is exactly one record per circuit, in order.
  static GstDataset from_records(ExperimentDesign design, const std::vector<CountRecord>& records);
  // Infinite-shot data: counts = shots * p.
  static GstDataset from_probabilities(ExperimentDesign design,
                                       const std::vector<Probabilities>& probabilities,
                                       double shots = 1.0);

  double total(std::size_t circuit) const;
  Probabilities frequencies(std::size_t circuit) const;
};

inline constexpr double kPinvCutoff = 1e-10;
inline constexpr double kProbabilityFloor = 1e-12;

// Linear-inversion estimate. Gates, rho0 and effects come back in the gauge
// that maps the target's fiducial states onto the observed ones, projected
// onto trace preservation. Requires the empty word among both fiducial lists.
// Throws EstimationError on missing circuits or rank deficiency.
GateSetModel lgst(const GstDataset& data, const FiducialSet& fids, const GateSetModel& target);

// Free parameters of a TP model: rows 1..8 of every gate PTM (gate order),
// coordinates 1..8 of rho0, and the first kNumOutcomes-1 effects in full.
// The last effect is the identity superket minus the others.
int parameter_count(const GateSetModel& model);
Eigen::VectorXd to_parameters(const GateSetModel& model);
GateSetModel from_parameters(const Eigen::VectorXd& theta, const GateSetModel& like);

// sum_c [N_c + sum_k (n_ck log p_ck - N_c p_ck)], which equals the multinomial
// sum_k n_ck log p_ck for a TP model. Below the floor f, log p is replaced by
// its second-order expansion at f and N p by N (f + p^2 / f) / 2, so the
// objective stays finite and concave in p for negative predictions.
double loglikelihood(const GstDataset& data, const GateSetModel& model);
// Gradient of loglikelihood with respect to to_parameters(model).
Eigen::VectorXd loglikelihood_gradient(const GstDataset& data, const GateSetModel& model);

struct MleOptions {
  int max_iter = 100;
  double grad_tol = 1e-6;
};

struct GstEstimate {
  GateSetModel model;
  double loglike = 0.0;
  int iterations = 0;
  bool converged = false;
  Ptm gauge = Ptm::Identity();
  // loglike after each accepted step, starting with the seed's
  std::vector<double> trace;
};

// Damped Fisher-scoring ascent with backtracking. Throws EstimationError on a
// non-finite objective or a non-TP seed.
GstEstimate mle_refine(const GstDataset& data, const GateSetModel& seed,
                       const MleOptions& options = {});

struct GaugeOptions {
  double gate_weight = 1.0;
  double spam_weight = 1.0;
  int max_iter = 200;
};

// R -> B R B^-1, rho -> B rho, E -> E B^-1.
GateSetModel apply_gauge(const GateSetModel& model, const Ptm& gauge);

double gauge_objective(const GateSetModel& est, const GateSetModel& target, const Ptm& gauge,
                       const GaugeOptions& options = {});

struct GaugeResult {
  GateSetModel model;
  Ptm gauge = Ptm::Identity();
  double objective = 0.0;
  int iterations = 0;
};

// Levenberg-Marquardt over TP-preserving B (first row pinned), from B = I.
// Throws GaugeError when B becomes ill-conditioned.
GaugeResult gauge_optimize(const GateSetModel& est, const GateSetModel& target,
                           const GaugeOptions& options = {});

struct EstimationOptions {
  bool run_mle = true;
  MleOptions mle;
  GaugeOptions gauge;
  // Alternating CP/TP projection of each gauge-fixed gate.
  bool cp_projection = false;
};

// lgst -> mle_refine -> gauge_optimize
GstEstimate estimate_gateset(const GstDataset& data, const GateSetModel& target,
                             const EstimationOptions& options = {});

std::vector<double> gate_infidelities(const GateSetModel& est, const GateSetModel& target);

struct BootstrapResult {
  std::vector<GateLabel> labels;
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<std::vector<double>> samples;  // [resample][gate]
};

// Nonparametric bootstrap of per-gate infidelities: each resample redraws every
// circuit's counts from its observed frequencies and reruns estimate_gateset.
BootstrapResult bootstrap_infidelities(const GstDataset& data, const GateSetModel& target,
                                       int resamples, std::uint64_t seed,
                                       const EstimationOptions& options = {});

}  // namespace qgst
