#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "qgst/design.hpp"
#include "qgst/gateset.hpp"
#include "qgst/random.hpp"

namespace qgst {

using Probabilities = std::array<double, kNumOutcomes>;

// Times in microseconds, gate_time in nanoseconds, angles in radians.
// Infinite T1/T2 switch the corresponding decay off.
struct NoiseSpec {
  double depolarizing = 0.0;
  double t1_01 = std::numeric_limits<double>::infinity();
  double t1_12 = std::numeric_limits<double>::infinity();
  double t2_01 = std::numeric_limits<double>::infinity();
  double t2_12 = std::numeric_limits<double>::infinity();
  double gate_time = 30.0;
  std::map<GateLabel, double> overrotation;
  double spam_error = 0.0;

  // Device coherence figures: T1 221/119 us, Hahn-echo T2 126/76 us, 30 ns gates.
  static NoiseSpec device_defaults();

  // Throws NoiseError on out-of-range values.
  void validate() const;
};

// diag(1, 1-p, ..., 1-p)
Ptm depolarizing_ptm(double p);

// Amplitude damping on |1>->|0> and |2>->|1> with gamma = 1 - exp(-t/T1),
// followed by pure dephasing with 1/T_phi = 1/T2 - 1/(2 T1) per subspace
// (|0><2| coherence dephases with the product of both factors).
KrausChannel decay_channel(const NoiseSpec& spec);
Ptm decay_ptm(const NoiseSpec& spec);

// Each gate becomes decay * depolarizing * overrotation * gate; SPAM gets a
// symmetric confusion of strength spam_error. Throws NoiseError when the
// result is not CPTP.
GateSetModel apply_noise(const GateSetModel& model, const NoiseSpec& spec);

inline constexpr double kProbabilitySumTol = 1e-8;

// p_k = <<E_k| R_wn ... R_w1 |rho0>>. Clipped to [0, 1] and renormalized when
// the sum is within 1e-8 of one; otherwise throws ModelError.
Probabilities circuit_probabilities(const GateSetModel& model, const Word& word);

// Raw (unclipped) outcome probabilities.
Probabilities raw_circuit_probabilities(const GateSetModel& model, const Word& word);

std::vector<Probabilities> design_probabilities(const ExperimentDesign& design,
                                                const GateSetModel& model);

struct CountRecord {
  int circuit_id = 0;
  std::array<std::int64_t, kNumOutcomes> counts{};
  std::int64_t shots = 0;
};

// Inverse-CDF multinomial draw, one uniform per shot.
std::array<std::int64_t, kNumOutcomes> sample_multinomial(const Probabilities& p,
                                                          std::int64_t shots, CounterRng& rng);

// One multinomial draw per circuit, each from a stream keyed by (seed, circuit id).
std::vector<CountRecord> sample_counts(const ExperimentDesign& design, const GateSetModel& model,
                                       std::int64_t shots, std::uint64_t seed);

}  // namespace qgst
