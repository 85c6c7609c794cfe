#include "qgst/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qgst/errors.hpp"
#include "qgst/parallel.hpp"

namespace qgst {

namespace {

double survival(double time_us, double t1_us) {
  return std::isinf(t1_us) ? 1.0 : std::exp(-time_us / t1_us);
}

double dephasing_rate(double t1, double t2) {
  const double r2 = std::isinf(t2) ? 0.0 : 1.0 / t2;
  const double r1 = std::isinf(t1) ? 0.0 : 1.0 / t1;
  return r2 - 0.5 * r1;
}

Operator3 rotation(const Operator3& axis, double angle) {
  Eigen::SelfAdjointEigenSolver<Operator3> es(axis);
  Eigen::Matrix<Complex, kDim, 1> phases;
  for (int i = 0; i < kDim; ++i) phases(i) = std::polar(1.0, -angle * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw NoiseError(std::string(name) + " must be a probability in [0, 1]");
  }
}

void check_time(double t, const char* name) {
  if (!(t > 0.0)) throw NoiseError(std::string(name) + " must be positive");
}

}  // namespace

NoiseSpec NoiseSpec::device_defaults() {
  NoiseSpec s;
  s.t1_01 = 221.0;
  s.t1_12 = 119.0;
  s.t2_01 = 126.0;
  s.t2_12 = 76.0;
  s.gate_time = 30.0;
  return s;
}

void NoiseSpec::validate() const {
  check_probability(depolarizing, "depolarizing");
  check_probability(spam_error, "spam_error");
  check_time(t1_01, "t1_01");
  check_time(t1_12, "t1_12");
  check_time(t2_01, "t2_01");
  check_time(t2_12, "t2_12");
  if (!(gate_time >= 0.0) || std::isinf(gate_time)) {
    throw NoiseError("gate_time must be finite and non-negative");
  }
  for (const auto& [label, angle] : overrotation) {
    if (!std::isfinite(angle)) throw NoiseError("overrotation for " + label + " is not finite");
  }
}

Ptm depolarizing_ptm(double p) {
  Ptm r = Ptm::Identity() * (1.0 - p);
  r(0, 0) = 1.0;
  return r;
}

KrausChannel decay_channel(const NoiseSpec& spec) {
  const double t = spec.gate_time * 1e-3;  // ns -> us
  const double keep01 = survival(t, spec.t1_01);
  const double keep12 = survival(t, spec.t1_12);

  // Amplitude damping |2> -> |1>, then |1> -> |0>.
  std::vector<Operator3> ad12(2, Operator3::Zero());
  ad12[0].diagonal() << 1.0, 1.0, std::sqrt(keep12);
  ad12[1](1, 2) = std::sqrt(1.0 - keep12);
  std::vector<Operator3> ad01(2, Operator3::Zero());
  ad01[0].diagonal() << 1.0, std::sqrt(keep01), 1.0;
  ad01[1](0, 1) = std::sqrt(1.0 - keep01);

  // Dephasing as a Schur multiplier with correlation matrix M; Kraus operators
  // are diag(sqrt(lambda) v) over the eigenpairs of M.
  const double a = std::exp(-t * dephasing_rate(spec.t1_01, spec.t2_01));
  const double b = std::exp(-t * dephasing_rate(spec.t1_12, spec.t2_12));
  Eigen::Matrix3d m;
  m << 1.0, a, a * b, a, 1.0, b, a * b, b, 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw NoiseError("T2 exceeds 2*T1: dephasing channel is not completely positive");
  }
  std::vector<Operator3> dephase;
  for (int i = 0; i < kDim; ++i) {
    const double lam = std::max(0.0, es.eigenvalues()(i));
    if (lam <= 0.0) continue;
    Operator3 k = Operator3::Zero();
    k.diagonal() = (std::sqrt(lam) * es.eigenvectors().col(i)).cast<Complex>();
    dephase.push_back(k);
  }

  KrausChannel ch;
  for (const auto& d : dephase) {
    for (const auto& k01 : ad01) {
      for (const auto& k12 : ad12) {
        Operator3 k = d * k01 * k12;
        if (k.cwiseAbs().maxCoeff() > 0.0) ch.operators.push_back(k);
      }
    }
  }
  return ch;
}

Ptm decay_ptm(const NoiseSpec& spec) { return ptm_from_kraus(decay_channel(spec)); }

GateSetModel apply_noise(const GateSetModel& model, const NoiseSpec& spec) {
  spec.validate();
  for (const auto& [label, angle] : spec.overrotation) {
    const Gate& g = model.gate(label);
    if (angle != 0.0 && !g.axis) {
      throw NoiseError("gate " + label + " has no rotation axis for overrotation");
    }
  }
  const Ptm decay = decay_ptm(spec);
  const Ptm depol = depolarizing_ptm(spec.depolarizing);

  GateSetModel noisy = model;
  for (auto& g : noisy.gates()) {
    Ptm over = Ptm::Identity();
    if (auto it = spec.overrotation.find(g.name); it != spec.overrotation.end() && it->second != 0.0) {
      over = ptm_from_unitary(rotation(*g.axis, it->second));
    }
    g.ptm = decay * depol * over * g.ptm;
    const CptpReport rep = check_cptp(g.ptm);
    if (!rep.is_tp || !rep.is_cp) {
      throw NoiseError("noisy gate " + g.name + " is not CPTP (min Choi eigenvalue " +
                       std::to_string(rep.min_choi_eig) + ")");
    }
  }

  const double e = spec.spam_error;
  const Superket id = identity_superket();
  noisy.rho0 = (1.0 - e) * model.rho0 + 0.5 * e * (id - model.rho0);
  for (int k = 0; k < kNumOutcomes; ++k) {
    Superket others = Superket::Zero();
    for (int j = 0; j < kNumOutcomes; ++j) {
      if (j != k) others += model.effects[j];
    }
    noisy.effects[k] = (1.0 - e) * model.effects[k] + 0.5 * e * others;
  }
  return noisy;
}

Probabilities raw_circuit_probabilities(const GateSetModel& model, const Word& word) {
  Superket r = model.rho0;
  for (const auto& label : word) r = model.gate(label).ptm * r;
  Probabilities p;
  for (int k = 0; k < kNumOutcomes; ++k) p[k] = model.effects[k].dot(r);
  return p;
}

Probabilities circuit_probabilities(const GateSetModel& model, const Word& word) {
  Probabilities p = raw_circuit_probabilities(model, word);
  double sum = 0.0;
  for (double v : p) sum += v;
  if (std::abs(sum - 1.0) > kProbabilitySumTol || !std::isfinite(sum)) {
    throw ModelError("outcome probabilities sum to " + std::to_string(sum) +
                     "; model is not trace preserving");
  }
  double clipped = 0.0;
  for (double& v : p) {
    v = std::clamp(v, 0.0, 1.0);
    clipped += v;
  }
  for (double& v : p) v /= clipped;
  return p;
}

std::vector<Probabilities> design_probabilities(const ExperimentDesign& design,
                                                const GateSetModel& model) {
  std::vector<Probabilities> out(design.circuits.size());
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = circuit_probabilities(model, design.circuits[i].flat_word);
  });
  return out;
}

std::array<std::int64_t, kNumOutcomes> sample_multinomial(const Probabilities& p,
                                                          std::int64_t shots, CounterRng& rng) {
  std::array<double, kNumOutcomes> cdf;
  double acc = 0.0;
  for (int k = 0; k < kNumOutcomes; ++k) {
    acc += p[k];
    cdf[k] = acc;
  }
  cdf[kNumOutcomes - 1] = 1.0;
  // Outcomes with zero probability have empty CDF intervals and are never drawn.
  int last_nonzero = kNumOutcomes - 1;
  while (last_nonzero > 0 && p[last_nonzero] <= 0.0) --last_nonzero;
  std::array<std::int64_t, kNumOutcomes> counts{};
  for (std::int64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform();
    int k = 0;
    while (k < last_nonzero && u >= cdf[k]) ++k;
    ++counts[k];
  }
  return counts;
}

std::vector<CountRecord> sample_counts(const ExperimentDesign& design, const GateSetModel& model,
                                       std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw ModelError("shots must be at least 1");
  std::vector<CountRecord> out(design.circuits.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const Probabilities p = circuit_probabilities(model, design.circuits[i].flat_word);
    CounterRng rng{seed, static_cast<std::uint64_t>(i)};
    out[i].circuit_id = static_cast<int>(i);
    out[i].counts = sample_multinomial(p, shots, rng);
    out[i].shots = shots;
  });
  return out;
}

}  // namespace qgst
