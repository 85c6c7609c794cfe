#include "qgst/rb.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "qgst/error_analysis.hpp"
#include "qgst/errors.hpp"
#include "qgst/noise.hpp"
#include "qgst/parallel.hpp"
#include "qgst/random.hpp"

namespace qgst {

namespace {

// Stream tags keep sequence draws and shot draws independent.
constexpr std::uint64_t kSequenceStream = 0;
constexpr std::uint64_t kShotStream = 1;

constexpr int kFitMaxIter = 500;
constexpr double kFlatTol = 1e-12;

struct Params {
  double a, b, p;
};

Params clamp01(Params x) {
  return {std::clamp(x.a, 0.0, 1.0), std::clamp(x.b, 0.0, 1.0), std::clamp(x.p, 0.0, 1.0)};
}

double model_value(const Params& x, int m) { return x.a * std::pow(x.p, m) + x.b; }

}  // namespace

void RbConfig::validate() const {
  if (lengths.empty()) throw FitError("RB needs at least one sequence length");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw FitError("RB lengths must be at least 1");
    if (i > 0 && lengths[i] <= lengths[i - 1]) throw FitError("RB lengths must increase");
  }
  if (sequences_per_length < 1) throw FitError("sequences_per_length must be at least 1");
  if (shots < 0) throw FitError("shots must be non-negative");
}

std::vector<int> default_rb_lengths() { return {1, 2, 4, 8, 16, 32, 64, 128}; }

RbSequence rb_sequence(const CliffordGroup& group, int m, std::uint64_t seed, int index) {
  if (m < 1) throw FitError("RB sequence length must be at least 1");
  CounterRng rng{seed, kSequenceStream, static_cast<std::uint64_t>(m),
                 static_cast<std::uint64_t>(index)};
  RbSequence s;
  s.elements.reserve(m);
  int product = group.identity();
  for (int i = 0; i < m; ++i) {
    const int g = static_cast<int>(rng.below(group.size()));
    s.elements.push_back(g);
    product = group.multiply(g, product);
  }
  s.inverse = group.inverse(product);
  return s;
}

std::vector<RbSequence> rb_sequences(const CliffordGroup& group, int m, int count,
                                     std::uint64_t seed) {
  std::vector<RbSequence> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(rb_sequence(group, m, seed, i));
  return out;
}

double rb_infidelity(double p) {
  return static_cast<double>(kDim - 1) * (1.0 - p) / static_cast<double>(kDim);
}

RbFit fit_rb_decay(const std::vector<RbSurvival>& survival) {
  if (survival.size() < 3) throw FitError("RB fit needs at least three lengths");
  const int n = static_cast<int>(survival.size());

  double lo = survival[0].mean, hi = survival[0].mean;
  for (const auto& s : survival) {
    lo = std::min(lo, s.mean);
    hi = std::max(hi, s.mean);
  }
  RbFit fit;
  if (hi - lo <= kFlatTol) {
    // No decay at all: p = 1 and the constant splits as A + B.
    fit.p = 1.0;
    fit.b = std::min(1.0 / kDim, hi);
    fit.a = std::clamp(hi - fit.b, 0.0, 1.0);
    return fit;
  }

  // Weights from the per-length standard errors, floored so exact data
  // (zero spread) stays finite and evenly weighted.
  double floor = 0.0;
  for (const auto& s : survival) floor = std::max(floor, s.std_error * s.std_error);
  floor = std::max(floor * 1e-6, 1e-14);
  Eigen::VectorXd sqrt_w(n);
  for (int i = 0; i < n; ++i) {
    sqrt_w(i) = 1.0 / std::sqrt(std::max(survival[i].std_error * survival[i].std_error, floor));
  }

  auto residuals = [&](const Params& x) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = sqrt_w(i) * (model_value(x, survival[i].length) - survival[i].mean);
    return r;
  };
  auto jacobian = [&](const Params& x) {
    Eigen::MatrixXd j(n, 3);
    for (int i = 0; i < n; ++i) {
      const int m = survival[i].length;
      const double pm = std::pow(x.p, m);
      const double dpm = m * std::pow(x.p, m - 1);
      j(i, 0) = sqrt_w(i) * pm;
      j(i, 1) = sqrt_w(i);
      j(i, 2) = sqrt_w(i) * x.a * dpm;
    }
    return j;
  };

  Params x{2.0 / 3.0, 1.0 / 3.0, 0.5};
  const double b0 = 1.0 / kDim;
  const auto& first = survival.front();
  const auto& last = survival.back();
  const double ratio = (last.mean - b0) / (first.mean - b0);
  if (ratio > 0.0 && std::isfinite(ratio)) {
    x.p = std::clamp(std::pow(ratio, 1.0 / (last.length - first.length)), 1e-3, 1.0 - 1e-9);
  }
  x.a = std::clamp((first.mean - b0) / std::pow(x.p, first.length), 0.0, 1.0);

  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < kFitMaxIter; ++it) {
    const Eigen::MatrixXd j = jacobian(x);
    const Eigen::Matrix3d jtj = j.transpose() * j;
    const Eigen::Vector3d g = j.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 50 && !accepted; ++attempt) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector3d step = -a.ldlt().solve(g);
      const Params trial = clamp01({x.a + step(0), x.b + step(1), x.p + step(2)});
      const Eigen::VectorXd tr = residuals(trial);
      const double tc = tr.squaredNorm();
      if (tc <= cost) {
        const double gain = cost - tc;
        const double moved = std::abs(trial.a - x.a) + std::abs(trial.b - x.b) + std::abs(trial.p - x.p);
        x = trial;
        r = tr;
        cost = tc;
        lambda = std::max(lambda / 5.0, 1e-15);
        accepted = true;
        ++fit.iterations;
        if (gain <= 1e-14 * std::max(cost, 1e-300) || moved < 1e-14) converged = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) converged = true;  // no descent left at working precision
    if (converged) break;
  }
  if (!converged) throw FitError("RB decay fit did not converge");

  fit.a = x.a;
  fit.b = x.b;
  fit.p = x.p;
  const Eigen::MatrixXd j = jacobian(x);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(j.transpose() * j);
  if (lu.isInvertible() && n > 3) {
    const Eigen::Matrix3d cov = lu.inverse() * (cost / (n - 3));
    fit.a_err = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.b_err = std::sqrt(std::max(cov(1, 1), 0.0));
    fit.p_err = std::sqrt(std::max(cov(2, 2), 0.0));
  }
  return fit;
}

RbResult run_rb(const GateSetModel& model, const CliffordGroup& group, const RbConfig& cfg) {
  cfg.validate();
  if (!group.is_compiled()) throw CompilationError("Clifford group has no native circuits");

  std::vector<Ptm> noisy(group.size());
  for (std::size_t g = 0; g < group.size(); ++g) {
    noisy[g] = model.word_ptm(group[static_cast<int>(g)].native_circuit);
  }

  const std::size_t per = static_cast<std::size_t>(cfg.sequences_per_length);
  RbResult res;
  res.points.resize(cfg.lengths.size() * per);
  parallel_for(res.points.size(), [&](std::size_t i) {
    const int m = cfg.lengths[i / per];
    const int index = static_cast<int>(i % per);
    const RbSequence seq = rb_sequence(group, m, cfg.seed, index);
    Superket state = model.rho0;
    for (int g : seq.elements) state = noisy[g] * state;
    state = noisy[seq.inverse] * state;
    Probabilities p;
    double total = 0.0;
    for (int k = 0; k < kNumOutcomes; ++k) {
      p[k] = std::clamp(model.effects[k].dot(state), 0.0, 1.0);
      total += p[k];
    }
    for (double& v : p) v /= total;
    double survival = p[0];
    if (cfg.shots > 0) {
      CounterRng rng{cfg.seed, kShotStream, static_cast<std::uint64_t>(m),
                     static_cast<std::uint64_t>(index)};
      const auto counts = sample_multinomial(p, cfg.shots, rng);
      survival = static_cast<double>(counts[0]) / static_cast<double>(cfg.shots);
    }
    res.points[i] = {m, index, survival};
  });

  for (std::size_t li = 0; li < cfg.lengths.size(); ++li) {
    RbSurvival s;
    s.length = cfg.lengths[li];
    for (std::size_t k = 0; k < per; ++k) s.mean += res.points[li * per + k].survival;
    s.mean /= static_cast<double>(per);
    if (per > 1) {
      double var = 0.0;
      for (std::size_t k = 0; k < per; ++k) {
        const double d = res.points[li * per + k].survival - s.mean;
        var += d * d;
      }
      s.std_error = std::sqrt(var / static_cast<double>(per - 1) / static_cast<double>(per));
    }
    res.survival.push_back(s);
  }
  res.fit = fit_rb_decay(res.survival);
  res.infidelity = rb_infidelity(res.fit.p);
  return res;
}

double mean_clifford_infidelity(const GateSetModel& est, const GateSetModel& ideal,
                                const CliffordGroup& group) {
  if (!group.is_compiled()) throw CompilationError("Clifford group has no native circuits");
  double sum = 0.0;
  for (const auto& e : group.elements()) {
    sum += average_gate_infidelity(est.word_ptm(e.native_circuit), ideal.word_ptm(e.native_circuit));
  }
  return sum / static_cast<double>(group.size());
}

}  // namespace qgst
