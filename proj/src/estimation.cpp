#include "qgst/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "qgst/error_analysis.hpp"
#include "qgst/errors.hpp"
#include "qgst/parallel.hpp"
#include "qgst/random.hpp"

namespace qgst {

namespace {

constexpr int kGateParams = (kSuperDim - 1) * kSuperDim;
constexpr int kRhoParams = kSuperDim - 1;
constexpr int kEffectParams = (kNumOutcomes - 1) * kSuperDim;
constexpr double kTpTol = 1e-6;
constexpr std::size_t kChunk = 64;
constexpr double kLoosestFloor = 1e-2;
// Width of the quadratic penalty on -N p for zero-count outcomes, in counts.
// Such an outcome then sits at most ~1e-2 counts below zero, far inside shot
// noise, while the curvature N / width stays well conditioned. Outcomes with
// n > 0 have their optimum at p = n/N and keep the floor as width.
constexpr double kBarrierCounts = 1e-2;

using RowVec = Eigen::Matrix<double, 1, kSuperDim>;

RowVec tp_row() {
  RowVec r = RowVec::Zero();
  r(0) = 1.0;
  return r;
}

double rho_trace_coordinate() { return 1.0 / std::sqrt(static_cast<double>(kDim)); }

// One outcome's contribution in Poisson form, n log p - N p. Summed over a
// circuit's outcomes this differs from the multinomial n log p by the
// constant -N as long as the model is TP; evaluate() adds N back. Below the
// floor f, n log p is replaced by its second-order expansion at f. Below
// b (f, or max(f, kBarrierCounts / N) when n = 0), -N p becomes -N (b/2 + p^2 / 2b): the
// objective stays concave and C1, and no prediction profits from going
// negative.
struct Term {
  double value;
  double slope;   // d/dp
  double weight;  // Gauss-Newton curvature
};

Term outcome_term(double n, double shots, double p, double floor) {
  Term t{0.0, 0.0, 0.0};
  if (n > 0.0) {
    if (p >= floor) {
      t = {n * std::log(p), n / p, n / (p * p)};
    } else {
      const double x = (p - floor) / floor;
      t = {n * (std::log(floor) + x - 0.5 * x * x), n * (2.0 * floor - p) / (floor * floor),
           n / (floor * floor)};
    }
  }
  const double b = n == 0.0 && shots > 0.0 ? std::max(floor, kBarrierCounts / shots) : floor;
  if (p >= b) {
    t.value -= shots * p;
    t.slope -= shots;
  } else {
    t.value -= shots * (0.5 * b + 0.5 * p * p / b);
    t.slope -= shots * p / b;
    t.weight += shots / b;
  }
  return t;
}

std::vector<std::vector<int>> index_words(const ExperimentDesign& design,
                                          const GateSetModel& model) {
  std::vector<std::vector<int>> out;
  out.reserve(design.circuits.size());
  for (const auto& c : design.circuits) {
    std::vector<int> w;
    w.reserve(c.flat_word.size());
    for (const auto& label : c.flat_word) w.push_back(model.index_of(label));
    out.push_back(std::move(w));
  }
  return out;
}

struct Layout {
  int gates = 0;
  int gate_offset(int g) const { return g * kGateParams; }
  int rho_offset() const { return gates * kGateParams; }
  int effect_offset() const { return rho_offset() + kRhoParams; }
  int size() const { return effect_offset() + kEffectParams; }
};

// d p_k / d theta for a single circuit, written into the rows of `jac`.
void circuit_jacobian(const GateSetModel& model, const Layout& layout, const std::vector<int>& word,
                      const std::vector<Superket>& states, Eigen::Ref<Eigen::MatrixXd> jac) {
  jac.setZero();
  const Superket& final_state = states.back();
  for (int k = 0; k < kNumOutcomes; ++k) {
    // effects
    if (k < kNumOutcomes - 1) {
      jac.row(k).segment(layout.effect_offset() + k * kSuperDim, kSuperDim) =
          final_state.transpose();
    } else {
      for (int j = 0; j < kNumOutcomes - 1; ++j) {
        jac.row(k).segment(layout.effect_offset() + j * kSuperDim, kSuperDim) =
            -final_state.transpose();
      }
    }
    // gates, back to front
    Superket l = model.effects[k];
    for (std::size_t t = word.size(); t-- > 0;) {
      const int g = word[t];
      const Superket& before = states[t];
      const int off = layout.gate_offset(g);
      for (int r = 1; r < kSuperDim; ++r) {
        jac.row(k).segment(off + (r - 1) * kSuperDim, kSuperDim) += l(r) * before.transpose();
      }
      l = model.gates()[g].ptm.transpose() * l;
    }
    jac.row(k).segment(layout.rho_offset(), kRhoParams) = l.tail(kRhoParams).transpose();
  }
}

std::vector<Superket> forward_states(const GateSetModel& model, const std::vector<int>& word) {
  std::vector<Superket> states;
  states.reserve(word.size() + 1);
  states.push_back(model.rho0);
  for (int g : word) states.push_back(model.gates()[g].ptm * states.back());
  return states;
}

Probabilities predict(const GateSetModel& model, const Superket& state) {
  Probabilities p;
  for (int k = 0; k < kNumOutcomes; ++k) p[k] = model.effects[k].dot(state);
  return p;
}

struct Evaluation {
  double loglike = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd curvature;  // Gauss-Newton approximation of -Hessian
};

Evaluation evaluate(const GstDataset& data, const GateSetModel& model,
                    const std::vector<std::vector<int>>& words, bool derivatives,
                    double floor = kProbabilityFloor) {
  Layout layout{static_cast<int>(model.size())};
  const int n = layout.size();
  const std::size_t circuits = words.size();
  const std::size_t chunks = (circuits + kChunk - 1) / kChunk;

  std::vector<double> chunk_ll(chunks, 0.0);
  std::vector<Eigen::VectorXd> chunk_grad(derivatives ? chunks : 0);
  std::vector<Eigen::MatrixXd> chunk_jac(derivatives ? chunks : 0);

  parallel_for(chunks, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk;
    const std::size_t end = std::min(circuits, begin + kChunk);
    if (derivatives) {
      chunk_grad[ch] = Eigen::VectorXd::Zero(n);
      chunk_jac[ch].resize(static_cast<Eigen::Index>((end - begin) * kNumOutcomes), n);
    }
    Eigen::MatrixXd jac(kNumOutcomes, n);
    for (std::size_t c = begin; c < end; ++c) {
      const auto states = forward_states(model, words[c]);
      const Probabilities p = predict(model, states.back());
      const auto& counts = data.counts[c];
      const double shots = data.total(c);
      std::array<Term, kNumOutcomes> terms;
      chunk_ll[ch] += shots;
      for (int k = 0; k < kNumOutcomes; ++k) {
        terms[k] = outcome_term(counts[k], shots, p[k], floor);
        chunk_ll[ch] += terms[k].value;
      }
      if (!derivatives) continue;
      circuit_jacobian(model, layout, words[c], states, jac);
      for (int k = 0; k < kNumOutcomes; ++k) {
        if (terms[k].slope != 0.0) chunk_grad[ch] += terms[k].slope * jac.row(k).transpose();
        chunk_jac[ch].row(static_cast<Eigen::Index>((c - begin) * kNumOutcomes + k)) =
            std::sqrt(terms[k].weight) * jac.row(k);
      }
    }
  });

  Evaluation ev;
  for (double v : chunk_ll) ev.loglike += v;
  if (derivatives) {
    ev.gradient = Eigen::VectorXd::Zero(n);
    ev.curvature = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      ev.gradient += chunk_grad[ch];
      ev.curvature.selfadjointView<Eigen::Lower>().rankUpdate(chunk_jac[ch].transpose());
    }
    ev.curvature = ev.curvature.selfadjointView<Eigen::Lower>();
  }
  return ev;
}

void require_tp(const GateSetModel& model, const char* what) {
  for (const auto& g : model.gates()) {
    if ((g.ptm.row(0) - tp_row()).cwiseAbs().maxCoeff() > kTpTol) {
      throw EstimationError(std::string(what) + ": gate " + g.name + " is not trace preserving");
    }
  }
  if (model.povm_completeness_error() > kTpTol) {
    throw EstimationError(std::string(what) + ": effects do not sum to the identity");
  }
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, int* rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = kPinvCutoff * (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) {
      inv(i) = 1.0 / s(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Ptm project_cptp(const Ptm& r) {
  Ptm out = r;
  for (int it = 0; it < 100; ++it) {
    out = clip_to_cp(out);
    out.row(0) = tp_row();
    if (check_cptp(out).is_cp) break;
  }
  return out;
}

}  // namespace

GstDataset GstDataset::from_records(ExperimentDesign design,
                                    const std::vector<CountRecord>& records) {
  if (records.size() != design.circuits.size()) {
    throw EstimationError("expected " + std::to_string(design.circuits.size()) +
                          " count records, got " + std::to_string(records.size()));
  }
  GstDataset d;
  d.counts.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.circuit_id != static_cast<int>(i)) {
      throw EstimationError("count record " + std::to_string(i) + " has circuit id " +
                            std::to_string(r.circuit_id));
    }
    std::int64_t sum = 0;
    std::array<double, kNumOutcomes> c{};
    for (int k = 0; k < kNumOutcomes; ++k) {
      if (r.counts[k] < 0) throw EstimationError("negative count");
      sum += r.counts[k];
      c[k] = static_cast<double>(r.counts[k]);
    }
    if (sum != r.shots || sum <= 0) {
      throw EstimationError("counts of circuit " + std::to_string(i) + " do not sum to shots");
    }
    d.counts.push_back(c);
  }
  d.design = std::move(design);
  return d;
}

GstDataset GstDataset::from_probabilities(ExperimentDesign design,
                                          const std::vector<Probabilities>& probabilities,
                                          double shots) {
  if (probabilities.size() != design.circuits.size()) {
    throw EstimationError("one probability vector per circuit is required");
  }
  GstDataset d;
  d.design = std::move(design);
  for (const auto& p : probabilities) {
    std::array<double, kNumOutcomes> c{};
    for (int k = 0; k < kNumOutcomes; ++k) c[k] = shots * p[k];
    d.counts.push_back(c);
  }
  return d;
}

double GstDataset::total(std::size_t circuit) const {
  double s = 0.0;
  for (double v : counts[circuit]) s += v;
  return s;
}

Probabilities GstDataset::frequencies(std::size_t circuit) const {
  const double t = total(circuit);
  Probabilities f;
  for (int k = 0; k < kNumOutcomes; ++k) f[k] = counts[circuit][k] / t;
  return f;
}

GateSetModel lgst(const GstDataset& data, const FiducialSet& fids, const GateSetModel& target) {
  std::map<Word, std::size_t> index;
  for (std::size_t i = 0; i < data.design.circuits.size(); ++i) {
    index.emplace(data.design.circuits[i].flat_word, i);
  }
  auto freq = [&](const Word& w) {
    auto it = index.find(w);
    if (it == index.end()) {
      std::string s;
      for (const auto& l : w) s += (s.empty() ? "" : " ") + l;
      throw EstimationError("LGST circuit missing from dataset: [" + s + "]");
    }
    return data.frequencies(it->second);
  };
  auto concat = [](const Word& a, const Word& mid, const Word& b) {
    Word w = a;
    w.insert(w.end(), mid.begin(), mid.end());
    w.insert(w.end(), b.begin(), b.end());
    return w;
  };

  const auto n_prep = static_cast<Eigen::Index>(fids.prep.size());
  const auto n_rows = static_cast<Eigen::Index>(fids.meas.size()) * kNumOutcomes;
  auto observation = [&](const Word& mid) {
    Eigen::MatrixXd m(n_rows, n_prep);
    for (Eigen::Index i = 0; i < n_prep; ++i) {
      for (std::size_t j = 0; j < fids.meas.size(); ++j) {
        const Probabilities f = freq(concat(fids.prep[i], mid, fids.meas[j]));
        for (int k = 0; k < kNumOutcomes; ++k) m(j * kNumOutcomes + k, i) = f[k];
      }
    }
    return m;
  };

  const Eigen::MatrixXd spam = observation({});
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(spam, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > kPinvCutoff * s(0)) ++rank;
  }
  if (rank < kSuperDim) {
    throw EstimationError("LGST observation matrix has rank " + std::to_string(rank) +
                          ", need " + std::to_string(kSuperDim));
  }
  // Restrict the prep side to the dominant right singular vectors so the
  // inversion is square: spam * v = A (B v).
  const Eigen::MatrixXd v = svd.matrixV().leftCols(kSuperDim);
  const Eigen::MatrixXd reduced = spam * v;
  int reduced_rank = 0;
  const Eigen::MatrixXd reduced_pinv = pinv(reduced, &reduced_rank);
  if (reduced_rank < kSuperDim) throw EstimationError("LGST reduced matrix is rank deficient");

  // Target-side gauge anchor B_t v.
  const Ptm anchor = prep_design_matrix(fids.prep, target) * v;
  Eigen::FullPivLU<Ptm> anchor_lu(anchor);
  if (!anchor_lu.isInvertible()) throw EstimationError("target fiducial states are degenerate");
  const Ptm anchor_inv = anchor_lu.inverse();

  GateSetModel est = target;
  for (auto& g : est.gates()) {
    const Eigen::MatrixXd obs = observation({g.name}) * v;
    Ptm r = anchor * (reduced_pinv * obs) * anchor_inv;
    r.row(0) = tp_row();
    g.ptm = r;
  }

  // rho0 from the circuits that skip the prep fiducial.
  Eigen::VectorXd rho_obs(n_rows);
  for (std::size_t j = 0; j < fids.meas.size(); ++j) {
    const Probabilities f = freq(fids.meas[j]);
    for (int k = 0; k < kNumOutcomes; ++k) rho_obs(j * kNumOutcomes + k) = f[k];
  }
  est.rho0 = anchor * (reduced_pinv * rho_obs);
  est.rho0(0) = rho_trace_coordinate();

  // Effects from the circuits that skip the meas fiducial.
  Eigen::MatrixXd eff_obs(kNumOutcomes, n_prep);
  for (Eigen::Index i = 0; i < n_prep; ++i) {
    const Probabilities f = freq(fids.prep[i]);
    for (int k = 0; k < kNumOutcomes; ++k) eff_obs(k, i) = f[k];
  }
  const Eigen::MatrixXd eff = eff_obs * v * anchor_inv;
  Superket partial = Superket::Zero();
  for (int k = 0; k < kNumOutcomes - 1; ++k) {
    est.effects[k] = eff.row(k).transpose();
    partial += est.effects[k];
  }
  est.effects[kNumOutcomes - 1] = identity_superket() - partial;
  return est;
}

int parameter_count(const GateSetModel& model) {
  return Layout{static_cast<int>(model.size())}.size();
}

Eigen::VectorXd to_parameters(const GateSetModel& model) {
  Layout layout{static_cast<int>(model.size())};
  Eigen::VectorXd theta(layout.size());
  for (int g = 0; g < layout.gates; ++g) {
    const Ptm& r = model.gates()[g].ptm;
    for (int row = 1; row < kSuperDim; ++row) {
      theta.segment(layout.gate_offset(g) + (row - 1) * kSuperDim, kSuperDim) = r.row(row).transpose();
    }
  }
  theta.segment(layout.rho_offset(), kRhoParams) = model.rho0.tail(kRhoParams);
  for (int k = 0; k < kNumOutcomes - 1; ++k) {
    theta.segment(layout.effect_offset() + k * kSuperDim, kSuperDim) = model.effects[k];
  }
  return theta;
}

GateSetModel from_parameters(const Eigen::VectorXd& theta, const GateSetModel& like) {
  Layout layout{static_cast<int>(like.size())};
  if (theta.size() != layout.size()) throw EstimationError("parameter vector has wrong size");
  GateSetModel m = like;
  for (int g = 0; g < layout.gates; ++g) {
    Ptm& r = m.gates()[g].ptm;
    r.row(0) = tp_row();
    for (int row = 1; row < kSuperDim; ++row) {
      r.row(row) = theta.segment(layout.gate_offset(g) + (row - 1) * kSuperDim, kSuperDim).transpose();
    }
  }
  m.rho0(0) = rho_trace_coordinate();
  m.rho0.tail(kRhoParams) = theta.segment(layout.rho_offset(), kRhoParams);
  Superket partial = Superket::Zero();
  for (int k = 0; k < kNumOutcomes - 1; ++k) {
    m.effects[k] = theta.segment(layout.effect_offset() + k * kSuperDim, kSuperDim);
    partial += m.effects[k];
  }
  m.effects[kNumOutcomes - 1] = identity_superket() - partial;
  return m;
}

double loglikelihood(const GstDataset& data, const GateSetModel& model) {
  return evaluate(data, model, index_words(data.design, model), false).loglike;
}

Eigen::VectorXd loglikelihood_gradient(const GstDataset& data, const GateSetModel& model) {
  return evaluate(data, model, index_words(data.design, model), true).gradient;
}

namespace {

struct AscentResult {
  GateSetModel model;
  double loglike = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Fisher scoring from `start`; appends accepted log-likelihoods to trace.
AscentResult ascend(const GstDataset& data, const GateSetModel& start, const MleOptions& options,
                    double floor, std::vector<double>* trace) {
  const auto words = index_words(data.design, start);
  Eigen::VectorXd theta = to_parameters(start);
  AscentResult out;
  out.model = from_parameters(theta, start);

  Evaluation ev = evaluate(data, out.model, words, true, floor);
  if (!std::isfinite(ev.loglike)) throw EstimationError("log-likelihood of the seed is not finite");
  if (trace) trace->push_back(ev.loglike);
  double lambda = 1e-4;
  int stalls = 0;
  for (int it = 0; it < options.max_iter; ++it) {
    if (!ev.gradient.allFinite()) throw EstimationError("log-likelihood gradient is not finite");
    if (ev.gradient.norm() < options.grad_tol) {
      out.converged = true;
      break;
    }
    const Eigen::VectorXd diag = ev.curvature.diagonal();
    const double diag_scale = std::max(diag.maxCoeff(), 1.0);
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd a = ev.curvature;
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a(i, i) += lambda * std::max(diag(i), 1e-9 * diag_scale) + 1e-14 * diag_scale;
      }
      const Eigen::VectorXd step = a.ldlt().solve(ev.gradient);
      if (!step.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd trial_theta = theta + step;
      const GateSetModel trial = from_parameters(trial_theta, start);
      const double ll = evaluate(data, trial, words, false, floor).loglike;
      if (std::isfinite(ll) && ll > ev.loglike) {
        const double gain = ll - ev.loglike;
        theta = trial_theta;
        out.model = trial;
        ev = evaluate(data, out.model, words, true, floor);
        if (!std::isfinite(ev.loglike)) throw EstimationError("log-likelihood is not finite");
        if (trace) trace->push_back(ev.loglike);
        ++out.iterations;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        stalls = gain <= 1e-14 * std::abs(ev.loglike) ? stalls + 1 : 0;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted || stalls >= 3) {
      // No ascent direction left at working precision.
      out.converged = true;
      break;
    }
  }
  out.loglike = ev.loglike;
  return out;
}

GstDataset restrict_to(const GstDataset& data, const std::vector<std::size_t>& keep) {
  GstDataset sub;
  sub.design.fiducials = data.design.fiducials;
  sub.design.germs = data.design.germs;
  sub.design.lengths = data.design.lengths;
  for (std::size_t i : keep) {
    sub.design.circuits.push_back(data.design.circuits[i]);
    sub.counts.push_back(data.counts[i]);
  }
  return sub;
}

// How far below the floor the most offending prediction sits (0 if none).
double worst_floor_violation(const GstDataset& data, const GateSetModel& model) {
  const auto words = index_words(data.design, model);
  double worst = 0.0;
  for (std::size_t c = 0; c < words.size(); ++c) {
    const Probabilities p = predict(model, forward_states(model, words[c]).back());
    for (int k = 0; k < kNumOutcomes; ++k) {
      const double bound = data.counts[c][k] > 0.0 ? kProbabilityFloor : 0.0;
      if (p[k] < bound) worst = std::max(worst, bound - p[k]);
    }
  }
  return worst;
}

}  // namespace

GstEstimate mle_refine(const GstDataset& data, const GateSetModel& seed, const MleOptions& options) {
  require_tp(seed, "mle_refine seed");

  // Germ-power length of every circuit; earlier stages fit only the shorter
  // circuits so long sequences never see a seed that is far off.
  std::vector<int> lengths(data.design.circuits.size(), 0);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto& c = data.design.circuits[i];
    if (c.power > 0 && c.germ >= 0 && c.germ < static_cast<int>(data.design.germs.size())) {
      lengths[i] = c.power * static_cast<int>(data.design.germs[c.germ].word.size());
    }
  }
  std::vector<int> stages = lengths;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

  GateSetModel current = seed;
  GstEstimate out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const bool last = s + 1 == stages.size();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (lengths[i] <= stages[s]) keep.push_back(i);
    }
    const GstDataset stage_data = last ? data : restrict_to(data, keep);
    // Loosen the floor to the worst offending prediction, then tighten it
    // by 1e2 per pass; predictions already above the floor skip this.
    double floor = kProbabilityFloor;
    const double worst = worst_floor_violation(stage_data, current);
    if (worst > kProbabilityFloor) {
      floor = std::pow(10.0, std::ceil(std::log10(std::min(worst, kLoosestFloor))));
    }
    for (; floor > kProbabilityFloor * 1.5; floor *= 1e-2) {
      const AscentResult r = ascend(stage_data, current, options, floor, nullptr);
      current = r.model;
      out.iterations += r.iterations;
    }
    const AscentResult r =
        ascend(stage_data, current, options, kProbabilityFloor, last ? &out.trace : nullptr);
    current = r.model;
    out.iterations += r.iterations;
    if (last) {
      out.converged = r.converged;
      out.loglike = r.loglike;
    }
  }
  out.model = current;
  return out;
}

GateSetModel apply_gauge(const GateSetModel& model, const Ptm& gauge) {
  Eigen::FullPivLU<Ptm> lu(gauge);
  if (!lu.isInvertible()) throw GaugeError("gauge matrix is singular");
  const Ptm inv = lu.inverse();
  GateSetModel out = model;
  for (auto& g : out.gates()) g.ptm = gauge * g.ptm * inv;
  out.rho0 = gauge * model.rho0;
  for (int k = 0; k < kNumOutcomes; ++k) {
    out.effects[k] = (model.effects[k].transpose() * inv).transpose();
  }
  return out;
}

namespace {

Eigen::VectorXd gauge_residuals(const GateSetModel& est, const GateSetModel& target,
                                const Ptm& b, const Ptm& binv, const GaugeOptions& opt) {
  const int ng = static_cast<int>(est.size());
  Eigen::VectorXd r(ng * kSuperDim * kSuperDim + kSuperDim * (1 + kNumOutcomes));
  const double wg = std::sqrt(opt.gate_weight);
  const double ws = std::sqrt(opt.spam_weight);
  int o = 0;
  for (int g = 0; g < ng; ++g) {
    const Ptm x = b * est.gates()[g].ptm * binv - target.gates()[g].ptm;
    for (int i = 0; i < kSuperDim; ++i) {
      for (int j = 0; j < kSuperDim; ++j) r(o++) = wg * x(i, j);
    }
  }
  const Superket rho = b * est.rho0 - target.rho0;
  for (int i = 0; i < kSuperDim; ++i) r(o++) = ws * rho(i);
  for (int k = 0; k < kNumOutcomes; ++k) {
    const RowVec e = est.effects[k].transpose() * binv - target.effects[k].transpose();
    for (int i = 0; i < kSuperDim; ++i) r(o++) = ws * e(i);
  }
  return r;
}

Eigen::MatrixXd gauge_jacobian(const GateSetModel& est, const Ptm& b, const Ptm& binv,
                               const GaugeOptions& opt) {
  const int ng = static_cast<int>(est.size());
  const int rows = ng * kSuperDim * kSuperDim + kSuperDim * (1 + kNumOutcomes);
  Eigen::MatrixXd jac(rows, kGateParams);
  const double wg = std::sqrt(opt.gate_weight);
  const double ws = std::sqrt(opt.spam_weight);
  std::vector<Ptm> transformed(ng);
  for (int g = 0; g < ng; ++g) transformed[g] = b * est.gates()[g].ptm * binv;
  std::array<RowVec, kNumOutcomes> eff;
  for (int k = 0; k < kNumOutcomes; ++k) eff[k] = est.effects[k].transpose() * binv;

  for (int a = 1; a < kSuperDim; ++a) {
    for (int c = 0; c < kSuperDim; ++c) {
      const int col = (a - 1) * kSuperDim + c;
      // dB = E_ac, so d(B R B^-1) = D X - X D with D = E_ac B^-1
      Ptm d = Ptm::Zero();
      d.row(a) = binv.row(c);
      int o = 0;
      for (int g = 0; g < ng; ++g) {
        const Ptm dx = d * transformed[g] - transformed[g] * d;
        for (int i = 0; i < kSuperDim; ++i) {
          for (int j = 0; j < kSuperDim; ++j) jac(o++, col) = wg * dx(i, j);
        }
      }
      for (int i = 0; i < kSuperDim; ++i) jac(o++, col) = (i == a) ? ws * est.rho0(c) : 0.0;
      for (int k = 0; k < kNumOutcomes; ++k) {
        const RowVec de = -eff[k](a) * binv.row(c);
        for (int i = 0; i < kSuperDim; ++i) jac(o++, col) = ws * de(i);
      }
    }
  }
  return jac;
}

double condition_number(const Ptm& b) {
  Eigen::JacobiSVD<Ptm> svd(b);
  const auto& s = svd.singularValues();
  return s(kSuperDim - 1) > 0.0 ? s(0) / s(kSuperDim - 1) : std::numeric_limits<double>::infinity();
}

constexpr double kGaugeConditionLimit = 1e8;

}  // namespace

double gauge_objective(const GateSetModel& est, const GateSetModel& target, const Ptm& gauge,
                       const GaugeOptions& options) {
  Eigen::FullPivLU<Ptm> lu(gauge);
  if (!lu.isInvertible()) throw GaugeError("gauge matrix is singular");
  return gauge_residuals(est, target, gauge, lu.inverse(), options).squaredNorm();
}

GaugeResult gauge_optimize(const GateSetModel& est, const GateSetModel& target,
                           const GaugeOptions& options) {
  if (est.labels() != target.labels()) throw GaugeError("estimate and target gate sets differ");
  Ptm b = Ptm::Identity();
  Ptm binv = Ptm::Identity();
  Eigen::VectorXd r = gauge_residuals(est, target, b, binv, options);
  double obj = r.squaredNorm();
  double lambda = 1e-3;
  GaugeResult out;
  for (int it = 0; it < options.max_iter && obj > 0.0; ++it) {
    const Eigen::MatrixXd jac = gauge_jacobian(est, b, binv, options);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.norm() <= 1e-15 * std::max(1.0, obj)) break;
    bool accepted = false;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd step = -a.ldlt().solve(grad);
      Ptm trial = b;
      for (int row = 1; row < kSuperDim; ++row) {
        trial.row(row) += step.segment((row - 1) * kSuperDim, kSuperDim).transpose();
      }
      if (condition_number(trial) > kGaugeConditionLimit) {
        lambda *= 4.0;
        continue;
      }
      const Ptm trial_inv = trial.inverse();
      const Eigen::VectorXd trial_r = gauge_residuals(est, target, trial, trial_inv, options);
      const double trial_obj = trial_r.squaredNorm();
      if (trial_obj < obj) {
        b = trial;
        binv = trial_inv;
        r = trial_r;
        step_norm = step.norm();
        const double gain = obj - trial_obj;
        obj = trial_obj;
        lambda = std::max(lambda / 5.0, 1e-15);
        accepted = true;
        ++out.iterations;
        if (gain <= 1e-16 * std::max(obj, 1e-300) || step_norm < 1e-15) {
          it = options.max_iter;
        }
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }
  if (condition_number(b) > kGaugeConditionLimit) {
    throw GaugeError("gauge transformation became singular");
  }
  out.gauge = b;
  out.objective = obj;
  out.model = apply_gauge(est, b);
  return out;
}

GstEstimate estimate_gateset(const GstDataset& data, const GateSetModel& target,
                             const EstimationOptions& options) {
  const GateSetModel seed = lgst(data, data.design.fiducials, target);
  GstEstimate est;
  if (options.run_mle) {
    est = mle_refine(data, seed, options.mle);
  } else {
    est.model = seed;
    est.loglike = loglikelihood(data, seed);
    est.trace.push_back(est.loglike);
    est.converged = true;
  }
  GaugeResult fixed = gauge_optimize(est.model, target, options.gauge);
  est.model = std::move(fixed.model);
  est.gauge = fixed.gauge;
  if (options.cp_projection) {
    for (auto& g : est.model.gates()) g.ptm = project_cptp(g.ptm);
    est.loglike = loglikelihood(data, est.model);
  }
  return est;
}

std::vector<double> gate_infidelities(const GateSetModel& est, const GateSetModel& target) {
  std::vector<double> out;
  for (const auto& g : est.gates()) {
    out.push_back(average_gate_infidelity(g.ptm, target.gate(g.name).ptm));
  }
  return out;
}

BootstrapResult bootstrap_infidelities(const GstDataset& data, const GateSetModel& target,
                                       int resamples, std::uint64_t seed,
                                       const EstimationOptions& options) {
  if (resamples < 2) throw EstimationError("bootstrap needs at least two resamples");
  BootstrapResult out;
  out.labels = target.labels();
  out.samples.resize(resamples);
  for (int r = 0; r < resamples; ++r) {
    GstDataset resampled = data;
    for (std::size_t c = 0; c < data.counts.size(); ++c) {
      CounterRng rng{seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)};
      const auto shots = static_cast<std::int64_t>(std::llround(data.total(c)));
      const auto drawn = sample_multinomial(data.frequencies(c), shots, rng);
      for (int k = 0; k < kNumOutcomes; ++k) resampled.counts[c][k] = static_cast<double>(drawn[k]);
    }
    out.samples[r] = gate_infidelities(estimate_gateset(resampled, target, options).model, target);
  }
  const std::size_t ng = out.labels.size();
  out.mean.assign(ng, 0.0);
  out.std_error.assign(ng, 0.0);
  for (std::size_t g = 0; g < ng; ++g) {
    for (const auto& s : out.samples) out.mean[g] += s[g];
    out.mean[g] /= resamples;
    double var = 0.0;
    for (const auto& s : out.samples) var += (s[g] - out.mean[g]) * (s[g] - out.mean[g]);
    out.std_error[g] = std::sqrt(var / (resamples - 1));
  }
  return out;
}

}  // namespace qgst
