#include "qgst/design.hpp"

#include <algorithm>
#include <set>

#include <Eigen/SVD>

#include "qgst/errors.hpp"

namespace qgst {

namespace {

constexpr double kScoreTieTol = 1e-9;

struct Score {
  int rank = -1;
  double sigma = 0.0;
};

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

Score score_at(const Eigen::MatrixXd& m, int rank_index) {
  const Eigen::VectorXd s = singular_values(m);
  Score sc;
  sc.rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTol * std::max(1.0, s(0))) ++sc.rank;
  }
  const int at = rank_index < 0 ? sc.rank : rank_index;
  sc.sigma = (at >= 1 && at <= s.size()) ? s(at - 1) : 0.0;
  return sc;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), kSuperDim);
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

// Greedy selection over row blocks. Each candidate contributes block(c) rows;
// prep columns are handled as rows of the transpose (same singular values).
std::vector<int> greedy_rows(const std::vector<Eigen::MatrixXd>& blocks, int extra,
                             const char* side) {
  std::vector<int> chosen;
  std::vector<bool> used(blocks.size(), false);
  Eigen::MatrixXd current(0, kSuperDim);
  int rank = 0;
  while (rank < kSuperDim) {
    int best = -1;
    Score best_score;
    for (std::size_t c = 0; c < blocks.size(); ++c) {
      if (used[c]) continue;
      const Score sc = score_at(stack(current, blocks[c]), -1);
      if (best < 0 || sc.rank > best_score.rank ||
          (sc.rank == best_score.rank && sc.sigma > best_score.sigma + kScoreTieTol)) {
        best = static_cast<int>(c);
        best_score = sc;
      }
    }
    if (best < 0 || best_score.rank <= rank) {
      throw DesignError(std::string(side) + " fiducials cannot reach rank " +
                        std::to_string(kSuperDim) + " (stuck at " + std::to_string(rank) + ")");
    }
    used[best] = true;
    chosen.push_back(best);
    current = stack(current, blocks[best]);
    rank = best_score.rank;
  }
  for (int e = 0; e < extra; ++e) {
    int best = -1;
    double best_sigma = -1.0;
    for (std::size_t c = 0; c < blocks.size(); ++c) {
      if (used[c]) continue;
      const double sigma = score_at(stack(current, blocks[c]), kSuperDim).sigma;
      if (best < 0 || sigma > best_sigma + kScoreTieTol) {
        best = static_cast<int>(c);
        best_sigma = sigma;
      }
    }
    if (best < 0) break;
    used[best] = true;
    chosen.push_back(best);
    current = stack(current, blocks[best]);
  }
  return chosen;
}

}  // namespace

std::string GstCircuit::text() const {
  return std::to_string(prep_fid) + ":" + std::to_string(germ) + "^" + std::to_string(power) +
         ":" + std::to_string(meas_fid);
}

Eigen::MatrixXd prep_design_matrix(const std::vector<Word>& prep, const GateSetModel& model) {
  Eigen::MatrixXd m(kSuperDim, static_cast<Eigen::Index>(prep.size()));
  for (std::size_t i = 0; i < prep.size(); ++i) m.col(i) = model.word_ptm(prep[i]) * model.rho0;
  return m;
}

Eigen::MatrixXd meas_design_matrix(const std::vector<Word>& meas, const GateSetModel& model) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(meas.size()) * kNumOutcomes, kSuperDim);
  for (std::size_t j = 0; j < meas.size(); ++j) {
    const Ptm r = model.word_ptm(meas[j]);
    for (int k = 0; k < kNumOutcomes; ++k) {
      m.row(j * kNumOutcomes + k) = model.effects[k].transpose() * r;
    }
  }
  return m;
}

int numerical_rank(const Eigen::MatrixXd& m, double tol) {
  const Eigen::VectorXd s = singular_values(m);
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol * std::max(1.0, s(0))) ++r;
  }
  return r;
}

FiducialSet select_fiducials_from(const std::vector<Word>& prep_candidates,
                                  const std::vector<Word>& meas_candidates,
                                  const GateSetModel& model, const FiducialOptions& options) {
  std::vector<Eigen::MatrixXd> prep_blocks;
  for (const auto& w : prep_candidates) {
    prep_blocks.push_back((model.word_ptm(w) * model.rho0).transpose());
  }
  std::vector<Eigen::MatrixXd> meas_blocks;
  for (const auto& w : meas_candidates) meas_blocks.push_back(meas_design_matrix({w}, model));

  const auto prep_idx =
      greedy_rows(prep_blocks, options.minimal ? 0 : options.extra_prep, "preparation");
  const auto meas_idx =
      greedy_rows(meas_blocks, options.minimal ? 0 : options.extra_meas, "measurement");

  FiducialSet fids;
  for (int i : prep_idx) fids.prep.push_back(prep_candidates[i]);
  for (int j : meas_idx) fids.meas.push_back(meas_candidates[j]);
  return fids;
}

std::vector<Word> fiducial_candidates(const CliffordGroup& group, int max_depth) {
  if (!group.is_compiled()) throw DesignError("Clifford group has not been compiled");
  std::vector<const CliffordElement*> picked;
  for (const auto& e : group.elements()) {
    if (static_cast<int>(e.native_circuit.size()) <= max_depth) picked.push_back(&e);
  }
  std::stable_sort(picked.begin(), picked.end(), [](const auto* a, const auto* b) {
    if (a->native_circuit.size() != b->native_circuit.size()) {
      return a->native_circuit.size() < b->native_circuit.size();
    }
    return a->index < b->index;
  });
  std::vector<Word> out;
  for (const auto* e : picked) out.push_back(e->native_circuit);
  return out;
}

FiducialSet select_fiducials(const CliffordGroup& group, const GateSetModel& model,
                             const FiducialOptions& options) {
  const auto candidates = fiducial_candidates(group, options.max_depth);
  return select_fiducials_from(candidates, candidates, model, options);
}

std::vector<Germ> default_germs(const GateSetModel& model) {
  std::vector<Germ> germs;
  for (const auto& label : model.labels()) germs.push_back({{label}});
  if (model.contains("Gh") && model.contains("Gx01")) germs.push_back({{"Gh", "Gx01"}});
  if (model.contains("Gh") && model.contains("Gx12")) germs.push_back({{"Gh", "Gx12"}});
  return germs;
}

std::vector<int> default_lengths() { return {0, 1, 2, 4, 8, 16}; }

std::vector<int> lengths_up_to(int max_length) {
  std::vector<int> out{0};
  for (int l = 1; l <= max_length; l *= 2) out.push_back(l);
  return out;
}

std::vector<Germ> effective_germs(const std::vector<Germ>& germs,
                                  const std::vector<GateLabel>& gate_labels) {
  std::vector<Germ> out;
  std::set<Word> present;
  for (const auto& label : gate_labels) {
    Word w{label};
    if (present.insert(w).second) out.push_back({w});
  }
  for (const auto& g : germs) {
    if (g.word.empty()) throw DesignError("germs must be non-empty words");
    if (present.insert(g.word).second) out.push_back(g);
  }
  return out;
}

ExperimentDesign build_design(const FiducialSet& fids, const std::vector<Germ>& germs,
                              const std::vector<int>& lengths,
                              const std::vector<GateLabel>& gate_labels) {
  if (germs.empty()) throw DesignError("germ list is empty");
  if (fids.prep.empty() || fids.meas.empty()) throw DesignError("fiducial set is empty");
  if (lengths.empty() || lengths.front() != 0) {
    throw DesignError("lengths must start at 0");
  }
  for (std::size_t i = 1; i < lengths.size(); ++i) {
    if (lengths[i] <= lengths[i - 1]) throw DesignError("lengths must be strictly increasing");
  }

  ExperimentDesign design;
  design.fiducials = fids;
  design.germs = effective_germs(germs, gate_labels);
  design.lengths = lengths;

  std::set<Word> seen;
  auto add = [&](int prep, int germ, int power, int meas) {
    GstCircuit c{prep, germ, power, meas, fids.prep[prep]};
    for (int p = 0; p < power; ++p) {
      const auto& w = design.germs[germ].word;
      c.flat_word.insert(c.flat_word.end(), w.begin(), w.end());
    }
    c.flat_word.insert(c.flat_word.end(), fids.meas[meas].begin(), fids.meas[meas].end());
    if (seen.insert(c.flat_word).second) design.circuits.push_back(std::move(c));
  };
  auto add_block = [&](int germ, int power) {
    for (std::size_t i = 0; i < fids.prep.size(); ++i) {
      for (std::size_t j = 0; j < fids.meas.size(); ++j) {
        add(static_cast<int>(i), germ, power, static_cast<int>(j));
      }
    }
  };

  add_block(0, 0);
  for (std::size_t g = 0; g < gate_labels.size(); ++g) add_block(static_cast<int>(g), 1);
  for (std::size_t g = 0; g < design.germs.size(); ++g) {
    const int glen = static_cast<int>(design.germs[g].word.size());
    for (int l : lengths) {
      const int power = l / glen;
      if (l == 0 || power == 0) continue;
      add_block(static_cast<int>(g), power);
    }
  }
  return design;
}

}  // namespace qgst
