#pragma once

#include <string>
#include <vector>

#include "qgst/clifford.hpp"
#include "qgst/gateset.hpp"

namespace qgst {

struct FiducialSet {
  std::vector<Word> prep;  // applied after rho0
  std::vector<Word> meas;  // applied before the computational POVM
};

struct Germ {
  Word word;
};

// flat_word = prep fiducial, germ repeated `power` times, meas fiducial.
struct GstCircuit {
  int prep_fid = 0;
  int germ = 0;
  int power = 0;
  int meas_fid = 0;
  Word flat_word;

  // "prep:germ^power:meas"
  std::string text() const;
};

struct ExperimentDesign {
  FiducialSet fiducials;
  std::vector<Germ> germs;
  std::vector<int> lengths;
  std::vector<GstCircuit> circuits;
};

inline constexpr int kMinimalPrepCount = kSuperDim;
inline constexpr int kMinimalMeasCount = (kSuperDim - 1) / (kNumOutcomes - 1);
inline constexpr int kDefaultFiducialDepth = 4;
inline constexpr double kRankTol = 1e-9;

struct FiducialOptions {
  bool minimal = true;
  int max_depth = kDefaultFiducialDepth;
  // Extra fiducials appended after full rank when minimal == false.
  int extra_prep = 3;
  int extra_meas = 2;
};

// Columns R_w rho0 for each prep word.
Eigen::MatrixXd prep_design_matrix(const std::vector<Word>& prep, const GateSetModel& model);
// Rows E_k^T R_w for each meas word and outcome k (word-major).
Eigen::MatrixXd meas_design_matrix(const std::vector<Word>& meas, const GateSetModel& model);

int numerical_rank(const Eigen::MatrixXd& m, double tol = kRankTol);

// Greedy max-min-singular-value choice among explicit candidate words, which
// are taken to be ordered by (depth, group index) already. Throws DesignError
// if either side cannot reach rank 9.
FiducialSet select_fiducials_from(const std::vector<Word>& prep_candidates,
                                  const std::vector<Word>& meas_candidates,
                                  const GateSetModel& model, const FiducialOptions& options = {});

// Candidates are the compiled group elements of depth <= options.max_depth.
// The group must already be compiled against the model.
FiducialSet select_fiducials(const CliffordGroup& group, const GateSetModel& model,
                             const FiducialOptions& options = {});

// Compiled Clifford words up to max_depth, ordered by (depth, group index).
std::vector<Word> fiducial_candidates(const CliffordGroup& group, int max_depth);

// The six single gates plus (Gh, Gx01) and (Gh, Gx12).
std::vector<Germ> default_germs(const GateSetModel& model);
std::vector<int> default_lengths();

// Lengths up to max_length taken from the default schedule, always including 0.
std::vector<int> lengths_up_to(int max_length);

// Germ list used by a design: one single-gate germ per model gate first, then
// the requested germs not already present.
std::vector<Germ> effective_germs(const std::vector<Germ>& germs,
                                  const std::vector<GateLabel>& gate_labels);

// LGST block (all fiducial pairs, then every single-gate sandwich) followed
// by each germ at power floor(L / |germ|) for every L > 0, deduplicated by
// flat word. Throws DesignError on an empty germ list or malformed lengths.
ExperimentDesign build_design(const FiducialSet& fids, const std::vector<Germ>& germs,
                              const std::vector<int>& lengths,
                              const std::vector<GateLabel>& gate_labels);

}  // namespace qgst
