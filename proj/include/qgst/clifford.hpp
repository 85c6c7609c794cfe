#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "qgst/gateset.hpp"

namespace qgst {

// Phase-blind identity of a unitary: the matrix rescaled so its first
// non-negligible entry (row-major) is real positive, rounded to a 1e-8 grid.
using Fingerprint = std::array<std::int64_t, 2 * kDim * kDim>;

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const noexcept;
};

Operator3 canonical_phase(const Operator3& u);
Fingerprint phase_fingerprint(const Operator3& u);

// True when U maps the Weyl operators X (shift) and Z (clock) to Weyl
// operators up to phase, i.e. U normalizes the qutrit Pauli group.
bool is_clifford(const Operator3& u, double tol = 1e-9);

struct CliffordElement {
  int index = 0;
  Operator3 unitary;  // canonical phase
  Word native_circuit;
};

class CliffordGroup {
 public:
  CliffordGroup() = default;
  CliffordGroup(std::vector<Operator3> unitaries);

  std::size_t size() const { return elements_.size(); }
  const std::vector<CliffordElement>& elements() const { return elements_; }
  const CliffordElement& operator[](int i) const { return elements_[i]; }

  int identity() const { return 0; }
  // Index of U_a U_b.
  int multiply(int a, int b) const { return table_[a * size() + b]; }
  int inverse(int a) const { return inverse_[a]; }
  std::optional<int> find(const Operator3& u) const;

  bool is_compiled() const { return compiled_; }
  void set_native_circuits(std::vector<Word> words);

 private:
  std::vector<CliffordElement> elements_;
  std::vector<int> table_;
  std::vector<int> inverse_;
  std::unordered_map<Fingerprint, int, FingerprintHash> lookup_;
  bool compiled_ = false;
};

inline constexpr std::size_t kGroupSafetyBound = 10000;

// Breadth-first closure of the generators under left multiplication,
// deduplicated up to global phase. Identity is element 0.
// Throws NotAGroupError past `bound` elements or for non-unitary generators.
CliffordGroup generate_clifford_group(std::span<const Operator3> generators,
                                      std::size_t bound = kGroupSafetyBound);

// The 216-element group generated by the DFT and diag(1, 1, w).
CliffordGroup standard_clifford_group();

inline constexpr int kDefaultCompileDepth = 12;

// Shortest-word search over the native gates of a model. States reached by
// words are deduplicated by phase fingerprint and explored level by level,
// so the first hit is a shortest word; the explored tree is kept between
// calls.
class CliffordCompiler {
 public:
  explicit CliffordCompiler(const GateSetModel& model, int max_depth = kDefaultCompileDepth,
                            std::size_t state_cap = 4'000'000);

  // Throws CompilationError when no word within max_depth reproduces the target.
  Word compile(const Operator3& target);

  int explored_depth() const { return depth_; }
  std::size_t explored_states() const { return nodes_.size(); }

 private:
  struct Node {
    int parent;
    int gate;
    Operator3 unitary;
  };

  bool expand_level();
  Word word_of(int node) const;

  std::vector<GateLabel> labels_;
  std::vector<Operator3> gates_;
  int max_depth_;
  std::size_t state_cap_;
  std::vector<Node> nodes_;
  std::size_t frontier_begin_ = 0;
  int depth_ = 0;
  std::unordered_map<Fingerprint, int, FingerprintHash> seen_;
};

Word compile_clifford(const CliffordElement& element, const GateSetModel& model,
                      int max_depth = kDefaultCompileDepth);

// Compiles every element with one shared search and stores the words in the group.
void compile_group(CliffordGroup& group, const GateSetModel& model,
                   int max_depth = kDefaultCompileDepth);

}  // namespace qgst
