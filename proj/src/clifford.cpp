#include "qgst/clifford.hpp"

#include <cmath>
#include <deque>
#include <numbers>

#include "qgst/errors.hpp"

namespace qgst {

namespace {

constexpr double kFingerprintScale = 1e8;
constexpr double kPhaseAnchorTol = 1e-6;

Operator3 shift_operator() {
  Operator3 x = Operator3::Zero();
  for (int j = 0; j < kDim; ++j) x((j + 1) % kDim, j) = 1.0;
  return x;
}

Operator3 clock_operator() {
  Operator3 z = Operator3::Zero();
  for (int j = 0; j < kDim; ++j) z(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * j / kDim);
  return z;
}

// |Tr(W^dagger M)| / d == 1 for some Weyl operator W.
bool is_weyl_multiple(const Operator3& m, double tol) {
  static const std::vector<Operator3> weyl = [] {
    std::vector<Operator3> w;
    const Operator3 x = shift_operator();
    const Operator3 z = clock_operator();
    Operator3 xa = Operator3::Identity();
    for (int a = 0; a < kDim; ++a) {
      Operator3 zb = Operator3::Identity();
      for (int b = 0; b < kDim; ++b) {
        w.push_back(xa * zb);
        zb = z * zb;
      }
      xa = x * xa;
    }
    return w;
  }();
  for (const auto& w : weyl) {
    if (std::abs(std::abs((w.adjoint() * m).trace()) / kDim - 1.0) <= tol) return true;
  }
  return false;
}

}  // namespace

std::size_t FingerprintHash::operator()(const Fingerprint& f) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : f) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

Operator3 canonical_phase(const Operator3& u) {
  for (int r = 0; r < kDim; ++r) {
    for (int c = 0; c < kDim; ++c) {
      const double mag = std::abs(u(r, c));
      if (mag > kPhaseAnchorTol) return u * (mag / u(r, c));
    }
  }
  return u;
}

Fingerprint phase_fingerprint(const Operator3& u) {
  const Operator3 v = canonical_phase(u);
  Fingerprint f;
  for (int r = 0; r < kDim; ++r) {
    for (int c = 0; c < kDim; ++c) {
      const int k = 2 * (r * kDim + c);
      f[k] = std::llround(v(r, c).real() * kFingerprintScale);
      f[k + 1] = std::llround(v(r, c).imag() * kFingerprintScale);
    }
  }
  return f;
}

bool is_clifford(const Operator3& u, double tol) {
  if (!is_unitary(u)) return false;
  return is_weyl_multiple(u * shift_operator() * u.adjoint(), tol) &&
         is_weyl_multiple(u * clock_operator() * u.adjoint(), tol);
}

CliffordGroup::CliffordGroup(std::vector<Operator3> unitaries) {
  const std::size_t n = unitaries.size();
  elements_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CliffordElement e;
    e.index = static_cast<int>(i);
    e.unitary = canonical_phase(unitaries[i]);
    if (!lookup_.emplace(phase_fingerprint(e.unitary), e.index).second) {
      throw NotAGroupError("duplicate element in group construction");
    }
    elements_.push_back(std::move(e));
  }
  table_.resize(n * n);
  inverse_.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      auto idx = find(elements_[a].unitary * elements_[b].unitary);
      if (!idx) throw NotAGroupError("set is not closed under multiplication");
      table_[a * n + b] = *idx;
    }
    auto inv = find(elements_[a].unitary.adjoint());
    if (!inv) throw NotAGroupError("set is not closed under inversion");
    inverse_[a] = *inv;
  }
}

std::optional<int> CliffordGroup::find(const Operator3& u) const {
  auto it = lookup_.find(phase_fingerprint(u));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void CliffordGroup::set_native_circuits(std::vector<Word> words) {
  if (words.size() != elements_.size()) {
    throw CompilationError("one native word per group element is required");
  }
  for (std::size_t i = 0; i < words.size(); ++i) elements_[i].native_circuit = std::move(words[i]);
  compiled_ = true;
}

CliffordGroup generate_clifford_group(std::span<const Operator3> generators, std::size_t bound) {
  for (const auto& g : generators) {
    if (!is_unitary(g)) throw NotAGroupError("generator is not unitary");
  }
  std::vector<Operator3> found{Operator3::Identity()};
  std::unordered_map<Fingerprint, int, FingerprintHash> seen{
      {phase_fingerprint(Operator3::Identity()), 0}};
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const Operator3 u = found[queue.front()];
    queue.pop_front();
    for (const auto& g : generators) {
      const Operator3 v = canonical_phase(g * u);
      if (seen.emplace(phase_fingerprint(v), static_cast<int>(found.size())).second) {
        if (found.size() >= bound) {
          throw NotAGroupError("closure exceeded " + std::to_string(bound) + " elements");
        }
        queue.push_back(static_cast<int>(found.size()));
        found.push_back(v);
      }
    }
  }
  return CliffordGroup(std::move(found));
}

CliffordGroup standard_clifford_group() {
  Operator3 s = Operator3::Identity();
  s(2, 2) = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const std::array<Operator3, 2> gens{qutrit_dft(), s};
  return generate_clifford_group(gens);
}

CliffordCompiler::CliffordCompiler(const GateSetModel& model, int max_depth,
                                   std::size_t state_cap)
    : max_depth_(max_depth), state_cap_(state_cap) {
  for (const auto& g : model.gates()) {
    labels_.push_back(g.name);
    gates_.push_back(g.ideal_unitary);
  }
  nodes_.push_back({-1, -1, Operator3::Identity()});
  seen_.emplace(phase_fingerprint(Operator3::Identity()), 0);
}

bool CliffordCompiler::expand_level() {
  if (depth_ >= max_depth_) return false;
  const std::size_t begin = frontier_begin_;
  const std::size_t end = nodes_.size();
  if (begin == end) return false;
  for (std::size_t n = begin; n < end; ++n) {
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      Operator3 v = gates_[g] * nodes_[n].unitary;
      if (seen_.emplace(phase_fingerprint(v), static_cast<int>(nodes_.size())).second) {
        if (nodes_.size() >= state_cap_) {
          throw CompilationError("compiler search exceeded its state budget");
        }
        nodes_.push_back({static_cast<int>(n), static_cast<int>(g), std::move(v)});
      }
    }
  }
  frontier_begin_ = end;
  ++depth_;
  return true;
}

Word CliffordCompiler::word_of(int node) const {
  Word w;
  for (int n = node; nodes_[n].parent >= 0; n = nodes_[n].parent) w.push_back(labels_[nodes_[n].gate]);
  return {w.rbegin(), w.rend()};
}

Word CliffordCompiler::compile(const Operator3& target) {
  const Fingerprint key = phase_fingerprint(target);
  while (true) {
    if (auto it = seen_.find(key); it != seen_.end()) return word_of(it->second);
    if (!expand_level()) {
      throw CompilationError("no native word of depth <= " + std::to_string(max_depth_) +
                             " reproduces the target");
    }
  }
}

Word compile_clifford(const CliffordElement& element, const GateSetModel& model, int max_depth) {
  CliffordCompiler compiler(model, max_depth);
  return compiler.compile(element.unitary);
}

void compile_group(CliffordGroup& group, const GateSetModel& model, int max_depth) {
  CliffordCompiler compiler(model, max_depth);
  std::vector<Word> words;
  words.reserve(group.size());
  for (const auto& e : group.elements()) words.push_back(compiler.compile(e.unitary));
  group.set_native_circuits(std::move(words));
}

}  // namespace qgst
