#include <gtest/gtest.h>

#include <cmath>

#include "qgst/clifford.hpp"
#include "qgst/error_analysis.hpp"
#include "qgst/errors.hpp"
#include "qgst/noise.hpp"
#include "qgst/rb.hpp"

using namespace qgst;

namespace {

const GateSetModel& ideal() {
  static const GateSetModel m = build_native_gateset();
  return m;
}

const CliffordGroup& group() {
  static const CliffordGroup g = [] {
    CliffordGroup group = standard_clifford_group();
    compile_group(group, ideal());
    return group;
  }();
  return g;
}

GateSetModel depolarized(double p) {
  NoiseSpec s;
  s.depolarizing = p;
  return apply_noise(ideal(), s);
}

// Depolarizing noise commutes with every unitary, so a Clifford compiled into
// l native gates is depolarizing with parameter (1-p)^l and the twirl of the
// average is the average of those parameters.
double analytic_decay(double p) {
  double sum = 0.0;
  for (const auto& e : group().elements()) {
    sum += std::pow(1.0 - p, static_cast<double>(e.native_circuit.size()));
  }
  return sum / static_cast<double>(group().size());
}

}  // namespace

TEST(Sequences, InverseUndoesProduct) {
  for (int m : {1, 5, 40}) {
    for (int idx = 0; idx < 5; ++idx) {
      const RbSequence s = rb_sequence(group(), m, 123, idx);
      ASSERT_EQ(static_cast<int>(s.elements.size()), m);
      Operator3 u = Operator3::Identity();
      for (int g : s.elements) u = group()[g].unitary * u;
      u = group()[s.inverse].unitary * u;
      const Complex phase = u(0, 0);
      EXPECT_NEAR(std::abs(phase), 1.0, 1e-9);
      EXPECT_LT((u - phase * Operator3::Identity()).norm(), 1e-9);
      // the native words compose to the identity channel as well
      Word w;
      for (int g : s.elements) w.insert(w.end(), group()[g].native_circuit.begin(), group()[g].native_circuit.end());
      w.insert(w.end(), group()[s.inverse].native_circuit.begin(), group()[s.inverse].native_circuit.end());
      EXPECT_LT((ideal().word_ptm(w) - Ptm::Identity()).norm(), 1e-9);
    }
  }
}

TEST(Sequences, DeterministicPerSeedAndIndex) {
  const RbSequence a = rb_sequence(group(), 16, 5, 3);
  const RbSequence b = rb_sequence(group(), 16, 5, 3);
  const RbSequence c = rb_sequence(group(), 16, 5, 4);
  const RbSequence d = rb_sequence(group(), 16, 6, 3);
  EXPECT_EQ(a.elements, b.elements);
  EXPECT_NE(a.elements, c.elements);
  EXPECT_NE(a.elements, d.elements);
  const auto all = rb_sequences(group(), 16, 4, 5);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[3].elements, a.elements);
}

TEST(Fit, RecoversSyntheticDecay) {
  std::vector<RbSurvival> pts;
  for (int m : default_rb_lengths()) pts.push_back({m, 0.6 * std::pow(0.97, m) + 0.4, 0.01});
  const RbFit f = fit_rb_decay(pts);
  EXPECT_NEAR(f.p, 0.97, 1e-8);
  EXPECT_NEAR(f.a, 0.6, 1e-8);
  EXPECT_NEAR(f.b, 0.4, 1e-8);
}

TEST(Fit, FlatDataIsUnitDecay) {
  std::vector<RbSurvival> pts{{1, 1.0, 0.0}, {2, 1.0, 0.0}, {4, 1.0, 0.0}};
  const RbFit f = fit_rb_decay(pts);
  EXPECT_EQ(f.p, 1.0);
  EXPECT_NEAR(f.a + f.b, 1.0, 1e-15);
}

TEST(Fit, TooFewLengthsThrows) {
  EXPECT_THROW(fit_rb_decay({{1, 0.9, 0.01}, {2, 0.8, 0.01}}), FitError);
}

TEST(Config, Validation) {
  RbConfig c;
  EXPECT_THROW(c.validate(), FitError);
  c.lengths = {1, 4, 2};
  EXPECT_THROW(c.validate(), FitError);
  c.lengths = {0, 1, 2};
  EXPECT_THROW(c.validate(), FitError);
  c.lengths = {1, 2, 4};
  EXPECT_NO_THROW(c.validate());
  c.sequences_per_length = 0;
  EXPECT_THROW(c.validate(), FitError);
}

TEST(Run, UncompiledGroupThrows) {
  RbConfig c;
  c.lengths = default_rb_lengths();
  EXPECT_THROW(run_rb(ideal(), standard_clifford_group(), c), CompilationError);
}

TEST(Run, IdealModelHasUnitSurvival) {
  RbConfig c;
  c.lengths = default_rb_lengths();
  c.sequences_per_length = 5;
  c.shots = 0;
  const RbResult r = run_rb(ideal(), group(), c);
  for (const auto& pt : r.points) EXPECT_NEAR(pt.survival, 1.0, 1e-9);
  EXPECT_NEAR(r.fit.p, 1.0, 1e-9);
  EXPECT_NEAR(r.infidelity, 0.0, 1e-9);
}

TEST(Run, DepolarizingMatchesAnalyticDecay) {
  for (double p : {0.002, 0.01}) {
    RbConfig c;
    c.lengths = default_rb_lengths();
    c.shots = 0;
    c.seed = 17;
    const RbResult r = run_rb(depolarized(p), group(), c);
    const double want = rb_infidelity(analytic_decay(p));
    EXPECT_NEAR(r.infidelity, want, 0.10 * want) << "p = " << p;
    // and the mean Clifford infidelity is exactly the average of 2/3 (1 - (1-p)^l)
    EXPECT_NEAR(mean_clifford_infidelity(depolarized(p), ideal(), group()), want, 1e-12);
  }
}

TEST(Run, SampledDecayMatchesMeanDepthFormula) {
  // (2/3)(1 - (1-p)^lbar) with lbar the mean compiled depth, 10^4 shots
  const double p = 0.005;
  double lbar = 0.0;
  for (const auto& e : group().elements()) lbar += static_cast<double>(e.native_circuit.size());
  lbar /= static_cast<double>(group().size());
  RbConfig c;
  c.lengths = default_rb_lengths();
  c.seed = 29;
  const RbResult r = run_rb(depolarized(p), group(), c);
  const double want = 2.0 / 3.0 * (1.0 - std::pow(1.0 - p, lbar));
  EXPECT_NEAR(r.infidelity, want, 0.10 * want);
}

TEST(Run, AsymptoteIsOneThird) {
  RbConfig c;
  c.lengths = {1, 2, 4, 8, 16, 32, 64, 128, 200};
  c.shots = 0;
  c.seed = 3;
  const RbResult r = run_rb(depolarized(0.05), group(), c);
  EXPECT_NEAR(r.fit.b, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(r.survival.back().mean, 1.0 / 3.0, 0.01);
}

TEST(Run, SamplingErrorShrinksWithShots) {
  RbConfig c;
  c.lengths = default_rb_lengths();
  c.seed = 8;
  c.sequences_per_length = 10;
  const GateSetModel m = depolarized(0.01);
  c.shots = 0;
  const RbResult exact = run_rb(m, group(), c);
  auto rms = [&](std::int64_t shots) {
    c.shots = shots;
    const RbResult r = run_rb(m, group(), c);
    double s = 0.0;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      const double d = r.points[i].survival - exact.points[i].survival;
      s += d * d;
    }
    return std::sqrt(s / static_cast<double>(r.points.size()));
  };
  const double lo = rms(1000), hi = rms(100000);
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, lo / 3.0);
}

TEST(Infidelity, Formula) {
  EXPECT_DOUBLE_EQ(rb_infidelity(1.0), 0.0);
  EXPECT_NEAR(rb_infidelity(0.97), 2.0 * 0.03 / 3.0, 1e-15);
}
