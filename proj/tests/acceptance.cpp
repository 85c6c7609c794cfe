// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "qgst/clifford.hpp"
#include "qgst/design.hpp"
#include "qgst/error_analysis.hpp"
#include "qgst/estimation.hpp"
#include "qgst/gateset.hpp"
#include "qgst/noise.hpp"
#include "qgst/rb.hpp"
#include "qgst/serialization.hpp"
#include "qgst/superop.hpp"

using namespace qgst;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Outcome&)> body;
};

const GateSetModel& target() {
  static const GateSetModel m = build_native_gateset();
  return m;
}

const CliffordGroup& compiled_group() {
  static const CliffordGroup g = [] {
    CliffordGroup group = standard_clifford_group();
    compile_group(group, target());
    return group;
  }();
  return g;
}

Operator3 random_hermitian(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Operator3 a;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) a(i, j) = Complex(n(rng), n(rng));
  return a + a.adjoint();
}

Operator3 random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Operator3 z;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) z(i, j) = Complex(n(rng), n(rng));
  return Eigen::HouseholderQR<Operator3>(z).householderQ();
}

void basis_suite(Outcome& out) {
  const auto& b = gellmann_basis();
  double ortho = 0.0;
  for (int i = 0; i < kSuperDim; ++i)
    for (int j = 0; j < kSuperDim; ++j)
      ortho = std::max(ortho, std::abs((b.elements[i].adjoint() * b.elements[j]).trace() -
                                       Complex(i == j ? 1.0 : 0.0)));
  out.require(ortho < 1e-12, "orthonormality");

  std::mt19937_64 rng(1);
  double complete = 0.0, inner = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Operator3 a = random_hermitian(rng), c = random_hermitian(rng);
    complete = std::max(complete, (devectorize(vectorize(a)) - a).norm());
    inner = std::max(inner, std::abs(vectorize(a).dot(vectorize(c)) - (a * c.adjoint()).trace().real()));
  }
  out.require(complete < 1e-12, "completeness");
  out.require(inner < 1e-12, "inner product");

  out.require((ptm_from_unitary(Operator3::Identity()) - Ptm::Identity()).norm() < 1e-12, "PTM identity");

  double homo = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Operator3 u = random_unitary(rng), v = random_unitary(rng);
    homo = std::max(homo, (ptm_from_unitary(v * u) - compose(ptm_from_unitary(u), ptm_from_unitary(v))).norm());
  }
  out.require(homo < 1e-12, "homomorphism");

  const Operator3 h = qutrit_dft();
  out.require((h * h * h * h - Operator3::Identity()).norm() < 1e-12, "H^4 = I");
  out.detail << "orthonormality " << ortho << ", homomorphism " << homo;
}

void clifford_suite(Outcome& out) {
  const CliffordGroup& g = compiled_group();
  const int n = static_cast<int>(g.size());
  out.require(n == 216, "216 elements");
  bool latin = true, inverses = true;
  std::vector<char> seen(n);
  for (int a = 0; a < n && latin; ++a) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int b = 0; b < n; ++b) seen[g.multiply(a, b)] = 1;
    for (char s : seen) latin &= s != 0;
    std::fill(seen.begin(), seen.end(), 0);
    for (int b = 0; b < n; ++b) seen[g.multiply(b, a)] = 1;
    for (char s : seen) latin &= s != 0;
    inverses &= g.multiply(a, g.inverse(a)) == g.identity() && g.multiply(g.inverse(a), a) == g.identity();
  }
  out.require(latin, "Latin square");
  out.require(inverses, "inverses");
  std::size_t deepest = 0;
  bool words_ok = true;
  for (const auto& e : g.elements()) {
    deepest = std::max(deepest, e.native_circuit.size());
    const Operator3 u = target().word_unitary(e.native_circuit);
    const Complex overlap = (u.adjoint() * e.unitary).trace() / 3.0;
    words_ok &= std::abs(std::abs(overlap) - 1.0) < 1e-9;
  }
  out.require(g.is_compiled() && deepest <= 12, "compile depth <= 12");
  out.require(words_ok, "compiled words reproduce elements");
  out.detail << n << " elements, max depth " << deepest;
}

void design_suite(Outcome& out) {
  const FiducialSet f = select_fiducials(compiled_group(), target());
  const int prep_rank = numerical_rank(prep_design_matrix(f.prep, target()));
  const int meas_rank = numerical_rank(meas_design_matrix(f.meas, target()));
  out.require(f.prep.size() == 9 && prep_rank == 9, "9 prep fiducials reach rank 9");
  out.require(f.meas.size() == 4 && meas_rank == 9, "4 measurement bases reach rank 9");
  // Every triple of candidate bases: the three effects of a basis sum to the
  // identity, so the rank can never exceed 3 * 2 + 1.
  const auto cands = fiducial_candidates(compiled_group(), kDefaultFiducialDepth);
  int best = 0;
  for (std::size_t a = 0; a < cands.size(); ++a)
    for (std::size_t b = a + 1; b < cands.size(); ++b)
      for (std::size_t c = b + 1; c < cands.size(); ++c)
        best = std::max(best, numerical_rank(meas_design_matrix({cands[a], cands[b], cands[c]}, target())));
  out.require(best <= 7, "three bases cap at rank 7");
  out.detail << "prep rank " << prep_rank << ", 4-basis rank " << meas_rank << ", best 3-basis rank " << best
             << " over " << cands.size() << " candidates";
}

GateSetModel planted_model(double depolarizing) {
  NoiseSpec s = NoiseSpec::device_defaults();
  s.depolarizing = depolarizing;
  return apply_noise(target(), s);
}

ExperimentDesign default_design() {
  const FiducialSet f = select_fiducials(compiled_group(), target());
  return build_design(f, default_germs(target()), default_lengths(), target().labels());
}

void estimator_suite(Outcome& out) {
  const GateSetModel truth = planted_model(0.01);
  const ExperimentDesign design = default_design();
  const auto want = gate_infidelities(truth, target());
  const auto labels = target().labels();

  const GstDataset exact = GstDataset::from_probabilities(design, design_probabilities(design, truth));
  const auto got = gate_infidelities(estimate_gateset(exact, target()).model, target());
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  out.require(worst <= 1e-6, "exact data within 1e-6");
  out.detail << "exact max error " << worst << "; ";

  const GstDataset shots = GstDataset::from_records(design, sample_counts(design, truth, 10000, 2024));
  const auto est = gate_infidelities(estimate_gateset(shots, target()).model, target());
  const BootstrapResult boot = bootstrap_infidelities(shots, target(), 20, 7);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double z = (est[i] - want[i]) / boot.std_error[i];
    out.detail << labels[i] << " z=" << z << " ";
    worst_z = std::max(worst_z, std::abs(z));
  }
  out.require(worst_z <= 3.0, "10^4 shots within 3 bootstrap SE");
}

void error_generator_suite(Outcome& out) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(generator_design_matrix());
  out.require(qr.rank() == 72, "design rank 72");

  const auto& table = elementary_generator_table();
  // 0.01 H_X01 + 0.002 S_Z1
  int h_x01 = -1, s_z1 = -1;
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].label == "H_X01") h_x01 = static_cast<int>(k);
    if (table[k].label == "S_Z1") s_z1 = static_cast<int>(k);
  }
  out.require(h_x01 >= 0 && s_z1 >= 0, "labels present");
  if (h_x01 < 0 || s_z1 < 0) return;
  const Ptm l = 0.01 * table[h_x01].matrix + 0.002 * table[s_z1].matrix;
  const auto coeffs = project_error_generator({l}).coefficients();
  double round_trip = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double expect = static_cast<int>(k) == h_x01 ? 0.01 : static_cast<int>(k) == s_z1 ? 0.002 : 0.0;
    round_trip = std::max(round_trip, std::abs(coeffs[k] - expect));
  }
  out.require(round_trip < 1e-12, "planted round trip");

  const double p = 0.01;
  const Ptm ideal = target().gate("Gh").ptm;
  Ptm expect = Ptm::Identity() * std::log(1.0 - p);
  expect(0, 0) = 0.0;
  const double depol = (error_generator(depolarizing_ptm(p) * ideal, ideal).matrix - expect).norm();
  out.require(depol < 1e-12, "depolarizing closed form");

  const Ptm h = table[h_x01].matrix, s = table[s_z1].matrix;
  const double ph_h = hamiltonian_power(project_error_generator({1e-3 * h}));
  const double ph_s = hamiltonian_power(project_error_generator({1e-3 * s}));
  const double ph_mix = hamiltonian_power(project_error_generator({1e-3 * (h / h.norm() + s / s.norm())}));
  out.require(std::abs(ph_h - 1.0) < 1e-12, "p_H = 1");
  out.require(std::abs(ph_s) < 1e-12, "p_H = 0");
  out.require(std::abs(ph_mix - 0.5) < 1e-10, "p_H = 0.5");
  out.detail << "round trip " << round_trip << ", depolarizing " << depol << ", p_H " << ph_h << "/" << ph_s << "/"
             << ph_mix;
}

void gst_rb_suite(Outcome& out) {
  const ExperimentDesign design = default_design();
  for (double p : {0.002, 0.005, 0.01}) {
    NoiseSpec spec;
    spec.depolarizing = p;
    const GateSetModel noisy = apply_noise(target(), spec);
    const GstDataset data = GstDataset::from_records(design, sample_counts(design, noisy, 10000, 11));
    const GstEstimate est = estimate_gateset(data, target());
    const double gst = mean_clifford_infidelity(est.model, target(), compiled_group());
    RbConfig rc;
    rc.lengths = default_rb_lengths();
    rc.seed = 11;
    const RbResult rb = run_rb(noisy, compiled_group(), rc);
    const double rel = std::abs(rb.infidelity - gst) / gst;
    out.detail << "p=" << p << ": RB " << rb.infidelity << " GST " << gst << " rel " << rel << "; ";
    out.require(rel <= 0.15, "agreement within 15% at p=" + std::to_string(p));
  }
}

void reproducibility_suite(Outcome& out) {
  const fs::path root = fs::temp_directory_path() / "qgst_acceptance_repro";
  fs::remove_all(root);
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    const std::string cmd = std::string("\"") + QGST_CLI_PATH + "\" pipeline --seed 42 --output-dir \"" +
                            d.string() + "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
    fs::create_directories(root);
    out.require(std::system(cmd.c_str()) == 0, "pipeline run");
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const fs::path other = dirs[1] / entry.path().filename();
    const bool same = fs::exists(other) && read_text_file(entry.path()) == read_text_file(other);
    out.require(same, entry.path().filename().string() + " identical");
    ++compared;
  }
  out.require(compared >= 6, "all outputs written");
  out.detail << compared << " files compared";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"basis-algebra", 5, basis_suite},
      {"clifford", 60, clifford_suite},
      {"minimal-design", 10, design_suite},
      {"estimator-self-consistency", 600, estimator_suite},
      {"error-generator", 10, error_generator_suite},
      {"gst-rb-agreement", 600, gst_rb_suite},
      {"reproducibility", 600, reproducibility_suite},
  };
  bool all = true;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      out.ok = false;
      out.detail << "[over budget " << c.budget_s << " s]";
    }
    all &= out.ok;
    std::cout << (out.ok ? "PASS" : "FAIL") << " " << c.name << " (" << secs << " s) " << out.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
