// qgst: design, simulate, estimate, analyze and benchmark qutrit gate sets.
//
// Precedence for every setting: built-in default < GST_SEED (seed only) <
// command-line flag < --config file.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/SVD>

#include "qgst/clifford.hpp"
#include "qgst/design.hpp"
#include "qgst/error_analysis.hpp"
#include "qgst/errors.hpp"
#include "qgst/estimation.hpp"
#include "qgst/gateset.hpp"
#include "qgst/noise.hpp"
#include "qgst/parallel.hpp"
#include "qgst/rb.hpp"
#include "qgst/serialization.hpp"

namespace fs = std::filesystem;
using namespace qgst;

namespace {

struct RunConfig {
  std::string gateset_path;
  std::string design_path;
  std::string counts_path;
  std::string estimate_path;
  std::string noise_path;  // file, or "device" for the built-in coherence figures
  std::string output_dir = "qgst_out";
  std::int64_t shots = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<double> depolarizing;
  bool minimal_fiducials = true;
  int max_length = 16;
  int rb_sequences = 30;
  std::vector<int> rb_lengths = default_rb_lengths();
  int bootstrap = 0;
  bool cp_projection = false;
  std::optional<NoiseSpec> inline_noise;
};

void apply_config_file(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw FormatError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "gateset") cfg.gateset_path = v.get<std::string>();
    else if (key == "design") cfg.design_path = v.get<std::string>();
    else if (key == "counts") cfg.counts_path = v.get<std::string>();
    else if (key == "estimate") cfg.estimate_path = v.get<std::string>();
    else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
    else if (key == "shots") cfg.shots = v.get<std::int64_t>();
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = v.get<int>();
    else if (key == "depolarizing") cfg.depolarizing = v.is_null() ? std::nullopt : std::optional(v.get<double>());
    else if (key == "minimal_fiducials") cfg.minimal_fiducials = v.get<bool>();
    else if (key == "max_length") cfg.max_length = v.get<int>();
    else if (key == "rb_sequences") cfg.rb_sequences = v.get<int>();
    else if (key == "rb_lengths") cfg.rb_lengths = v.get<std::vector<int>>();
    else if (key == "bootstrap") cfg.bootstrap = v.get<int>();
    else if (key == "cp_projection") cfg.cp_projection = v.get<bool>();
    else if (key == "noise") {
      if (v.is_string()) {
        cfg.noise_path = v.get<std::string>();
        cfg.inline_noise.reset();
      } else {
        cfg.inline_noise = noise_from_json(v);
      }
    } else {
      throw FormatError("config file: unknown key '" + key + "'");
    }
  }
}

NoiseSpec resolve_noise(const RunConfig& cfg) {
  NoiseSpec spec;
  if (cfg.inline_noise) spec = *cfg.inline_noise;
  else if (cfg.noise_path == "device") spec = NoiseSpec::device_defaults();
  else if (!cfg.noise_path.empty()) spec = noise_from_json(read_json_file(cfg.noise_path));
  if (cfg.depolarizing) spec.depolarizing = *cfg.depolarizing;
  spec.validate();
  return spec;
}

// The output directory is left out so that runs differing only in where
// they write produce identical files.
Json config_to_json(const RunConfig& cfg, const std::string& command) {
  Json j;
  j["command"] = command;
  j["gateset"] = cfg.gateset_path;
  j["design"] = cfg.design_path;
  j["counts"] = cfg.counts_path;
  j["estimate"] = cfg.estimate_path;
  j["shots"] = cfg.shots;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["minimal_fiducials"] = cfg.minimal_fiducials;
  j["max_length"] = cfg.max_length;
  j["rb_sequences"] = cfg.rb_sequences;
  j["rb_lengths"] = cfg.rb_lengths;
  j["bootstrap"] = cfg.bootstrap;
  j["cp_projection"] = cfg.cp_projection;
  j["noise"] = noise_to_json(resolve_noise(cfg));
  return j;
}

GateSetModel load_target(const RunConfig& cfg) {
  if (cfg.gateset_path.empty()) return build_native_gateset();
  return gateset_from_json(read_json_file(cfg.gateset_path));
}

CliffordGroup compiled_group(const GateSetModel& target) {
  CliffordGroup group = standard_clifford_group();
  compile_group(group, target);
  return group;
}

fs::path out_path(const RunConfig& cfg, const char* name) { return fs::path(cfg.output_dir) / name; }

void require_path(const std::string& path, const char* flag) {
  if (path.empty()) throw FormatError(std::string(flag) + " is required");
}

double min_singular_value(const Eigen::MatrixXd& m) {
  const auto s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  return s.size() ? s(s.size() - 1) : 0.0;
}

ExperimentDesign make_design(const RunConfig& cfg, const GateSetModel& target,
                             const CliffordGroup& group) {
  if (cfg.max_length < 0) throw DesignError("max-length must be non-negative");
  FiducialOptions opts;
  opts.minimal = cfg.minimal_fiducials;
  const FiducialSet fids = select_fiducials(group, target, opts);
  return build_design(fids, default_germs(target), lengths_up_to(cfg.max_length), target.labels());
}

void print_design_summary(const ExperimentDesign& d, const GateSetModel& target) {
  std::cout << "prep fiducials: " << d.fiducials.prep.size() << "\n"
            << "meas fiducials: " << d.fiducials.meas.size() << "\n"
            << "germs: " << d.germs.size() << "\n"
            << "circuits: " << d.circuits.size() << "\n"
            << "prep sigma_min: " << min_singular_value(prep_design_matrix(d.fiducials.prep, target))
            << "\n"
            << "meas sigma_min: " << min_singular_value(meas_design_matrix(d.fiducials.meas, target))
            << "\n";
}

GstDataset load_dataset(const RunConfig& cfg) {
  require_path(cfg.design_path, "--design");
  require_path(cfg.counts_path, "--counts");
  ExperimentDesign design = design_from_json(read_json_file(cfg.design_path));
  return GstDataset::from_records(std::move(design), counts_from_csv(read_text_file(cfg.counts_path)));
}

EstimationOptions estimation_options(const RunConfig& cfg) {
  EstimationOptions o;
  o.cp_projection = cfg.cp_projection;
  return o;
}

Json with_bootstrap(Json report, const BootstrapResult& boot) {
  for (auto& g : report["gates"]) {
    for (std::size_t i = 0; i < boot.labels.size(); ++i) {
      if (g["gate"] == boot.labels[i]) g["infidelity_std_error"] = boot.std_error[i];
    }
  }
  return report;
}

int cmd_design(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  const CliffordGroup group = compiled_group(target);
  const ExperimentDesign d = make_design(cfg, target, group);
  write_json_file(out_path(cfg, "design.json"), design_to_json(d));
  print_design_summary(d, target);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  require_path(cfg.design_path, "--design");
  const ExperimentDesign design = design_from_json(read_json_file(cfg.design_path));
  const GateSetModel noisy = apply_noise(target, resolve_noise(cfg));
  const auto records = sample_counts(design, noisy, cfg.shots, cfg.seed);
  write_text_file(out_path(cfg, "counts.csv"), counts_to_csv(records));
  std::cout << "circuits: " << records.size() << ", shots: " << cfg.shots << "\n";
  return 0;
}

int cmd_estimate(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  const GstDataset data = load_dataset(cfg);
  const GstEstimate est = estimate_gateset(data, target, estimation_options(cfg));
  write_json_file(out_path(cfg, "estimate.json"), estimate_to_json(est));
  std::cout << "loglike: " << est.loglike << ", iterations: " << est.iterations
            << (est.converged ? "" : " (not converged)") << "\n";
  if (cfg.bootstrap > 0) {
    const auto boot = bootstrap_infidelities(data, target, cfg.bootstrap, cfg.seed, estimation_options(cfg));
    write_json_file(out_path(cfg, "report.json"), with_bootstrap(analysis_report(est.model, target), boot));
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  require_path(cfg.estimate_path, "--estimate");
  const GstEstimate est = estimate_from_json(read_json_file(cfg.estimate_path), target);
  const Json report = analysis_report(est.model, target);
  write_json_file(out_path(cfg, "report.json"), report);
  write_text_file(out_path(cfg, "report.csv"), analysis_csv(est.model, target));
  for (const auto& g : report["gates"]) {
    std::cout << g["gate"].get<std::string>() << "  infidelity " << g["infidelity"].get<double>() << "\n";
  }
  return 0;
}

RbResult run_rb_stage(const RunConfig& cfg, const GateSetModel& noisy, const CliffordGroup& group) {
  RbConfig rc;
  rc.lengths = cfg.rb_lengths;
  rc.sequences_per_length = cfg.rb_sequences;
  rc.shots = cfg.shots;
  rc.seed = cfg.seed;
  return run_rb(noisy, group, rc);
}

int cmd_rb(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  const CliffordGroup group = compiled_group(target);
  const GateSetModel noisy = apply_noise(target, resolve_noise(cfg));
  const RbResult res = run_rb_stage(cfg, noisy, group);
  write_text_file(out_path(cfg, "rb.csv"), rb_points_csv(res));
  write_json_file(out_path(cfg, "rb_fit.json"), rb_fit_to_json(res));
  std::cout << "p = " << res.fit.p << ", infidelity = " << res.infidelity << "\n";
  return 0;
}

int cmd_pipeline(const RunConfig& cfg) {
  const GateSetModel target = load_target(cfg);
  const CliffordGroup group = compiled_group(target);
  const ExperimentDesign design = make_design(cfg, target, group);
  write_json_file(out_path(cfg, "design.json"), design_to_json(design));

  const GateSetModel noisy = apply_noise(target, resolve_noise(cfg));
  GstDataset data;
  if (cfg.shots > 0) {
    const auto records = sample_counts(design, noisy, cfg.shots, cfg.seed);
    write_text_file(out_path(cfg, "counts.csv"), counts_to_csv(records));
    data = GstDataset::from_records(design, records);
  } else {
    // shots = 0: exact outcome probabilities
    data = GstDataset::from_probabilities(design, design_probabilities(design, noisy));
  }

  const GstEstimate est = estimate_gateset(data, target, estimation_options(cfg));
  write_json_file(out_path(cfg, "estimate.json"), estimate_to_json(est));

  Json report = analysis_report(est.model, target);
  if (cfg.bootstrap > 0) {
    report = with_bootstrap(std::move(report),
                            bootstrap_infidelities(data, target, cfg.bootstrap, cfg.seed, estimation_options(cfg)));
  }
  const RbResult rb = run_rb_stage(cfg, noisy, group);
  write_text_file(out_path(cfg, "rb.csv"), rb_points_csv(rb));
  write_json_file(out_path(cfg, "rb_fit.json"), rb_fit_to_json(rb));
  const double gst_clifford = mean_clifford_infidelity(est.model, target, group);
  report["rb"] = {{"p", rb.fit.p},
                  {"infidelity", rb.infidelity},
                  {"gst_mean_clifford_infidelity", gst_clifford},
                  {"relative_difference", gst_clifford > 0.0
                                              ? Json(std::abs(rb.infidelity - gst_clifford) / gst_clifford)
                                              : Json(nullptr)}};
  write_json_file(out_path(cfg, "report.json"), report);
  write_text_file(out_path(cfg, "report.csv"), analysis_csv(est.model, target));

  for (const auto& g : report["gates"]) {
    std::cout << g["gate"].get<std::string>() << "  infidelity " << g["infidelity"].get<double>() << "\n";
  }
  std::cout << "RB infidelity " << rb.infidelity << ", GST mean Clifford infidelity " << gst_clifford
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qutrit gate set tomography toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;
  double depolarizing = 0.0;
  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> depol_opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--gateset", cfg.gateset_path, "Gate-set JSON (default: built-in native set)");
    sub->add_option("--output-dir", cfg.output_dir, "Directory for outputs");
    seed_opts.push_back(sub->add_option("--seed", cfg.seed, "Seed for all randomness (overrides GST_SEED)"));
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--config", config_path, "JSON config; its keys override flags");
  };
  auto add_noise = [&](CLI::App* sub) {
    sub->add_option("--noise", cfg.noise_path, "Noise JSON, or 'device' for the built-in coherence times");
    depol_opts.push_back(sub->add_option("--depolarizing", depolarizing,
                                         "Depolarizing probability per gate (overrides noise file)"));
  };
  auto add_design_opts = [&](CLI::App* sub) {
    sub->add_option("--minimal", cfg.minimal_fiducials, "Minimal fiducial set (true/false)");
    sub->add_option("--max-length", cfg.max_length, "Largest germ length");
  };
  auto add_estimation_opts = [&](CLI::App* sub) {
    sub->add_option("--bootstrap", cfg.bootstrap, "Bootstrap resamples for infidelity error bars");
    sub->add_flag("--cp-projection", cfg.cp_projection, "Project estimated gates onto CPTP maps");
  };
  auto add_rb_opts = [&](CLI::App* sub) {
    sub->add_option("--rb-sequences", cfg.rb_sequences, "Random sequences per RB length");
    sub->add_option("--rb-lengths", cfg.rb_lengths, "RB sequence lengths");
  };

  auto* design = app.add_subcommand("design", "Select fiducials and write the experiment design");
  add_common(design);
  add_design_opts(design);

  auto* simulate = app.add_subcommand("simulate", "Sample counts for a design under a noise model");
  add_common(simulate);
  add_noise(simulate);
  simulate->add_option("--design", cfg.design_path, "Design JSON");
  simulate->add_option("--shots", cfg.shots, "Shots per circuit");

  auto* estimate = app.add_subcommand("estimate", "LGST + MLE + gauge optimization from counts");
  add_common(estimate);
  add_estimation_opts(estimate);
  estimate->add_option("--design", cfg.design_path, "Design JSON");
  estimate->add_option("--counts", cfg.counts_path, "Counts CSV");

  auto* analyze = app.add_subcommand("analyze", "Infidelities and error generators of an estimate");
  add_common(analyze);
  analyze->add_option("--estimate", cfg.estimate_path, "Estimate JSON");

  auto* rb = app.add_subcommand("rb", "Simulated Clifford randomized benchmarking");
  add_common(rb);
  add_noise(rb);
  add_rb_opts(rb);
  rb->add_option("--shots", cfg.shots, "Shots per sequence (0 = exact probabilities)");

  auto* pipeline = app.add_subcommand("pipeline", "design -> simulate -> estimate -> analyze -> rb");
  add_common(pipeline);
  add_noise(pipeline);
  add_design_opts(pipeline);
  add_estimation_opts(pipeline);
  add_rb_opts(pipeline);
  pipeline->add_option("--shots", cfg.shots, "Shots per circuit (0 = exact probabilities)");

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  auto given = [](const std::vector<CLI::Option*>& opts) {
    for (const auto* o : opts) {
      if (o->count() > 0) return true;
    }
    return false;
  };
  if (given(depol_opts)) cfg.depolarizing = depolarizing;
  try {
    if (!given(seed_opts)) {
      if (const char* env = std::getenv("GST_SEED")) {
        try {
          cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
          throw FormatError(std::string("GST_SEED is not an unsigned integer: ") + env);
        }
      }
    }
    if (!config_path.empty()) apply_config_file(cfg, read_json_file(config_path));
    set_num_threads(cfg.threads);
    write_json_file(out_path(cfg, "config.json"), config_to_json(cfg, command));

    if (command == "design") return cmd_design(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "estimate") return cmd_estimate(cfg);
    if (command == "analyze") return cmd_analyze(cfg);
    if (command == "rb") return cmd_rb(cfg);
    return cmd_pipeline(cfg);
  } catch (const MissingFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON value: " << e.what() << "\n";
    return 1;
  }
}
