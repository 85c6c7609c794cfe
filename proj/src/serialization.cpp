#include "qgst/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qgst/errors.hpp"

namespace qgst {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json complex_matrix_to_json(const Operator3& u) {
  Json rows = Json::array();
  for (int i = 0; i < kDim; ++i) {
    Json row = Json::array();
    for (int j = 0; j < kDim; ++j) row.push_back({u(i, j).real(), u(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Operator3 complex_matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kDim) throw FormatError(what + ": expected 3 rows");
  Operator3 u;
  for (int r = 0; r < kDim; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || row.size() != kDim) throw FormatError(what + ": expected 3 columns");
    for (int c = 0; c < kDim; ++c) {
      const Json& z = row[c];
      if (z.is_number()) {
        u(r, c) = Complex(z.get<double>(), 0.0);
      } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
        u(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
      } else {
        throw FormatError(what + ": entries must be [re, im]");
      }
    }
  }
  return u;
}

Json superket_to_json(const Superket& v) {
  Json a = Json::array();
  for (int i = 0; i < kSuperDim; ++i) a.push_back(v(i));
  return a;
}

Superket superket_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kSuperDim) throw FormatError(what + ": expected 9 reals");
  Superket v;
  for (int i = 0; i < kSuperDim; ++i) {
    if (!j[i].is_number()) throw FormatError(what + ": expected 9 reals");
    v(i) = j[i].get<double>();
  }
  return v;
}

Json words_to_json(const std::vector<Word>& words) {
  Json a = Json::array();
  for (const auto& w : words) a.push_back(w);
  return a;
}

std::vector<Word> words_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected a list of words");
  std::vector<Word> out;
  for (const auto& w : j) {
    if (!w.is_array()) throw FormatError(what + ": each word is a list of gate labels");
    Word word;
    for (const auto& l : w) {
      if (!l.is_string()) throw FormatError(what + ": gate labels must be strings");
      word.push_back(l.get<std::string>());
    }
    out.push_back(std::move(word));
  }
  return out;
}

const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(what + ": missing field '" + key + "'");
  }
  return j.at(key);
}

Json time_to_json(double t) { return std::isinf(t) ? Json(nullptr) : Json(t); }

double number_or(const Json& j, const char* key, double fallback, bool null_is_inf) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (v.is_null() && null_is_inf) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw FormatError(std::string("noise: field '") + key + "' must be a number");
  return v.get<double>();
}

void header(Json& j) {
  j["schema"] = kSchemaVersion;
  j["basis"] = kBasisTag;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(what + ": '" + s + "' is not an integer");
  }
  return v;
}

std::int64_t parse_int64(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(what + ": '" + s + "' is not an integer");
  }
  return v;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFileError("cannot write " + path.string());
  out << text;
}

Json gateset_to_json(const GateSetModel& model) {
  Json j;
  header(j);
  Json gates = Json::object();
  for (const auto& g : model.gates()) {
    Json entry;
    entry["unitary"] = complex_matrix_to_json(g.ideal_unitary);
    if (g.axis) {
      entry["axis"] = complex_matrix_to_json(*g.axis);
      entry["angle"] = g.angle;
    }
    gates[g.name] = entry;
  }
  j["gates"] = gates;
  j["rho0"] = superket_to_json(model.rho0);
  Json eff = Json::array();
  for (const auto& e : model.effects) eff.push_back(superket_to_json(e));
  j["effects"] = eff;
  return j;
}

GateSetModel gateset_from_json(const Json& j) {
  const Json& gates = require(j, "gates", "gate set");
  if (!gates.is_object() || gates.empty()) throw FormatError("gate set: 'gates' must be a non-empty object");
  GateSetModel m;
  for (const auto& [name, entry] : gates.items()) {
    const std::string what = "gate " + name;
    if (entry.is_array()) {
      m.add_gate(name, complex_matrix_from_json(entry, what));
      continue;
    }
    const Operator3 u = complex_matrix_from_json(require(entry, "unitary", what), what);
    std::optional<Operator3> axis;
    double angle = 0.0;
    if (entry.contains("axis")) {
      axis = complex_matrix_from_json(entry.at("axis"), what + " axis");
      if (!is_hermitian(*axis)) throw FormatError(what + ": axis must be hermitian");
      angle = entry.value("angle", 0.0);
    }
    m.add_gate(name, u, axis, angle);
  }
  if (j.contains("rho0")) m.rho0 = superket_from_json(j.at("rho0"), "rho0");
  if (j.contains("effects")) {
    const Json& e = j.at("effects");
    if (!e.is_array() || e.size() != kNumOutcomes) throw FormatError("effects: expected 3 superkets");
    for (int k = 0; k < kNumOutcomes; ++k) m.effects[k] = superket_from_json(e[k], "effects");
  }
  return m;
}

Json design_to_json(const ExperimentDesign& design) {
  Json j;
  header(j);
  j["fiducials"] = {{"prep", words_to_json(design.fiducials.prep)},
                    {"meas", words_to_json(design.fiducials.meas)}};
  Json germs = Json::array();
  for (const auto& g : design.germs) germs.push_back(g.word);
  j["germs"] = germs;
  j["lengths"] = design.lengths;
  Json circuits = Json::array();
  for (std::size_t i = 0; i < design.circuits.size(); ++i) {
    const auto& c = design.circuits[i];
    circuits.push_back({{"id", i}, {"text", c.text()}, {"word", c.flat_word}});
  }
  j["circuits"] = circuits;
  return j;
}

ExperimentDesign design_from_json(const Json& j) {
  ExperimentDesign d;
  const Json& fids = require(j, "fiducials", "design");
  d.fiducials.prep = words_from_json(require(fids, "prep", "design fiducials"), "prep fiducials");
  d.fiducials.meas = words_from_json(require(fids, "meas", "design fiducials"), "meas fiducials");
  for (auto& w : words_from_json(require(j, "germs", "design"), "germs")) d.germs.push_back({w});
  const Json& lengths = require(j, "lengths", "design");
  if (!lengths.is_array()) throw FormatError("design: 'lengths' must be a list");
  for (const auto& l : lengths) {
    if (!l.is_number_integer()) throw FormatError("design: lengths must be integers");
    d.lengths.push_back(l.get<int>());
  }
  const Json& circuits = require(j, "circuits", "design");
  if (!circuits.is_array()) throw FormatError("design: 'circuits' must be a list");
  for (std::size_t i = 0; i < circuits.size(); ++i) {
    const Json& c = circuits[i];
    const std::string what = "design circuit " + std::to_string(i);
    if (require(c, "id", what).get<std::size_t>() != i) throw FormatError(what + ": id must equal its position");
    const std::string text = require(c, "text", what).get<std::string>();
    const auto colon1 = text.find(':');
    const auto caret = text.find('^');
    const auto colon2 = text.rfind(':');
    if (colon1 == std::string::npos || caret == std::string::npos || colon2 == colon1 || caret < colon1 ||
        caret > colon2) {
      throw FormatError(what + ": malformed text '" + text + "'");
    }
    GstCircuit gc;
    gc.prep_fid = parse_int(text.substr(0, colon1), what);
    gc.germ = parse_int(text.substr(colon1 + 1, caret - colon1 - 1), what);
    gc.power = parse_int(text.substr(caret + 1, colon2 - caret - 1), what);
    gc.meas_fid = parse_int(text.substr(colon2 + 1), what);
    if (gc.prep_fid < 0 || gc.prep_fid >= static_cast<int>(d.fiducials.prep.size()) || gc.meas_fid < 0 ||
        gc.meas_fid >= static_cast<int>(d.fiducials.meas.size()) || gc.germ < 0 ||
        gc.germ >= static_cast<int>(d.germs.size()) || gc.power < 0) {
      throw FormatError(what + ": index out of range");
    }
    Word w = d.fiducials.prep[gc.prep_fid];
    for (int p = 0; p < gc.power; ++p) {
      const auto& g = d.germs[gc.germ].word;
      w.insert(w.end(), g.begin(), g.end());
    }
    const auto& meas = d.fiducials.meas[gc.meas_fid];
    w.insert(w.end(), meas.begin(), meas.end());
    if (c.contains("word") && words_from_json(Json::array({c.at("word")}), what)[0] != w) {
      throw FormatError(what + ": word does not match its text form");
    }
    gc.flat_word = std::move(w);
    d.circuits.push_back(std::move(gc));
  }
  return d;
}

Json noise_to_json(const NoiseSpec& spec) {
  Json j;
  j["depolarizing"] = spec.depolarizing;
  j["t1_01"] = time_to_json(spec.t1_01);
  j["t1_12"] = time_to_json(spec.t1_12);
  j["t2_01"] = time_to_json(spec.t2_01);
  j["t2_12"] = time_to_json(spec.t2_12);
  j["gate_time"] = spec.gate_time;
  Json over = Json::object();
  for (const auto& [label, angle] : spec.overrotation) over[label] = angle;
  j["overrotation"] = over;
  j["spam_error"] = spec.spam_error;
  return j;
}

NoiseSpec noise_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("noise spec must be a JSON object");
  static const char* known[] = {"depolarizing", "t1_01", "t1_12", "t2_01", "t2_12",
                                "gate_time", "overrotation", "spam_error"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw FormatError("noise spec: unknown field '" + key + "'");
  }
  NoiseSpec s;
  s.depolarizing = number_or(j, "depolarizing", s.depolarizing, false);
  s.t1_01 = number_or(j, "t1_01", s.t1_01, true);
  s.t1_12 = number_or(j, "t1_12", s.t1_12, true);
  s.t2_01 = number_or(j, "t2_01", s.t2_01, true);
  s.t2_12 = number_or(j, "t2_12", s.t2_12, true);
  s.gate_time = number_or(j, "gate_time", s.gate_time, false);
  s.spam_error = number_or(j, "spam_error", s.spam_error, false);
  if (j.contains("overrotation")) {
    const Json& o = j.at("overrotation");
    if (!o.is_object()) throw FormatError("noise spec: 'overrotation' must map gate names to angles");
    for (const auto& [label, angle] : o.items()) {
      if (!angle.is_number()) throw FormatError("noise spec: overrotation angles must be numbers");
      s.overrotation[label] = angle.get<double>();
    }
  }
  s.validate();
  return s;
}

std::string counts_to_csv(const std::vector<CountRecord>& records) {
  std::ostringstream os;
  os << "circuit_id,n0,n1,n2,shots\n";
  for (const auto& r : records) {
    os << r.circuit_id;
    for (auto n : r.counts) os << ',' << n;
    os << ',' << r.shots << '\n';
  }
  return os.str();
}

std::vector<CountRecord> counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("counts: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "circuit_id,n0,n1,n2,shots") throw FormatError("counts: unexpected header '" + line + "'");
  std::vector<CountRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    const std::string what = "counts line " + std::to_string(lineno);
    if (fields.size() != 5) throw FormatError(what + ": expected 5 fields");
    CountRecord r;
    r.circuit_id = parse_int(fields[0], what);
    for (int k = 0; k < kNumOutcomes; ++k) r.counts[k] = parse_int64(fields[1 + k], what);
    r.shots = parse_int64(fields[4], what);
    out.push_back(r);
  }
  return out;
}

Json ptm_to_json(const Ptm& m) {
  Json rows = Json::array();
  for (int i = 0; i < kSuperDim; ++i) {
    Json row = Json::array();
    for (int c = 0; c < kSuperDim; ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

Ptm ptm_from_json(const Json& j) {
  if (!j.is_array() || j.size() != kSuperDim) throw FormatError("PTM: expected 9 rows");
  Ptm m;
  for (int i = 0; i < kSuperDim; ++i) {
    if (!j[i].is_array() || j[i].size() != kSuperDim) throw FormatError("PTM: expected 9 columns");
    for (int c = 0; c < kSuperDim; ++c) {
      if (!j[i][c].is_number()) throw FormatError("PTM: entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

Json estimate_to_json(const GstEstimate& est) {
  Json j;
  header(j);
  Json gates = Json::object();
  for (const auto& g : est.model.gates()) gates[g.name] = ptm_to_json(g.ptm);
  j["gates"] = gates;
  j["rho0"] = superket_to_json(est.model.rho0);
  Json eff = Json::array();
  for (const auto& e : est.model.effects) eff.push_back(superket_to_json(e));
  j["effects"] = eff;
  j["loglike"] = est.loglike;
  j["iterations"] = est.iterations;
  j["converged"] = est.converged;
  j["gauge"] = ptm_to_json(est.gauge);
  return j;
}

GstEstimate estimate_from_json(const Json& j, const GateSetModel& target) {
  GstEstimate est;
  est.model = target;
  const Json& gates = require(j, "gates", "estimate");
  for (auto& g : est.model.gates()) {
    if (!gates.contains(g.name)) throw FormatError("estimate: missing gate " + g.name);
    g.ptm = ptm_from_json(gates.at(g.name));
  }
  if (gates.size() != est.model.size()) throw FormatError("estimate: gate set does not match the target");
  est.model.rho0 = superket_from_json(require(j, "rho0", "estimate"), "rho0");
  const Json& e = require(j, "effects", "estimate");
  if (!e.is_array() || e.size() != kNumOutcomes) throw FormatError("estimate: expected 3 effects");
  for (int k = 0; k < kNumOutcomes; ++k) est.model.effects[k] = superket_from_json(e[k], "effects");
  est.loglike = j.value("loglike", 0.0);
  est.iterations = j.value("iterations", 0);
  est.converged = j.value("converged", false);
  if (j.contains("gauge")) est.gauge = ptm_from_json(j.at("gauge"));
  return est;
}

Json gate_analysis_to_json(const GateAnalysis& g) {
  Json j;
  j["gate"] = g.name;
  j["infidelity"] = g.infidelity;
  j["ptm"] = ptm_to_json(g.ptm);
  j["error_generator"] = g.generator ? ptm_to_json(g.generator->matrix) : Json(nullptr);
  if (g.decomposition) {
    const auto& table = elementary_generator_table();
    const auto coeffs = g.decomposition->coefficients();
    Json c = Json::object();
    for (std::size_t k = 0; k < table.size(); ++k) c[table[k].label] = coeffs[k];
    j["coefficients"] = c;
    const auto norms = g.decomposition->block_norms();
    j["block_norms"] = {{"H", norms[0]}, {"S", norms[1]}, {"C", norms[2]}, {"A", norms[3]}};
    j["residual"] = g.decomposition->residual_norm;
  } else {
    j["coefficients"] = nullptr;
    j["block_norms"] = nullptr;
    j["residual"] = nullptr;
  }
  j["p_h"] = g.p_h ? Json(*g.p_h) : Json(nullptr);
  if (!g.note.empty()) j["note"] = g.note;
  return j;
}

Json analysis_report(const GateSetModel& est, const GateSetModel& target) {
  Json j;
  header(j);
  Json gates = Json::array();
  for (const auto& g : est.gates()) {
    gates.push_back(gate_analysis_to_json(analyze_gate(g.name, g.ptm, target.gate(g.name).ptm)));
  }
  j["gates"] = gates;
  return j;
}

std::string analysis_csv(const GateSetModel& est, const GateSetModel& target) {
  std::ostringstream os;
  os << "gate,infidelity,p_h,residual,H,S,C,A\n";
  for (const auto& g : est.gates()) {
    const GateAnalysis a = analyze_gate(g.name, g.ptm, target.gate(g.name).ptm);
    os << a.name << ',' << format_double(a.infidelity) << ',' << (a.p_h ? format_double(*a.p_h) : "");
    if (a.decomposition) {
      os << ',' << format_double(a.decomposition->residual_norm);
      for (double n : a.decomposition->block_norms()) os << ',' << format_double(n);
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
  return os.str();
}

std::string rb_points_csv(const RbResult& res) {
  std::ostringstream os;
  os << "length,seq_index,survival\n";
  for (const auto& p : res.points) {
    os << p.length << ',' << p.seq_index << ',' << format_double(p.survival) << '\n';
  }
  return os.str();
}

Json rb_fit_to_json(const RbResult& res) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["A"] = res.fit.a;
  j["B"] = res.fit.b;
  j["p"] = res.fit.p;
  j["infidelity"] = res.infidelity;
  j["std_errors"] = {{"A", res.fit.a_err}, {"B", res.fit.b_err}, {"p", res.fit.p_err},
                     {"infidelity", rb_infidelity(0.0) * res.fit.p_err}};
  Json surv = Json::array();
  for (const auto& s : res.survival) {
    surv.push_back({{"length", s.length}, {"mean", s.mean}, {"std_error", s.std_error}});
  }
  j["survival"] = surv;
  return j;
}

}  // namespace qgst
