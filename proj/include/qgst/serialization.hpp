#pragma once

// File formats. JSON objects keep key order so output is byte-stable; PTMs
// are written as 9 rows of 9 reals, unitaries as rows of [re, im] pairs, and
// superkets as 9 reals in the normalized Gell-Mann basis.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgst/design.hpp"
#include "qgst/error_analysis.hpp"
#include "qgst/estimation.hpp"
#include "qgst/gateset.hpp"
#include "qgst/noise.hpp"
#include "qgst/rb.hpp"

namespace qgst {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kBasisTag = "gellmann-normalized";

// Throw MissingFileError naming the path when it cannot be opened, FormatError
// on malformed content.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// {"gates": {name: {"unitary": [[[re, im], ...], ...], "axis": ..., "angle": ...}},
//  "rho0": [9], "effects": [[9], [9], [9]]}. A gate may also be given as the
// bare unitary. rho0/effects default to the ideal ones.
Json gateset_to_json(const GateSetModel& model);
GateSetModel gateset_from_json(const Json& j);

Json design_to_json(const ExperimentDesign& design);
ExperimentDesign design_from_json(const Json& j);

// NoiseSpec field names; null (or absent) times mean infinite.
Json noise_to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const Json& j);

// Header circuit_id,n0,n1,n2,shots.
std::string counts_to_csv(const std::vector<CountRecord>& records);
std::vector<CountRecord> counts_from_csv(const std::string& text);

Json estimate_to_json(const GstEstimate& est);
// Gate PTMs, SPAM and metadata from the file; ideal unitaries from `target`.
GstEstimate estimate_from_json(const Json& j, const GateSetModel& target);

Json gate_analysis_to_json(const GateAnalysis& g);

// Per-gate report in model gate order.
Json analysis_report(const GateSetModel& est, const GateSetModel& target);
// gate,infidelity,p_h,residual,H,S,C,A
std::string analysis_csv(const GateSetModel& est, const GateSetModel& target);

std::string rb_points_csv(const RbResult& res);
Json rb_fit_to_json(const RbResult& res);

Json ptm_to_json(const Ptm& m);
Ptm ptm_from_json(const Json& j);

}  // namespace qgst
