#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "qgst/errors.hpp"
#include "qgst/serialization.hpp"

using namespace qgst;

namespace {

const GateSetModel& native() {
  static const GateSetModel m = build_native_gateset();
  return m;
}

ExperimentDesign small_design() {
  FiducialSet f;
  f.prep = {{}, {"Gh"}, {"Gx01", "Gz1"}};
  f.meas = {{}, {"Gh"}};
  return build_design(f, {{{"Gh", "Gx01"}}}, {0, 1, 2}, native().labels());
}

std::filesystem::path scratch_dir() {
  auto p = std::filesystem::temp_directory_path() / "qgst_serialization_test";
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(GateSetJson, RoundTrip) {
  GateSetModel m = native();
  m.rho0 = 0.98 * ideal_rho0() + 0.02 * identity_superket() / 3.0;
  const GateSetModel back = gateset_from_json(Json::parse(gateset_to_json(m).dump()));
  ASSERT_EQ(back.labels(), m.labels());
  for (const auto& g : m.gates()) {
    const Gate& h = back.gate(g.name);
    EXPECT_LT((h.ideal_unitary - g.ideal_unitary).norm(), 1e-15) << g.name;
    EXPECT_LT((h.ptm - g.ptm).norm(), 1e-14) << g.name;
    EXPECT_EQ(h.axis.has_value(), g.axis.has_value());
    EXPECT_EQ(h.angle, g.angle);
  }
  EXPECT_LT((back.rho0 - m.rho0).norm(), 1e-16);
}

TEST(GateSetJson, BareUnitaryAndDefaults) {
  const Json j = Json::parse(R"({"gates": {"Gswap": [[[0,0],[1,0],[0,0]], [[1,0],[0,0],[0,0]], [[0,0],[0,0],[1,0]]]}})");
  const GateSetModel m = gateset_from_json(j);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_LT((m.rho0 - ideal_rho0()).norm(), 1e-15);
  EXPECT_NEAR(m.gate("Gswap").ideal_unitary(0, 1).real(), 1.0, 0.0);
}

TEST(GateSetJson, MalformedInputs) {
  EXPECT_THROW(gateset_from_json(Json::parse(R"({})")), FormatError);
  EXPECT_THROW(gateset_from_json(Json::parse(R"({"gates": {}})")), FormatError);
  // real entries are fine, anything else is not
  EXPECT_NO_THROW(gateset_from_json(Json::parse(R"({"gates": {"G": [[1,0,0],[0,1,0],[0,0,1]]}})")));
  EXPECT_THROW(gateset_from_json(Json::parse(R"({"gates": {"G": [[1,0,0],[0,1,0],[0,0,"1"]]}})")),
               FormatError);
  EXPECT_THROW(gateset_from_json(Json::parse(R"({"gates": {"G": [[[1,0],[0,0]]]}})")), FormatError);
  // non-unitary matrix
  EXPECT_THROW(
      gateset_from_json(Json::parse(
          R"({"gates": {"G": [[[2,0],[0,0],[0,0]], [[0,0],[1,0],[0,0]], [[0,0],[0,0],[1,0]]]}})")),
      Error);
}

TEST(DesignJson, RoundTrip) {
  const ExperimentDesign d = small_design();
  const ExperimentDesign back = design_from_json(Json::parse(design_to_json(d).dump()));
  EXPECT_EQ(back.fiducials.prep, d.fiducials.prep);
  EXPECT_EQ(back.fiducials.meas, d.fiducials.meas);
  EXPECT_EQ(back.lengths, d.lengths);
  ASSERT_EQ(back.circuits.size(), d.circuits.size());
  for (std::size_t i = 0; i < d.circuits.size(); ++i) {
    EXPECT_EQ(back.circuits[i].flat_word, d.circuits[i].flat_word);
    EXPECT_EQ(back.circuits[i].text(), d.circuits[i].text());
  }
}

TEST(DesignJson, InconsistentWordRejected) {
  Json j = design_to_json(small_design());
  j["circuits"][4]["word"] = Json::array({"Gh"});
  EXPECT_THROW(design_from_json(j), FormatError);
  Json k = design_to_json(small_design());
  k["circuits"][2]["id"] = 7;
  EXPECT_THROW(design_from_json(k), FormatError);
  Json t = design_to_json(small_design());
  t["circuits"][1]["text"] = "0:0^1";
  EXPECT_THROW(design_from_json(t), FormatError);
}

TEST(NoiseJson, RoundTripWithInfiniteTimes) {
  NoiseSpec s;
  s.depolarizing = 0.01;
  s.t1_01 = 100.0;
  s.overrotation["Gx01"] = 0.02;
  const Json j = noise_to_json(s);
  EXPECT_TRUE(j.at("t1_12").is_null());
  const NoiseSpec back = noise_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.depolarizing, 0.01);
  EXPECT_EQ(back.t1_01, 100.0);
  EXPECT_TRUE(std::isinf(back.t1_12));
  EXPECT_EQ(back.overrotation.at("Gx01"), 0.02);
}

TEST(NoiseJson, RejectsUnknownAndInvalid) {
  EXPECT_THROW(noise_from_json(Json::parse(R"({"depolarising": 0.1})")), FormatError);
  EXPECT_THROW(noise_from_json(Json::parse(R"({"depolarizing": "high"})")), FormatError);
  EXPECT_THROW(noise_from_json(Json::parse(R"({"depolarizing": 2.0})")), NoiseError);
  EXPECT_THROW(noise_from_json(Json::parse(R"([1, 2])")), FormatError);
  EXPECT_NO_THROW(noise_from_json(Json::parse(R"({})")));
}

TEST(CountsCsv, RoundTrip) {
  std::vector<CountRecord> r{{0, {5, 3, 2}, 10}, {1, {0, 0, 10}, 10}};
  const std::string text = counts_to_csv(r);
  EXPECT_EQ(text, "circuit_id,n0,n1,n2,shots\n0,5,3,2,10\n1,0,0,10,10\n");
  const auto back = counts_from_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].counts, r[1].counts);
  EXPECT_EQ(back[0].shots, 10);
}

TEST(CountsCsv, Malformed) {
  EXPECT_THROW(counts_from_csv(""), FormatError);
  EXPECT_THROW(counts_from_csv("id,a,b,c,shots\n"), FormatError);
  EXPECT_THROW(counts_from_csv("circuit_id,n0,n1,n2,shots\n0,1,2\n"), FormatError);
  EXPECT_THROW(counts_from_csv("circuit_id,n0,n1,n2,shots\n0,1,2,x,3\n"), FormatError);
}

TEST(PtmJson, RoundTripIsExact) {
  const Ptm r = native().gate("Gh").ptm;
  EXPECT_EQ(ptm_from_json(Json::parse(ptm_to_json(r).dump())), r);
  EXPECT_THROW(ptm_from_json(Json::parse("[[1,2]]")), FormatError);
}

TEST(EstimateJson, RoundTrip) {
  GstEstimate est;
  est.model = native();
  est.model.gate("Gh").ptm = depolarizing_ptm(0.01) * est.model.gate("Gh").ptm;
  est.loglike = -1234.5;
  est.iterations = 7;
  est.converged = true;
  const GstEstimate back = estimate_from_json(Json::parse(estimate_to_json(est).dump()), native());
  EXPECT_EQ(back.model.gate("Gh").ptm, est.model.gate("Gh").ptm);
  EXPECT_EQ(back.loglike, est.loglike);
  EXPECT_EQ(back.iterations, 7);
  EXPECT_TRUE(back.converged);

  Json j = estimate_to_json(est);
  j["gates"].erase("Gh");
  EXPECT_THROW(estimate_from_json(j, native()), FormatError);
}

TEST(Report, ContainsEveryGateAndBlock) {
  NoiseSpec s;
  s.depolarizing = 0.01;
  const GateSetModel noisy = apply_noise(native(), s);
  const Json rep = analysis_report(noisy, native());
  EXPECT_EQ(rep.at("basis"), kBasisTag);
  ASSERT_EQ(rep.at("gates").size(), native().size());
  const Json& g = rep.at("gates")[0];
  EXPECT_NEAR(g.at("infidelity").get<double>(), 2.0 * 0.01 / 3.0, 1e-12);
  EXPECT_EQ(g.at("coefficients").size(), 72u);
  EXPECT_NEAR(g.at("p_h").get<double>(), 0.0, 1e-9);
  const std::string csv = analysis_csv(noisy, native());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "gate,infidelity,p_h,residual,H,S,C,A");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Files, MissingFileNamesPath) {
  const auto p = scratch_dir() / "does_not_exist.json";
  try {
    read_json_file(p);
    FAIL() << "expected MissingFileError";
  } catch (const MissingFileError& e) {
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
}

TEST(Files, WriteCreatesDirectoriesAndReadsBack) {
  const auto p = scratch_dir() / "nested" / "x.json";
  std::filesystem::remove_all(scratch_dir() / "nested");
  write_json_file(p, Json{{"a", 1}});
  EXPECT_EQ(read_json_file(p).at("a"), 1);
  write_text_file(p, "{not json");
  EXPECT_THROW(read_json_file(p), FormatError);
}
