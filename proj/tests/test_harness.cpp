#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "cellfree/harness.hpp"

using namespace cellfree;

namespace {

// small inline scenario that keeps the Monte Carlo cheap
ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.config.num_aps = 12;
  spec.config.antennas_per_ap = 2;
  spec.config.num_ues = 8;
  spec.config.area_side = 500.0;
  spec.config.pilot_length = 4;
  spec.config.ul_data = 196;
  spec.config.dl_data = 0;
  spec.mode = OperationMode::distributed;
  spec.scheme = "mr";
  spec.lsfd = LsfdMode::nopt;
  spec.num_setups = 3;
  spec.draws_per_setup = 40;
  spec.seed = 17;
  return spec;
}

}  // namespace

TEST_CASE("spec validation rejects inconsistent experiments") {
  ExperimentSpec spec = tiny_spec();
  spec.num_setups = 0;
  CHECK_THROWS_AS(run_experiment(spec), ConfigError);

  spec = tiny_spec();
  spec.scheme = "p-mmse";  // centralized-only scheme in distributed mode
  CHECK_THROWS_AS(validate(spec), ConfigError);

  spec = tiny_spec();
  spec.power = "fpa";  // downlink policy on the uplink
  CHECK_THROWS_AS(validate(spec), ConfigError);

  spec = tiny_spec();
  spec.link = LinkDirection::downlink;  // dl_data is zero
  CHECK_THROWS_AS(validate(spec), ConfigError);

  spec = tiny_spec();
  spec.mode = OperationMode::cellular;  // co-located reference is snr-only
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("same spec and seed give byte-identical output") {
  ExperimentSpec spec = tiny_spec();
  auto a = run_experiment(spec);
  auto b = run_experiment(spec);
  CHECK(to_csv(a.table) == to_csv(b.table));
  CHECK(a.table.size() == spec.num_setups * spec.config.num_ues);

  spec.seed = 18;
  auto c = run_experiment(spec);
  CHECK(to_csv(a.table) != to_csv(c.table));
}

TEST_CASE("parallel setups pool to the same samples as serial") {
  ExperimentSpec spec = tiny_spec();
  spec.num_setups = 5;
  RunOptions serial, parallel;
  parallel.threads = 4;
  auto a = run_experiment(spec, serial);
  auto b = run_experiment(spec, parallel);
  CHECK(a.table.samples == b.table.samples);
}

TEST_CASE("cdf table quantiles and csv layout") {
  CdfTable t;
  t.samples = Eigen::Vector3d(1.0, 2.0, 3.0);
  CHECK(t.cdf_value(0) == doctest::Approx(1.0 / 3));
  CHECK(t.cdf_value(2) == doctest::Approx(1.0));
  CHECK(t.quantile(0.05) == 1.0);
  CHECK(t.quantile(0.5) == 2.0);
  CHECK(t.quantile(1.0) == 3.0);

  std::string csv = to_csv(t);
  CHECK(csv.substr(0, csv.find('\n')) == "sample_index,se_bits_per_hz,cdf_value");
  CHECK(csv.find("0,1,0.33333333333333331") != std::string::npos);
  CHECK(csv.find("2,3,1") != std::string::npos);

  CdfTable empty;
  CHECK_THROWS(to_csv(empty));
  CHECK_THROWS(empty.quantile(0.5));
}

TEST_CASE("json output echoes the spec and round-trips the table") {
  ExperimentSpec spec = tiny_spec();
  auto res = run_experiment(spec);
  std::string text = to_json(res.table, spec);
  nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["spec"]["scheme"] == "mr");
  CHECK(j["spec"]["mode"] == "distributed");
  CHECK(j["seed"] == 17);
  CHECK(j["quantiles"].size() == 3);
  CHECK(j["quantiles"][0]["level"].get<double>() == 0.05);

  CdfTable back = cdf_from_json(text);
  CHECK(back.samples == res.table.samples);
}

TEST_CASE("spec serialization round-trips every field") {
  ExperimentSpec spec = tiny_spec();
  spec.scenario = "inline";
  spec.power = "fpc";
  spec.upsilon = -0.5;
  spec.out = "/tmp/x.csv";
  spec.format = "json";
  ExperimentSpec back = ExperimentSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK(back.config.num_aps == 12);
  CHECK(back.lsfd == LsfdMode::nopt);
  CHECK(back.upsilon == -0.5);

  // presets resolve by name, with inline overrides applied on top
  ExperimentSpec intro = ExperimentSpec::from_json(
      R"({"scenario": "intro-benchmark", "quantity": "snr",
          "config": {"num_ues": 2}})");
  CHECK(intro.config.num_aps == 64);
  CHECK(intro.config.num_ues == 2);
  CHECK(intro.quantity == Quantity::snr);
}

TEST_CASE("emit writes files and rejects bad paths") {
  ExperimentSpec spec = tiny_spec();
  spec.num_setups = 1;
  auto res = run_experiment(spec);
  std::string path =
      (std::filesystem::temp_directory_path() / "cellfree_emit_test.csv")
          .string();
  emit(res.table, spec, "csv", path);
  std::ifstream f(path);
  std::string first;
  std::getline(f, first);
  CHECK(first == "sample_index,se_bits_per_hz,cdf_value");
  std::remove(path.c_str());

  CHECK_THROWS_AS(emit(res.table, spec, "csv", "/nonexistent-dir/out.csv"),
                  ConfigError);
  CHECK_THROWS_AS(emit(res.table, spec, "xml", "/tmp/out.xml"), ConfigError);
}

TEST_CASE("snr benchmark orders the architectures per drop") {
  ExperimentSpec spec;
  spec.scenario = "intro-benchmark";
  spec.config = preset("intro-benchmark");
  spec.layout = ApLayout::grid;
  spec.quantity = Quantity::snr;
  spec.num_setups = 200;
  spec.draws_per_setup = 1;
  spec.seed = 3;

  spec.mode = OperationMode::centralized;
  auto cellfree = run_experiment(spec);
  spec.mode = OperationMode::small_cell;
  auto smallcell = run_experiment(spec);
  spec.mode = OperationMode::cellular;
  auto colocated = run_experiment(spec);

  REQUIRE(cellfree.table.size() == 200);
  // identical seeds deploy identical UEs, so the sorted samples compare
  // elementwise: joint MR reception beats best-AP selection everywhere
  for (int i = 0; i < 200; ++i)
    CHECK(cellfree.table.samples(i) >= smallcell.table.samples(i));
  // distributed APs beat the co-located array at the unlucky tail
  CHECK(cellfree.table.quantile(0.05) > colocated.table.quantile(0.05));
}

TEST_CASE("experiment report carries the scheme accounting") {
  ExperimentSpec spec = tiny_spec();
  spec.num_setups = 1;
  auto res = run_experiment(spec);
  CHECK(res.report.schemes.count("mmse") == 1);
  CHECK(res.report.schemes.at("mr").mult_per_ue > 0);
}
