#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lmc/pipeline.hpp"
#include "lmc/report_io.hpp"

using namespace lmc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

BarrierCurve small_curve() {
  Rng rng(3);
  const Dataset all = synth_blobs(rng, 192, 6, 3, 5.0);
  std::vector<std::size_t> head(128), tail(64);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), std::size_t{128});
  const Dataset train_set = all.subset(head, "train");
  const Dataset test_set = all.subset(tail, "test");
  Arch arch;
  arch.layer_dims = {6, 8, 3};
  Rng ra(1), rb(2);
  const ParamSet a = init(arch, ra);
  const ParamSet b = init(arch, rb);
  BarrierConfig cfg;
  cfg.grid = 5;
  return barrier_curve(a, b, train_set, test_set, cfg);
}

}  // namespace

TEST_CASE("format_double round-trips bits") {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::exp(rng.uniform(-300.0, 300.0)) *
                     (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double back = std::strtod(format_double(x).c_str(), nullptr);
    CHECK(back == x);
  }
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("barrier csv carries the documented columns and parses back") {
  const BarrierCurve curve = small_curve();
  const std::string csv = barrier_csv(curve);

  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "lambda,train_loss,test_loss,test_acc,calibrated_test_loss,beta");

  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double lambda, train_loss, test_loss, test_acc, cal, beta;
    ls >> lambda >> train_loss >> test_loss >> test_acc >> cal >> beta;
    REQUIRE(!ls.fail());
    CHECK(lambda == curve.points[rows].lambda);
    CHECK(train_loss == curve.points[rows].train_loss);
    CHECK(test_acc == curve.points[rows].test_acc);
    CHECK(beta == curve.points[rows].inverse_temperature);
    ++rows;
  }
  CHECK(rows == curve.points.size());
}

TEST_CASE("barrier json validates and round-trips through nlohmann") {
  const BarrierCurve curve = small_curve();
  const std::string text = barrier_json(curve, "none", {});
  const json j = json::parse(text);
  CHECK(j["schema"] == "lmc-barrier");
  CHECK(j["version"] == 1);
  CHECK(j["points"].size() == curve.points.size());
  CHECK(j["barrier_raw_test"].get<double>() == curve.barrier_raw_test);
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    CHECK(j["points"][i]["lambda"].get<double>() == curve.points[i].lambda);
    CHECK(j["points"][i]["nll_after_cal"].get<double>() ==
          curve.fits[i].nll_after_cal);
  }
}

TEST_CASE("diagnostics json has per-layer blocks at the right indices") {
  Rng rng(5);
  const Dataset all = synth_blobs(rng, 128, 6, 3, 5.0);
  Arch arch;
  arch.layer_dims = {6, 8, 8, 3};
  Rng ra(1), rb(2);
  const DiagnosticsReport r =
      diagnostics_report(init(arch, ra), init(arch, rb), 0.5, all);
  const json j = json::parse(diagnostics_json(r));
  CHECK(j["schema"] == "lmc-diagnostics");
  REQUIRE(j["layers"].size() == 3);
  // layer 1 has no cross-application block, layer 3 no relu block
  CHECK(!j["layers"][0].contains("ro_norm_ratio_ab"));
  CHECK(j["layers"][1].contains("ro_norm_ratio_ab"));
  CHECK(j["layers"][0].contains("relu_add_cos"));
  CHECK(!j["layers"][2].contains("relu_add_cos"));
  CHECK(j["layers"][2].contains("lewc_cos"));
  CHECK(j["layers"][0]["layer"] == 1);
}

TEST_CASE("config validation rejects broken experiment setups") {
  ExperimentConfig bad;
  bad.multipliers.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ExperimentConfig one_seed;
  one_seed.seeds = {1};
  CHECK_THROWS_AS(one_seed.validate(), std::invalid_argument);
  ExperimentConfig no_hidden;
  no_hidden.hidden_dims.clear();
  CHECK_THROWS_AS(no_hidden.validate(), std::invalid_argument);
}

TEST_CASE("config hash is stable and sensitive") {
  ExperimentConfig a;
  ExperimentConfig b;
  CHECK(a.config_hash() == b.config_hash());
  b.train.lr *= 2.0;
  CHECK(a.config_hash() != b.config_hash());
  ExperimentConfig c;
  c.seeds = {1, 3};
  CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("manifest insists its artifacts exist") {
  const fs::path dir =
      fs::temp_directory_path() / ("lmc_manifest_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  RunManifest m;
  m.config_hash = "deadbeef";
  m.artifacts = {(dir / "missing.csv").string()};
  CHECK_THROWS_AS(m.write((dir / "manifest.json").string()),
                  std::runtime_error);

  write_text_file((dir / "present.csv").string(), "x\n");
  m.artifacts = {(dir / "present.csv").string()};
  m.stages.push_back({"train", 1.25});
  m.write((dir / "manifest.json").string());
  const json j = json::parse(read_text_file((dir / "manifest.json").string()));
  CHECK(j["schema"] == "lmc-manifest");
  CHECK(j["config_hash"] == "deadbeef");
  CHECK(j["stages"][0]["name"] == "train");
  fs::remove_all(dir);
}

TEST_CASE("undefined statistics serialize as null") {
  DiagnosticsReport r;
  r.arch.layer_dims = {4, 6, 3};
  r.lambda = 0.5;
  r.lewc_cos.resize(2);
  r.lewc_cos[1].count = 5;
  r.lewc_cos[1].mean = 0.7;
  r.relu_add_cos.resize(1);
  r.ro.resize(1);
  r.ro[0].norm_ratio_ab = std::numeric_limits<double>::quiet_NaN();
  r.commutativity_dist.resize(2);
  r.preact_a.resize(1);
  r.preact_b.resize(1);
  r.overlap.resize(1);  // defined = false
  r.rank_a.resize(2);
  r.rank_b.resize(2);
  const json j = json::parse(diagnostics_json(r));
  CHECK(j["layers"][0]["lewc_cos"]["mean"].is_null());  // zero samples
  CHECK(j["layers"][1]["lewc_cos"]["mean"].get<double>() == 0.7);
  CHECK(j["layers"][1]["ro_norm_ratio_ab"].is_null());  // NaN ratio
  CHECK(j["layers"][0]["nonoverlap_fraction"].is_null());
}
