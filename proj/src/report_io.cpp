#include "lmc/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lmc {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

/// NaN (undefined statistic) becomes null in JSON.
ordered_json num(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

ordered_json mean_cosine_json(const MeanCosine& m) {
  ordered_json j;
  j["mean"] = m.defined() ? ordered_json(m.mean) : ordered_json(nullptr);
  j["samples"] = m.count;
  j["degenerate_samples"] = m.degenerate;
  return j;
}

}  // namespace

std::string barrier_csv(const BarrierCurve& curve) {
  std::ostringstream out;
  out << "lambda,train_loss,test_loss,test_acc,calibrated_test_loss,beta\n";
  for (const auto& p : curve.points) {
    out << format_double(p.lambda) << "," << format_double(p.train_loss) << ","
        << format_double(p.test_loss) << "," << format_double(p.test_acc)
        << "," << format_double(p.calibrated_test_loss) << ","
        << format_double(p.inverse_temperature) << "\n";
  }
  return out.str();
}

std::string barrier_json(const BarrierCurve& curve,
                         const std::string& perm_mode,
                         const std::vector<std::string>& perm_paths) {
  ordered_json j;
  j["schema"] = "lmc-barrier";
  j["version"] = kBarrierSchemaVersion;
  j["permutation_mode"] = perm_mode;
  if (!perm_paths.empty()) j["permutation_files"] = perm_paths;
  j["barrier_raw_train"] = curve.barrier_raw_train;
  j["barrier_raw_test"] = curve.barrier_raw_test;
  j["barrier_calibrated"] = curve.barrier_calibrated;
  j["endpoint_a"] = {{"test_loss", curve.endpoint_a().test_loss},
                     {"test_acc", curve.endpoint_a().test_acc}};
  j["endpoint_b"] = {{"test_loss", curve.endpoint_b().test_loss},
                     {"test_acc", curve.endpoint_b().test_acc}};
  ordered_json pts = ordered_json::array();
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    const auto& f = curve.fits[i];
    ordered_json row;
    row["lambda"] = p.lambda;
    row["train_loss"] = p.train_loss;
    row["test_loss"] = p.test_loss;
    row["test_acc"] = p.test_acc;
    row["calibrated_test_loss"] = p.calibrated_test_loss;
    row["beta"] = f.beta;
    row["nll_before_cal"] = f.nll_before_cal;
    row["nll_after_cal"] = f.nll_after_cal;
    row["nll_before_holdout"] = f.nll_before;
    row["nll_after_holdout"] = f.nll_after;
    pts.push_back(row);
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

std::string diagnostics_json(const DiagnosticsReport& report) {
  const std::size_t L = report.arch.depth();
  ordered_json j;
  j["schema"] = "lmc-diagnostics";
  j["version"] = kDiagnosticsSchemaVersion;
  j["lambda"] = report.lambda;
  j["arch"] = report.arch.layer_dims;
  j["with_bias"] = report.arch.with_bias;
  j["width_multiplier"] = report.width_multiplier;
  j["seed_a"] = report.seed_a;
  j["seed_b"] = report.seed_b;

  ordered_json layers = ordered_json::array();
  for (std::size_t l = 1; l <= L; ++l) {
    ordered_json row;
    row["layer"] = l;
    row["lewc_cos"] = mean_cosine_json(report.lewc_cos[l - 1]);
    if (l <= report.relu_add_cos.size()) {
      row["relu_add_cos"] = mean_cosine_json(report.relu_add_cos[l - 1]);
    }
    if (l >= 2 && l - 2 < report.ro.size()) {
      const auto& ro = report.ro[l - 2];
      row["ro_norm_ratio_ab"] = num(ro.norm_ratio_ab);
      row["ro_norm_ratio_ba"] = num(ro.norm_ratio_ba);
      row["merged_input_cos_a"] = mean_cosine_json(ro.merged_input_cos_a);
      row["merged_input_cos_b"] = mean_cosine_json(ro.merged_input_cos_b);
    }
    row["commutativity_dist"] = mean_cosine_json(report.commutativity_dist[l - 1]);
    if (l <= report.preact_a.size()) {
      row["small_std_fraction_a"] = report.preact_a[l - 1].small_std_fraction;
      row["small_std_fraction_b"] = report.preact_b[l - 1].small_std_fraction;
      row["preact_degenerate_a"] = report.preact_a[l - 1].degenerate;
      row["preact_degenerate_b"] = report.preact_b[l - 1].degenerate;
      const auto& ov = report.overlap[l - 1];
      row["nonoverlap_fraction"] =
          ov.defined ? ordered_json(ov.nonoverlap_fraction)
                     : ordered_json(nullptr);
    }
    row["stable_rank_a"] = report.rank_a[l - 1].stable_rank;
    row["stable_rank_b"] = report.rank_b[l - 1].stable_rank;
    row["eps_rank_a"] = report.rank_a[l - 1].eps_rank;
    row["eps_rank_b"] = report.rank_b[l - 1].eps_rank;
    row["rank_width"] = report.rank_a[l - 1].width;
    layers.push_back(row);
  }
  j["layers"] = layers;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lmc
