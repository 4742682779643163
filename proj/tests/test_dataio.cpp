#include <zlib.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "lmc/dataio.hpp"
#include "lmc/trainer.hpp"

using namespace lmc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lmc_dataio_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void be32_push(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

/// Builds a tiny IDX image/label pair in memory.
std::pair<std::string, std::string> make_idx(std::size_t n, std::size_t rows,
                                             std::size_t cols,
                                             std::uint32_t img_magic = 0x803,
                                             std::uint32_t lab_magic = 0x801) {
  std::string img, lab;
  be32_push(img, img_magic);
  be32_push(img, static_cast<std::uint32_t>(n));
  be32_push(img, static_cast<std::uint32_t>(rows));
  be32_push(img, static_cast<std::uint32_t>(cols));
  Rng rng(1234);
  for (std::size_t i = 0; i < n * rows * cols; ++i) {
    img.push_back(static_cast<char>(rng.bounded(256)));
  }
  be32_push(lab, lab_magic);
  be32_push(lab, static_cast<std::uint32_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    lab.push_back(static_cast<char>(rng.bounded(10)));
  }
  return {img, lab};
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_gzip(const std::string& path, const std::string& bytes) {
  gzFile f = gzopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  REQUIRE(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) ==
          static_cast<int>(bytes.size()));
  gzclose(f);
}

/// Re-serializes the parsed dataset back into IDX payload bytes.
std::string reserialize_payload(const Dataset& d, std::size_t rows,
                                std::size_t cols) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto row = d.images.row(i);
    for (std::size_t j = 0; j < rows * cols; ++j) {
      out.push_back(static_cast<char>(
          static_cast<int>(std::lround(row[j] * 255.0))));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("idx load, gzip detection and payload round trip") {
  TempDir tmp;
  const auto [img, lab] = make_idx(12, 4, 3);
  write_bytes(tmp.file("img.idx"), img);
  write_bytes(tmp.file("lab.idx"), lab);
  write_gzip(tmp.file("img.idx.gz"), img);
  write_gzip(tmp.file("lab.idx.gz"), lab);

  const Dataset plain = load_idx(tmp.file("img.idx"), tmp.file("lab.idx"));
  CHECK(plain.size() == 12);
  CHECK(plain.input_dim() == 12);

  const Dataset zipped =
      load_idx(tmp.file("img.idx.gz"), tmp.file("lab.idx.gz"));
  CHECK(zipped.images.data == plain.images.data);
  CHECK(zipped.labels == plain.labels);

  // payload survives a re-serialization byte for byte
  CHECK(reserialize_payload(plain, 4, 3) == img.substr(16));

  double mn = 1.0, mx = 0.0;
  for (double x : plain.images.data) {
    mn = std::min(mn, x);
    mx = std::max(mx, x);
  }
  CHECK(mn >= 0.0);
  CHECK(mx <= 1.0);
}

TEST_CASE("idx error paths are distinct") {
  TempDir tmp;
  const auto [img, lab] = make_idx(5, 2, 2);

  // labels file carrying the image magic
  const auto [img2, bad_lab] = make_idx(5, 2, 2, 0x803, 0x803);
  write_bytes(tmp.file("img.idx"), img);
  write_bytes(tmp.file("bad_lab.idx"), bad_lab);
  try {
    load_idx(tmp.file("img.idx"), tmp.file("bad_lab.idx"));
    FAIL("expected bad magic");
  } catch (const IdxError& e) {
    CHECK(e.code == IdxError::Code::bad_magic);
  }

  // count mismatch
  const auto [img3, lab3] = make_idx(4, 2, 2);
  write_bytes(tmp.file("lab3.idx"), lab3);
  try {
    load_idx(tmp.file("img.idx"), tmp.file("lab3.idx"));
    FAIL("expected count mismatch");
  } catch (const IdxError& e) {
    CHECK(e.code == IdxError::Code::count_mismatch);
  }

  // truncated payload
  write_bytes(tmp.file("short.idx"), img.substr(0, img.size() - 3));
  write_bytes(tmp.file("lab.idx"), lab);
  try {
    load_idx(tmp.file("short.idx"), tmp.file("lab.idx"));
    FAIL("expected truncation");
  } catch (const IdxError& e) {
    CHECK(e.code == IdxError::Code::truncated);
  }
}

TEST_CASE("official mnist files parse when available") {
  const char* dir = std::getenv("LMC_MNIST_DIR");
  if (dir == nullptr) {
    MESSAGE("LMC_MNIST_DIR not set; skipping");
    return;
  }
  const Dataset d = load_idx(std::string(dir) + "/t10k-images-idx3-ubyte",
                             std::string(dir) + "/t10k-labels-idx1-ubyte");
  CHECK(d.size() == 10000);
  CHECK(d.input_dim() == 784);
  CHECK(d.num_classes == 10);
}

TEST_CASE("synth blobs determinism and separability") {
  Rng r1(42), r2(42);
  const Dataset d1 = synth_blobs(r1, 1000, 32, 2, 10.0);
  const Dataset d2 = synth_blobs(r2, 1000, 32, 2, 10.0);
  CHECK(d1.images.data == d2.images.data);
  CHECK(d1.labels == d2.labels);

  // a small one-hidden-layer net separates sep=10 blobs perfectly
  Rng rt(42);
  const Dataset test = synth_blobs(rt, 1000, 32, 2, 10.0);
  Arch arch;
  arch.layer_dims = {32, 64, 2};
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 5;
  cfg.batch_size = 128;
  cfg.weight_decay = 0.0;
  cfg.seed = 3;
  const Checkpoint ck = train(arch, cfg, d1, test);
  CHECK(ck.final_train_loss < 0.1);
  CHECK(evaluate(ck.params, d1).accuracy == 1.0);

  // coincident means are indistinguishable
  Rng r3(42);
  const Dataset flat = synth_blobs(r3, 2000, 8, 4, 0.0);
  Rng r4(43);
  const Dataset flat_test = synth_blobs(r4, 2000, 8, 4, 0.0);
  TrainConfig fc;
  fc.epochs = 3;
  fc.batch_size = 128;
  fc.seed = 5;
  Arch flat_arch;
  flat_arch.layer_dims = {8, 16, 4};
  const Checkpoint fck = train(flat_arch, fc, flat, flat_test);
  CHECK(evaluate(fck.params, flat_test).accuracy ==
        doctest::Approx(0.25).epsilon(0.15));

  CHECK_THROWS_AS(synth_blobs(r3, 2, 4, 3, 1.0), std::invalid_argument);
}

TEST_CASE("split covers exactly with requested sizes") {
  Rng rng(9);
  const Dataset d = synth_blobs(rng, 10000, 4, 4, 1.0);
  SplitSpec spec;
  spec.fractions = {{"cal", 0.2}, {"eval", 0.8}};
  spec.seed = 77;
  const auto parts = split(d, spec);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].second.size() == 2000);
  CHECK(parts[1].second.size() == 8000);

  // partition: every sample appears exactly once (match by content)
  std::multiset<double> original, recombined;
  for (double x : d.images.data) original.insert(x);
  for (const auto& [name, part] : parts) {
    for (double x : part.images.data) recombined.insert(x);
  }
  CHECK(original == recombined);

  // single fraction: a permuted copy
  SplitSpec whole;
  whole.fractions = {{"all", 1.0}};
  whole.seed = 3;
  const auto all = split(d, whole);
  REQUIRE(all.size() == 1);
  CHECK(all[0].second.size() == d.size());

  SplitSpec bad;
  bad.fractions = {{"a", 0.5}, {"b", 0.2}};
  CHECK_THROWS_AS(split(d, bad), std::invalid_argument);
}

TEST_CASE("batches shuffle per epoch and reset with the seed") {
  Rng rng(5);
  const Dataset d = synth_blobs(rng, 1000, 4, 4, 1.0);

  Rng b1(11);
  const auto epoch1 = batches(d, 512, b1);
  REQUIRE(epoch1.size() == 2);
  CHECK(epoch1[0].size() == 512);
  CHECK(epoch1[1].size() == 488);
  const auto epoch2 = batches(d, 512, b1);
  CHECK(epoch1 != epoch2);  // same rng advanced: different order

  Rng b2(11);
  CHECK(batches(d, 512, b2) == epoch1);  // fresh rng, same seed

  Rng b3(1);
  const auto singletons = batches(d, 1, b3);
  CHECK(singletons.size() == 1000);
  for (const auto& s : singletons) CHECK(s.size() == 1);
}
