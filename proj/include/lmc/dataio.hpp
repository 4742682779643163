#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmc/dense.hpp"
#include "lmc/rng.hpp"

namespace lmc {

/// Immutable labelled dataset. Images are rows of a matrix with every pixel
/// scaled to [0, 1]; labels are class indices below num_classes.
struct Dataset {
  Matrix images;                // n x dim
  std::vector<int> labels;      // n entries
  int num_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return images.cols; }

  /// New dataset holding the given rows, in order.
  Dataset subset(const std::vector<std::size_t>& indices,
                 const std::string& subset_name) const;
};

struct SplitSpec {
  std::vector<std::pair<std::string, double>> fractions;
  std::uint64_t seed = 0;
};

/// IDX parse failures, distinguishable by code.
struct IdxError : std::runtime_error {
  enum class Code { bad_magic, count_mismatch, truncated, io };
  Code code;
  IdxError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

/// Loads an images/labels pair of IDX files (raw or gzip, detected by the
/// 0x1f 0x8b magic). Pixels are bytes divided by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Gaussian class blobs: `classes` means drawn on a sphere of radius `sep`,
/// unit isotropic noise, labels assigned round-robin. Deterministic in rng.
Dataset synth_blobs(Rng& rng, std::size_t n, std::size_t dim,
                    std::size_t classes, double sep);

/// Disjoint cover of `d` with sizes within one item of fraction * size,
/// shuffled deterministically by spec.seed.
std::vector<std::pair<std::string, Dataset>> split(const Dataset& d,
                                                   const SplitSpec& s);

/// Index slices for one epoch: a seeded shuffle chopped into batches, the
/// last possibly short. Each call advances the rng (new order per epoch).
std::vector<std::vector<std::size_t>> batches(const Dataset& d,
                                              std::size_t batch_size, Rng& rng);

// Test support: raw payload re-serialization (see tests).
std::vector<std::uint8_t> read_possibly_gzipped(const std::string& path);

}  // namespace lmc
