#include "lmc/dataio.hpp"

#include <zlib.h>

#include "lmc/ndcore.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lmc {

Dataset Dataset::subset(const std::vector<std::size_t>& indices,
                        const std::string& subset_name) const {
  Dataset out;
  out.images = Matrix(indices.size(), images.cols);
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = images.row(indices[r]);
    std::copy(src.begin(), src.end(), out.images.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  out.num_classes = num_classes;
  out.name = subset_name;
  return out;
}

// ---------------------------------------------------------------------------
// IDX ingestion
// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Code::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                 const std::string& path) {
  z_stream zs{};
  // 15 + 16 selects gzip framing.
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw IdxError(IdxError::Code::io, "inflateInit failed for " + path);
  }
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IdxError(IdxError::Code::truncated,
                     "corrupt gzip stream in " + path);
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw IdxError(IdxError::Code::truncated,
                     "truncated gzip stream in " + path);
    }
  }
  inflateEnd(&zs);
  return out;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

std::vector<std::uint8_t> read_possibly_gzipped(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    return gunzip(bytes, path);
  }
  return bytes;
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  const auto img = read_possibly_gzipped(images_path);
  const auto lab = read_possibly_gzipped(labels_path);

  if (img.size() < 16) {
    throw IdxError(IdxError::Code::truncated, "image file too short");
  }
  if (lab.size() < 8) {
    throw IdxError(IdxError::Code::truncated, "label file too short");
  }
  if (be32(img.data()) != kImageMagic) {
    throw IdxError(IdxError::Code::bad_magic,
                   "wrong magic in image file (expected 0x00000803)");
  }
  if (be32(lab.data()) != kLabelMagic) {
    throw IdxError(IdxError::Code::bad_magic,
                   "wrong magic in label file (expected 0x00000801)");
  }

  const std::uint32_t n_img = be32(img.data() + 4);
  const std::uint32_t rows = be32(img.data() + 8);
  const std::uint32_t cols = be32(img.data() + 12);
  const std::uint32_t n_lab = be32(lab.data() + 4);
  if (n_img != n_lab) {
    throw IdxError(IdxError::Code::count_mismatch,
                   "image/label count mismatch");
  }
  const std::size_t dim = std::size_t(rows) * cols;
  if (img.size() != 16 + std::size_t(n_img) * dim) {
    throw IdxError(IdxError::Code::truncated, "image payload truncated");
  }
  if (lab.size() != 8 + std::size_t(n_lab)) {
    throw IdxError(IdxError::Code::truncated, "label payload truncated");
  }

  Dataset d;
  d.images = Matrix(n_img, dim);
  d.labels.resize(n_img);
  int max_label = 0;
  for (std::size_t i = 0; i < n_img; ++i) {
    const std::uint8_t* px = img.data() + 16 + i * dim;
    auto row = d.images.row(i);
    for (std::size_t j = 0; j < dim; ++j) row[j] = px[j] / 255.0;
    d.labels[i] = lab[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = max_label + 1;
  d.name = "idx";
  return d;
}

// ---------------------------------------------------------------------------
// Synthetic data, splits, batches
// ---------------------------------------------------------------------------

Dataset synth_blobs(Rng& rng, std::size_t n, std::size_t dim,
                    std::size_t classes, double sep) {
  require(classes >= 1 && n >= classes, "synth_blobs: need n >= classes >= 1");
  require(dim >= 1, "synth_blobs: dim must be >= 1");
  require(sep >= 0.0, "synth_blobs: sep must be non-negative");

  std::vector<Vector> means;
  means.reserve(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    Vector m(dim);
    for (auto& x : m.data) x = rng.normal();
    const double nrm = norm2(m.span());
    for (auto& x : m.data) x = nrm > 0.0 ? sep * x / nrm : 0.0;
    means.push_back(std::move(m));
  }

  Dataset d;
  d.images = Matrix(n, dim);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    auto row = d.images.row(i);
    for (std::size_t j = 0; j < dim; ++j) row[j] = means[c][j] + rng.normal();
    d.labels[i] = static_cast<int>(c);
  }
  d.num_classes = static_cast<int>(classes);
  d.name = "blobs";
  return d;
}

std::vector<std::pair<std::string, Dataset>> split(const Dataset& d,
                                                   const SplitSpec& s) {
  double total = 0.0;
  for (const auto& [name, f] : s.fractions) {
    require(f > 0.0, "split: fractions must be positive");
    total += f;
  }
  require(std::abs(total - 1.0) <= 1e-9, "split: fractions must sum to 1");

  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(s.seed);
  rng.shuffle(idx);

  std::vector<std::pair<std::string, Dataset>> out;
  const double n = static_cast<double>(d.size());
  double cum = 0.0;
  std::size_t lo = 0;
  for (std::size_t k = 0; k < s.fractions.size(); ++k) {
    cum += s.fractions[k].second;
    const std::size_t hi =
        (k + 1 == s.fractions.size())
            ? d.size()
            : static_cast<std::size_t>(std::llround(cum * n));
    std::vector<std::size_t> part(idx.begin() + lo, idx.begin() + hi);
    out.emplace_back(s.fractions[k].first,
                     d.subset(part, d.name + "/" + s.fractions[k].first));
    lo = hi;
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& d,
                                              std::size_t batch_size,
                                              Rng& rng) {
  require(batch_size >= 1, "batches: batch_size must be >= 1");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t lo = 0; lo < idx.size(); lo += batch_size) {
    const std::size_t hi = std::min(idx.size(), lo + batch_size);
    out.emplace_back(idx.begin() + lo, idx.begin() + hi);
  }
  return out;
}

}  // namespace lmc
