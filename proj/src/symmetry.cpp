#include "lmc/symmetry.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lmc/parallel.hpp"

namespace lmc {

Permutation Permutation::identity(const Arch& arch) {
  Permutation pi;
  for (std::size_t h = 0; h + 2 < arch.layer_dims.size(); ++h) {
    std::vector<std::uint32_t> p(arch.layer_dims[h + 1]);
    std::iota(p.begin(), p.end(), 0u);
    pi.hidden.push_back(std::move(p));
  }
  return pi;
}

void Permutation::validate(const Arch& arch) const {
  require(hidden.size() + 2 == arch.layer_dims.size(),
          "permutation: hidden layer count mismatch");
  for (std::size_t h = 0; h < hidden.size(); ++h) {
    require(hidden[h].size() == arch.layer_dims[h + 1],
            "permutation: layer width mismatch");
    auto sorted = hidden[h];
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      require(sorted[i] == i, "permutation: not a bijection");
    }
  }
}

bool Permutation::is_identity() const {
  for (const auto& p : hidden) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] != i) return false;
    }
  }
  return true;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  for (const auto& p : hidden) {
    std::vector<std::uint32_t> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<std::uint32_t>(i);
    inv.hidden.push_back(std::move(q));
  }
  return inv;
}

Permutation Permutation::after(const Permutation& first) const {
  require(hidden.size() == first.hidden.size(),
          "permutation compose: layer count mismatch");
  Permutation out;
  for (std::size_t h = 0; h < hidden.size(); ++h) {
    require(hidden[h].size() == first.hidden[h].size(),
            "permutation compose: width mismatch");
    std::vector<std::uint32_t> p(hidden[h].size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = first.hidden[h][hidden[h][i]];
    out.hidden.push_back(std::move(p));
  }
  return out;
}

ParamSet apply(const Permutation& pi, const ParamSet& p) {
  pi.validate(p.arch);
  const std::size_t L = p.arch.depth();
  ParamSet out;
  out.arch = p.arch;
  out.weights.resize(L);
  if (p.arch.with_bias) out.biases.resize(L);

  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& w = p.weights[l];
    Matrix nw(w.rows, w.cols);
    const bool permute_rows = l < pi.hidden.size();
    const bool permute_cols = l > 0;
    parallel_for(w.rows, [&](std::size_t i) {
      const std::size_t src_row = permute_rows ? pi.hidden[l][i] : i;
      auto dst = nw.row(i);
      auto src = w.row(src_row);
      if (permute_cols) {
        const auto& cmap = pi.hidden[l - 1];
        for (std::size_t k = 0; k < w.cols; ++k) dst[k] = src[cmap[k]];
      } else {
        std::copy(src.begin(), src.end(), dst.begin());
      }
    });
    out.weights[l] = std::move(nw);
    if (p.arch.with_bias) {
      Vector nb(p.biases[l].dim());
      for (std::size_t i = 0; i < nb.dim(); ++i) {
        nb[i] = p.biases[l][permute_rows ? pi.hidden[l][i] : i];
      }
      out.biases[l] = std::move(nb);
    }
  }
  return out;
}

Permutation random_permutation(const Arch& arch, Rng& rng) {
  arch.validate();
  Permutation pi = Permutation::identity(arch);
  for (auto& p : pi.hidden) rng.shuffle(p);
  return pi;
}

// ---------------------------------------------------------------------------
// Exact linear assignment, shortest augmenting path (O(n^3)).
// ---------------------------------------------------------------------------

std::vector<std::size_t> assignment_solve(const Matrix& cost) {
  require(cost.rows == cost.cols, "assignment: cost matrix must be square");
  require(cost.rows >= 1, "assignment: empty cost matrix");
  for (double x : cost.data) {
    require(std::isfinite(x), "assignment: non-finite cost");
  }
  const std::size_t n = cost.rows;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // match[j]: row assigned to col j
  std::vector<std::size_t> way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

// ---------------------------------------------------------------------------
// Weight matching
// ---------------------------------------------------------------------------

namespace {

/// Alignment gain of assigning new unit i of hidden layer h to b's unit j,
/// holding the neighbouring layer permutations fixed.
Matrix layer_gain(const ParamSet& a, const ParamSet& b, const Permutation& pi,
                  std::size_t h) {
  const Matrix& wa_in = a.weights[h];
  const Matrix& wb_in = b.weights[h];
  const Matrix& wa_out = a.weights[h + 1];
  const Matrix& wb_out = b.weights[h + 1];
  const std::size_t width = wa_in.rows;
  const bool next_is_hidden = h + 1 < pi.hidden.size();

  Matrix gain(width, width);
  parallel_for(width, [&](std::size_t i) {
    for (std::size_t j = 0; j < width; ++j) {
      double acc = 0.0;
      if (h == 0) {
        auto ra = wa_in.row(i);
        auto rb = wb_in.row(j);
        for (std::size_t k = 0; k < wa_in.cols; ++k) acc += ra[k] * rb[k];
      } else {
        const auto& cmap = pi.hidden[h - 1];
        auto ra = wa_in.row(i);
        auto rb = wb_in.row(j);
        for (std::size_t k = 0; k < wa_in.cols; ++k) acc += ra[k] * rb[cmap[k]];
      }
      if (!a.biases.empty()) acc += a.biases[h][i] * b.biases[h][j];
      for (std::size_t r = 0; r < wa_out.rows; ++r) {
        const std::size_t rb_row = next_is_hidden ? pi.hidden[h + 1][r] : r;
        acc += wa_out.at(r, i) * wb_out.at(rb_row, j);
      }
      gain.at(i, j) = acc;
    }
  });
  return gain;
}

}  // namespace

WeightMatchResult weight_match(const ParamSet& a, const ParamSet& b, Rng& rng,
                               std::size_t max_sweeps) {
  require_same_arch(a, b);
  WeightMatchResult res;
  res.perm = Permutation::identity(a.arch);
  const std::size_t H = res.perm.hidden.size();
  if (H == 0) return res;

  std::vector<std::size_t> order(H);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    rng.shuffle(order);
    bool changed = false;
    for (std::size_t h : order) {
      Matrix gain = layer_gain(a, b, res.perm, h);
      // assignment_solve minimizes; negate to maximize alignment.
      for (double& x : gain.data) x = -x;
      const auto row_to_col = assignment_solve(gain);
      for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        const auto j = static_cast<std::uint32_t>(row_to_col[i]);
        if (res.perm.hidden[h][i] != j) {
          res.perm.hidden[h][i] = j;
          changed = true;
        }
      }
    }
    res.sweeps = sweep + 1;
    res.sweep_distances.push_back(param_distance(a, apply(res.perm, b)));
    if (!changed) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sidecar serialization
// ---------------------------------------------------------------------------

void save_permutation(const Permutation& pi, const std::string& path) {
  std::string payload;
  std::size_t total = 0;
  for (const auto& p : pi.hidden) {
    total += p.size();
    for (std::uint32_t x : p) {
      for (int b = 0; b < 4; ++b) {
        payload.push_back(static_cast<char>((x >> (8 * b)) & 0xff));
      }
    }
  }
  const auto crc = crc32(0, reinterpret_cast<const Bytef*>(payload.data()),
                         static_cast<uInt>(payload.size()));

  std::ostringstream h;
  h << "lmc-permutation 1\n";
  h << "layers " << pi.hidden.size() << "\n";
  h << "sizes";
  for (const auto& p : pi.hidden) h << " " << p.size();
  h << "\n";
  h << "payload.count " << total << "\n";
  h << "payload.crc32 " << crc << "\n";
  h << "---\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Permutation load_permutation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("lmc-permutation ", 0) != 0) {
    throw std::runtime_error(path + ": not a permutation file");
  }
  if (line != "lmc-permutation 1") {
    throw std::runtime_error(path + ": unsupported version");
  }
  std::size_t layers = 0, count = 0;
  std::uint64_t crc_expect = 0;
  std::vector<std::size_t> sizes;
  while (std::getline(in, line) && line != "---") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "layers") {
      ls >> layers;
    } else if (key == "sizes") {
      std::size_t s;
      while (ls >> s) sizes.push_back(s);
    } else if (key == "payload.count") {
      ls >> count;
    } else if (key == "payload.crc32") {
      ls >> crc_expect;
    } else {
      throw std::runtime_error(path + ": unknown header key " + key);
    }
  }
  if (sizes.size() != layers) {
    throw std::runtime_error(path + ": layer count mismatch");
  }
  std::vector<std::uint8_t> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw std::runtime_error(path + ": payload truncated");
  }
  const auto crc = crc32(0, payload.data(), static_cast<uInt>(payload.size()));
  if (crc != crc_expect) throw std::runtime_error(path + ": checksum mismatch");

  Permutation pi;
  const std::uint8_t* p = payload.data();
  for (std::size_t s : sizes) {
    std::vector<std::uint32_t> layer(s);
    for (std::size_t i = 0; i < s; ++i, p += 4) {
      layer[i] = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                 (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
    }
    pi.hidden.push_back(std::move(layer));
  }
  return pi;
}

}  // namespace lmc
