#include "contrast/datagen.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "contrast/rng.hpp"

namespace contrast {

static_assert(std::endian::native == std::endian::little,
              "dataset cache format assumes a little-endian host");

namespace {

constexpr std::uint32_t kCacheMagic = 0x434C4453;  // "SDLC" little-endian bytes
constexpr std::size_t kCifarPixels = 3072;
constexpr std::size_t kCifarRecord = kCifarPixels + 1;
constexpr int kCifarClasses = 10;

void draw_unit_vector(RngStream& rng, std::span<double> out) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (double& x : out) x = rng.normal();
    const double n = norm(out);
    if (n > 1e-12) {
      for (double& x : out) x /= n;
      return;
    }
  }
  throw NonFiniteOutput("failed to draw a unit vector");
}

}  // namespace

LabeledDataset synthetic_dataset(int num_classes, int per_class, int dim, double spread_sigma,
                                 std::uint64_t seed) {
  if (num_classes < 2 || per_class < 1 || dim < 2 || !(spread_sigma >= 0.0) ||
      !std::isfinite(spread_sigma)) {
    throw InvalidConfig("synthetic_dataset: need C >= 2, per_class >= 1, d >= 2, sigma >= 0");
  }

  Matrix centers(static_cast<std::size_t>(num_classes), static_cast<std::size_t>(dim));
  RngStream center_rng(seed, "dataset-centers");
  for (int c = 0; c < num_classes; ++c) draw_unit_vector(center_rng, centers.row(c));

  const std::size_t n = static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_class);
  LabeledDataset ds;
  ds.points = Matrix(n, static_cast<std::size_t>(dim));
  ds.labels.resize(n);
  ds.num_classes = num_classes;

  RngStream point_rng(seed, "dataset-points");
  std::size_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int p = 0; p < per_class; ++p, ++row) {
      ds.labels[row] = c;
      auto out = ds.points.row(row);
      const auto center = centers.row(c);
      if (spread_sigma == 0.0) {
        std::copy(center.begin(), center.end(), out.begin());
        continue;
      }
      for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = center[j] + spread_sigma * point_rng.normal();
      }
      const double nrm = norm(out);
      if (nrm > 1e-12) {
        for (double& x : out) x /= nrm;
      } else {
        std::copy(center.begin(), center.end(), out.begin());
      }
    }
  }
  return ds;
}

std::pair<Vector, Vector> two_view_augment(std::span<const double> point, const AugmentConfig& cfg,
                                           std::uint64_t draw) {
  RngStream rng(cfg.seed, "augment", draw);
  const double keep = 1.0 - cfg.dropout_prob;

  auto one_view = [&]() -> Vector {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vector v(point.begin(), point.end());
      if (cfg.noise_sigma > 0.0) {
        for (double& x : v) x += cfg.noise_sigma * rng.normal();
      }
      if (cfg.dropout_prob > 0.0) {
        for (double& x : v) {
          if (rng.uniform() < cfg.dropout_prob) {
            x = 0.0;
          } else {
            x /= keep;
          }
        }
      }
      const double n = norm(v);
      if (n > 1e-12) {
        for (double& x : v) x /= n;
        return v;
      }
      if (cfg.noise_sigma == 0.0 && cfg.dropout_prob == 0.0) break;  // nothing to redraw
    }
    // Degenerate augmentation; fall back to the normalized input.
    Vector v(point.begin(), point.end());
    const double n = norm(v);
    if (!(n > 1e-12)) throw ZeroNormRow(0);
    for (double& x : v) x /= n;
    return v;
  };

  Vector a = one_view();
  Vector b = one_view();
  return {std::move(a), std::move(b)};
}

LabeledDataset cifar_load(const std::filesystem::path& path,
                          const std::optional<std::vector<std::size_t>>& indices) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());

  in.seekg(0, std::ios::end);
  const std::uint64_t bytes = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes == 0 || bytes % kCifarRecord != 0) {
    throw MalformedRecord("file length " + std::to_string(bytes) +
                          " is not a positive multiple of " + std::to_string(kCifarRecord));
  }
  const std::size_t records = static_cast<std::size_t>(bytes / kCifarRecord);

  std::vector<std::size_t> selected;
  if (indices) {
    selected = *indices;
    for (std::size_t idx : selected) {
      if (idx >= records) {
        throw InvalidConfig("record index " + std::to_string(idx) + " out of range");
      }
    }
  } else {
    selected.resize(records);
    for (std::size_t i = 0; i < records; ++i) selected[i] = i;
  }
  if (selected.empty()) throw EmptyInput();

  LabeledDataset ds;
  ds.points = Matrix(selected.size(), kCifarPixels);
  ds.labels.resize(selected.size());
  ds.num_classes = kCifarClasses;

  std::vector<unsigned char> record(kCifarRecord);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    in.seekg(static_cast<std::streamoff>(selected[i] * kCifarRecord), std::ios::beg);
    in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(kCifarRecord));
    if (!in) throw MalformedRecord("short read at record " + std::to_string(selected[i]));
    const int label = record[0];
    if (label >= kCifarClasses) throw LabelOutOfRange(label);
    ds.labels[i] = label;
    auto row = ds.points.row(i);
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      row[j] = static_cast<double>(record[j + 1]) / 255.0;
    }
  }

  // Per-feature standardization over the loaded subset.
  const double n = static_cast<double>(ds.points.rows);
  for (std::size_t j = 0; j < kCifarPixels; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.points.rows; ++i) mean += ds.points(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < ds.points.rows; ++i) {
      const double d = ds.points(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const double sd = std::sqrt(var);
    const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < ds.points.rows; ++i) {
      ds.points(i, j) = (ds.points(i, j) - mean) * inv;
    }
  }
  return ds;
}

void save_dataset_cache(const std::filesystem::path& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::uint32_t header[4] = {kCacheMagic, static_cast<std::uint32_t>(ds.points.rows),
                                   static_cast<std::uint32_t>(ds.points.cols),
                                   static_cast<std::uint32_t>(ds.num_classes)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(ds.points.data.data()),
            static_cast<std::streamsize>(ds.points.data.size() * sizeof(double)));
  std::vector<std::uint32_t> labels(ds.labels.begin(), ds.labels.end());
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * sizeof(std::uint32_t)));
  if (!out) throw Error("short write to " + path.string());
}

LabeledDataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::uint32_t header[4] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != kCacheMagic) throw MalformedRecord("bad dataset cache header");
  const std::size_t n = header[1];
  const std::size_t d = header[2];
  LabeledDataset ds;
  ds.num_classes = static_cast<int>(header[3]);
  ds.points = Matrix(n, d);
  in.read(reinterpret_cast<char*>(ds.points.data.data()),
          static_cast<std::streamsize>(n * d * sizeof(double)));
  std::vector<std::uint32_t> labels(n);
  in.read(reinterpret_cast<char*>(labels.data()),
          static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
  if (!in) throw MalformedRecord("dataset cache truncated");
  ds.labels.assign(labels.begin(), labels.end());
  return ds;
}

}  // namespace contrast
