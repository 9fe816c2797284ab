#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "contrast/matrix.hpp"
#include "contrast/types.hpp"

namespace contrast {

/// Points with class ids; labels are only ever used for evaluation.
struct LabeledDataset {
  Matrix points;  // n x d
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return points.rows; }
  std::size_t dim() const { return points.cols; }
};

struct AugmentConfig {
  double noise_sigma = 0.1;
  double dropout_prob = 0.0;
  std::uint64_t seed = 0;
};

/// Gaussian class blobs on the unit sphere: C centers drawn uniformly on
/// S^{d-1}, each point = normalize(center + N(0, spread_sigma^2 I)).
/// Deterministic for a fixed seed.
LabeledDataset synthetic_dataset(int num_classes, int per_class, int dim, double spread_sigma,
                                 std::uint64_t seed);

/// Two independently augmented unit-normalized views of one point: Gaussian
/// noise plus inverted-dropout coordinate zeroing. `draw` indexes the
/// augmentation stream so a given (seed, draw) pair always produces the same
/// views.
std::pair<Vector, Vector> two_view_augment(std::span<const double> point, const AugmentConfig& cfg,
                                           std::uint64_t draw);

/// Reads CIFAR-10 binary batches (records of 1 label byte + 3072 pixel
/// bytes). Pixels are scaled to [0,1] and per-feature standardized over the
/// loaded subset. `indices`, when given, selects records in file order.
LabeledDataset cifar_load(const std::filesystem::path& path,
                          const std::optional<std::vector<std::size_t>>& indices = std::nullopt);

/// Flat little-endian dataset cache: 16-byte header (magic, n, d, C as
/// uint32) + n*d float64 row-major points + n uint32 labels.
void save_dataset_cache(const std::filesystem::path& path, const LabeledDataset& ds);
LabeledDataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace contrast
