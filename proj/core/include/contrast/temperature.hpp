#pragma once

#include <cstddef>
#include <vector>

#include "contrast/types.hpp"

namespace contrast {

/// Batch estimate of the alignment magnitude A (mean positive similarity)
/// together with the squared-distance alignment loss it is equivalent to.
struct AlignmentEstimate {
  double a = 0.0;           // in [-1, 1]
  double align_loss = 0.0;  // in [0, 4]; always 2 - 2a
  std::size_t n_pairs = 0;
};

/// Mean over pairs of ||f_i - g_i||^2. Throws DimensionMismatch.
double alignment_loss(const UnitEmbeddingBatch& anchors, const UnitEmbeddingBatch& pos_keys);

/// A = mean(pos_sims); align_loss = 2 - 2A. For unit vectors this equals the
/// squared-distance form above. Throws EmptyInput / SimilarityOutOfRange.
AlignmentEstimate alignment_magnitude(const std::vector<double>& pos_sims);

struct AdaptiveTau {
  double tau = 0.0;
  bool clamped = false;
};

/// tau_a = max([1 + alpha * (A - a0)] * tau0, tau_floor_ratio * tau0).
/// Nondecreasing in A; degenerates to tau0 when alpha = 0 or A = a0.
AdaptiveTau adaptive_temperature(double a, const TemperatureConfig& cfg);

}  // namespace contrast
