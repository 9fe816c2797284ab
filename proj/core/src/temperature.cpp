#include "contrast/temperature.hpp"

#include <algorithm>
#include <string>

namespace contrast {

double alignment_loss(const UnitEmbeddingBatch& anchors, const UnitEmbeddingBatch& pos_keys) {
  if (anchors.size() != pos_keys.size() || anchors.dim() != pos_keys.dim()) {
    throw DimensionMismatch("alignment_loss: batches must have equal N and m");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    sum += squared_distance(anchors.row(i), pos_keys.row(i));
  }
  return sum / static_cast<double>(anchors.size());
}

AlignmentEstimate alignment_magnitude(const std::vector<double>& pos_sims) {
  if (pos_sims.empty()) throw EmptyInput();
  const double hi = 1.0 + kSimilaritySlack;
  double sum = 0.0;
  for (double s : pos_sims) {
    if (!(s >= -hi && s <= hi)) throw SimilarityOutOfRange(s);
    sum += s;
  }
  AlignmentEstimate est;
  est.a = sum / static_cast<double>(pos_sims.size());
  est.align_loss = 2.0 - 2.0 * est.a;
  est.n_pairs = pos_sims.size();
  return est;
}

AdaptiveTau adaptive_temperature(double a, const TemperatureConfig& cfg) {
  const double raw = (1.0 + cfg.alpha * (a - cfg.a0)) * cfg.tau0;
  const double floor = cfg.tau_floor_ratio * cfg.tau0;
  AdaptiveTau out;
  out.clamped = raw < floor;
  out.tau = out.clamped ? floor : raw;
  return out;
}

}  // namespace contrast
