#include "contrast/types.hpp"

#include <cmath>
#include <string>

namespace contrast {

UnitEmbeddingBatch make_unit_batch(Matrix raw) {
  if (raw.rows < 1 || raw.cols < 2) {
    throw DimensionMismatch("unit batch needs N >= 1 and m >= 2, got " +
                            std::to_string(raw.rows) + " x " + std::to_string(raw.cols));
  }
  for (std::size_t i = 0; i < raw.rows; ++i) {
    const double n = norm(raw.row(i));
    if (!(n > 1e-12)) throw ZeroNormRow(i);
    const double inv = 1.0 / n;
    for (double& x : raw.row(i)) x *= inv;
  }
  return UnitEmbeddingBatch{std::move(raw)};
}

bool is_unit_batch(const Matrix& m, double tol) {
  if (m.rows < 1 || m.cols < 2) return false;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (std::abs(norm(m.row(i)) - 1.0) > tol) return false;
  }
  return true;
}

void validate_logits(const LogitsRow& row) {
  if (row.negs.empty()) throw EmptyNegatives();
  const double hi = 1.0 + kSimilaritySlack;
  if (!(row.pos >= -hi && row.pos <= hi)) throw SimilarityOutOfRange(row.pos);
  for (double s : row.negs) {
    if (!(s >= -hi && s <= hi)) throw SimilarityOutOfRange(s);
  }
}

TemperatureConfig::TemperatureConfig(double tau0, double alpha, double a0, double tau_floor_ratio)
    : tau0(tau0), alpha(alpha), a0(a0), tau_floor_ratio(tau_floor_ratio) {
  if (!(tau0 > 0.0)) throw InvalidConfig("tau0 must be > 0");
  if (!(alpha >= 0.0)) throw InvalidConfig("alpha must be >= 0");
  if (!(a0 >= -1.0 && a0 <= 1.0)) throw InvalidConfig("A0 must lie in [-1, 1]");
  if (!(tau_floor_ratio > 0.0 && tau_floor_ratio < 1.0)) {
    throw InvalidConfig("tau_floor_ratio must lie in (0, 1)");
  }
}

const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::InfoNCE: return "infonce";
    case LossVariant::NTXent: return "ntxent";
    case LossVariant::DCL: return "dcl";
    case LossVariant::MACL: return "macl";
  }
  return "unknown";
}

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "infonce") return LossVariant::InfoNCE;
  if (name == "ntxent") return LossVariant::NTXent;
  if (name == "dcl") return LossVariant::DCL;
  if (name == "macl") return LossVariant::MACL;
  throw InvalidConfig("unknown loss variant: " + name);
}

}  // namespace contrast
