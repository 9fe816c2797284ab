#pragma once

#include <cstddef>
#include <vector>

#include "contrast/errors.hpp"
#include "contrast/matrix.hpp"

namespace contrast {

/// Tolerance on |row norm - 1| accepted by unit-batch validation.
inline constexpr double kUnitNormTol = 1e-6;
/// Slack accepted on cosine similarities (round-off of unit-vector dots).
inline constexpr double kSimilaritySlack = 1e-9;

/// N row-vectors on the unit hypersphere S^{m-1}.
struct UnitEmbeddingBatch {
  Matrix data;  // N x m, every row L2-normalized

  std::size_t size() const { return data.rows; }
  std::size_t dim() const { return data.cols; }
  std::span<const double> row(std::size_t i) const { return data.row(i); }
};

/// Normalizes each row of `raw` to unit length. Throws ZeroNormRow for rows
/// with norm <= 1e-12.
UnitEmbeddingBatch make_unit_batch(Matrix raw);

/// True iff every row norm is within `tol` of 1 and N >= 1, m >= 2.
bool is_unit_batch(const Matrix& m, double tol = kUnitNormTol);

/// One anchor's positive similarity plus K negative similarities.
struct LogitsRow {
  double pos = 0.0;
  std::vector<double> negs;

  std::size_t k() const { return negs.size(); }
};

/// Throws SimilarityOutOfRange / EmptyNegatives when the row invariants fail.
void validate_logits(const LogitsRow& row);

/// Parameters of the alignment-adaptive temperature rule. The raw rule is
/// tau_a = [1 + alpha * (A - a0)] * tau0; values below tau_floor_ratio * tau0
/// are clamped up to keep the loss defined for aggressive alpha settings.
struct TemperatureConfig {
  double tau0 = 0.1;
  double alpha = 0.0;
  double a0 = 0.0;
  double tau_floor_ratio = 0.05;

  TemperatureConfig() = default;
  TemperatureConfig(double tau0, double alpha, double a0, double tau_floor_ratio = 0.05);
};

enum class LossVariant { InfoNCE, NTXent, DCL, MACL };

const char* to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& name);

/// Loss variant plus the temperature rule and the MACL switches. MACL with
/// adaptive and reweight both off computes exactly the InfoNCE value.
struct LossSpec {
  LossVariant variant = LossVariant::InfoNCE;
  TemperatureConfig temperature;
  bool adaptive = false;
  bool reweight = false;
};

/// Per-anchor gradient blocks plus the softmax diagnostics they are built
/// from. d_neg_keys row j is the gradient w.r.t. the j-th negative key.
struct GradientReport {
  Vector d_anchor;
  Vector d_pos_key;
  Matrix d_neg_keys;  // K x m
  double w = 0.0;     // gradient scaling factor, sum of p_neg
  double p_pos = 0.0;
  Vector p_neg;
  Vector p_hat;
};

}  // namespace contrast
