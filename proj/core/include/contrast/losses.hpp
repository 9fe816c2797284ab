#pragma once

#include <cstddef>
#include <vector>

#include "contrast/types.hpp"

namespace contrast {

/// Forward value of one optimization step over a batch of logits rows.
/// v holds the per-anchor reweighting factors (all 1 unless MACL reweighting
/// is on); tau_used is the temperature the softmax actually saw.
struct BatchLossResult {
  double mean_loss = 0.0;
  std::vector<double> per_anchor_loss;
  double tau_used = 0.0;
  double a_batch = 0.0;
  std::vector<double> v;
  bool clamped = false;
};

/// How negatives are drawn when pairing an anchor batch with key batches.
/// PerAnchorOthers: anchor i's negatives are the rows j != i of the negative
/// batch (SimCLR-style). SharedPool: every row of the pool is a negative for
/// every anchor (MoCo-style queue).
enum class NegativeMode { PerAnchorOthers, SharedPool };

/// Builds per-anchor logits rows: pos = f_i . g_i, negs per `mode`.
std::vector<LogitsRow> cosine_logits(const UnitEmbeddingBatch& anchors,
                                     const UnitEmbeddingBatch& pos_keys,
                                     const UnitEmbeddingBatch& neg_keys, NegativeMode mode);

/// InfoNCE value -log(exp(pos/tau) / (exp(pos/tau) + sum exp(neg/tau))),
/// max-logit stabilized. Strictly positive for finite logits.
double infonce_value(const LogitsRow& row, double tau);

/// Decoupled value -pos/tau + log(sum exp(neg/tau)); may be negative.
double dcl_value(const LogitsRow& row, double tau);

/// Forward pass of any LossSpec over a batch of rows:
///   1. a_batch = mean of pos over rows (a constant for differentiation);
///   2. tau_used = adaptive rule for MACL with adaptive on, else tau0;
///   3. per-anchor value of the variant at tau_used, with the MACL
///      reweighting factor v_i = 1/(1 - p_pos) also held constant;
///   4. mean over anchors, summed in row order.
BatchLossResult batch_value(const std::vector<LogitsRow>& rows, const LossSpec& spec);

/// batch_value restricted to spec.variant == MACL.
BatchLossResult macl_batch_value(const std::vector<LogitsRow>& rows, const LossSpec& spec);

/// Index layout of the symmetric in-batch construction over two views of the
/// same N instances. Embedding e in [0, 2N) is view1 row e for e < N and
/// view2 row e - N otherwise. Anchor a's positive is its counterpart
/// (a + N) mod 2N; its negatives are the other 2N - 2 embeddings in
/// ascending embedding order.
struct InBatchLayout {
  std::size_t n = 0;  // instances per view
  std::vector<LogitsRow> rows;

  std::size_t anchors() const { return 2 * n; }
  std::size_t positive_of(std::size_t anchor) const { return (anchor + n) % (2 * n); }
  /// Embedding index of the j-th negative of `anchor`.
  std::size_t negative_embedding(std::size_t anchor, std::size_t j) const;
};

/// Builds the 2N logits rows of the symmetric construction.
InBatchLayout inbatch_logits(const UnitEmbeddingBatch& view1, const UnitEmbeddingBatch& view2);

/// Symmetric in-batch loss: mean of the per-row loss of `spec` over all 2N
/// anchors. For MACL a single tau_used and a_batch are computed from all 2N
/// positive similarities (each pair counted from both sides).
BatchLossResult inbatch_contrast(const UnitEmbeddingBatch& view1, const UnitEmbeddingBatch& view2,
                                 const LossSpec& spec);

}  // namespace contrast
