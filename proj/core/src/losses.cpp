#include "contrast/losses.hpp"

#include <cmath>
#include <string>

#include "contrast/temperature.hpp"
#include "row_stats.hpp"

namespace contrast {

std::vector<LogitsRow> cosine_logits(const UnitEmbeddingBatch& anchors,
                                     const UnitEmbeddingBatch& pos_keys,
                                     const UnitEmbeddingBatch& neg_keys, NegativeMode mode) {
  if (anchors.size() != pos_keys.size()) {
    throw DimensionMismatch("cosine_logits: anchor and positive-key counts differ");
  }
  if (anchors.dim() != pos_keys.dim() || anchors.dim() != neg_keys.dim()) {
    throw DimensionMismatch("cosine_logits: embedding dimensions differ");
  }
  if (mode == NegativeMode::PerAnchorOthers && neg_keys.size() != anchors.size()) {
    throw DimensionMismatch("cosine_logits: per-anchor negatives need one row per anchor");
  }
  if (neg_keys.size() < (mode == NegativeMode::PerAnchorOthers ? 2u : 1u)) {
    throw EmptyNegatives();
  }

  std::vector<LogitsRow> rows(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    LogitsRow& row = rows[i];
    row.pos = dot(anchors.row(i), pos_keys.row(i));
    if (mode == NegativeMode::SharedPool) {
      row.negs.reserve(neg_keys.size());
      for (std::size_t j = 0; j < neg_keys.size(); ++j) {
        row.negs.push_back(dot(anchors.row(i), neg_keys.row(j)));
      }
    } else {
      row.negs.reserve(neg_keys.size() - 1);
      for (std::size_t j = 0; j < neg_keys.size(); ++j) {
        if (j == i) continue;
        row.negs.push_back(dot(anchors.row(i), neg_keys.row(j)));
      }
    }
  }
  return rows;
}

double infonce_value(const LogitsRow& row, double tau) {
  const auto st = detail::row_stats(row, tau);
  return detail::infonce_from_stats(st, row, tau);
}

double dcl_value(const LogitsRow& row, double tau) {
  detail::require_tau(tau);
  if (row.negs.empty()) throw EmptyNegatives();
  double max_neg = row.negs.front();
  for (double s : row.negs) max_neg = std::max(max_neg, s);
  double sum = 0.0;
  for (double s : row.negs) sum += std::exp((s - max_neg) / tau);
  return -row.pos / tau + max_neg / tau + std::log(sum);
}

BatchLossResult batch_value(const std::vector<LogitsRow>& rows, const LossSpec& spec) {
  if (rows.empty()) throw EmptyBatch();
  detail::require_tau(spec.temperature.tau0);

  BatchLossResult out;
  double pos_sum = 0.0;
  for (const LogitsRow& row : rows) pos_sum += row.pos;
  out.a_batch = pos_sum / static_cast<double>(rows.size());

  out.tau_used = spec.temperature.tau0;
  out.clamped = false;
  if (spec.variant == LossVariant::MACL && spec.adaptive) {
    const AdaptiveTau t = adaptive_temperature(out.a_batch, spec.temperature);
    out.tau_used = t.tau;
    out.clamped = t.clamped;
  }

  out.per_anchor_loss.resize(rows.size());
  out.v.assign(rows.size(), 1.0);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const LogitsRow& row = rows[i];
    double value = 0.0;
    switch (spec.variant) {
      case LossVariant::InfoNCE:
      case LossVariant::NTXent:
        value = infonce_value(row, out.tau_used);
        break;
      case LossVariant::DCL:
        value = dcl_value(row, out.tau_used);
        break;
      case LossVariant::MACL: {
        const auto st = detail::row_stats(row, out.tau_used);
        if (spec.reweight) out.v[i] = 1.0 / detail::w_from_stats(st);
        value = out.v[i] * detail::infonce_from_stats(st, row, out.tau_used);
        break;
      }
    }
    out.per_anchor_loss[i] = value;
    loss_sum += value;
  }
  out.mean_loss = loss_sum / static_cast<double>(rows.size());
  return out;
}

BatchLossResult macl_batch_value(const std::vector<LogitsRow>& rows, const LossSpec& spec) {
  if (spec.variant != LossVariant::MACL) {
    throw InvalidConfig("macl_batch_value needs spec.variant == MACL");
  }
  return batch_value(rows, spec);
}

std::size_t InBatchLayout::negative_embedding(std::size_t anchor, std::size_t j) const {
  const std::size_t p = positive_of(anchor);
  const std::size_t lo = std::min(anchor, p);
  const std::size_t hi = std::max(anchor, p);
  if (j < lo) return j;
  if (j + 1 < hi) return j + 1;
  return j + 2;
}

InBatchLayout inbatch_logits(const UnitEmbeddingBatch& view1, const UnitEmbeddingBatch& view2) {
  if (view1.dim() != view2.dim()) {
    throw DimensionMismatch("inbatch_logits: embedding dimensions differ");
  }
  if (view1.size() != view2.size()) {
    throw DimensionMismatch("inbatch_logits: view sizes differ");
  }
  const std::size_t n = view1.size();
  if (n < 2) throw BatchTooSmall(n);

  auto embedding = [&](std::size_t e) {
    return e < n ? view1.row(e) : view2.row(e - n);
  };

  InBatchLayout layout;
  layout.n = n;
  layout.rows.resize(2 * n);
  for (std::size_t a = 0; a < 2 * n; ++a) {
    LogitsRow& row = layout.rows[a];
    const std::size_t p = layout.positive_of(a);
    row.pos = dot(embedding(a), embedding(p));
    row.negs.reserve(2 * n - 2);
    for (std::size_t e = 0; e < 2 * n; ++e) {
      if (e == a || e == p) continue;
      row.negs.push_back(dot(embedding(a), embedding(e)));
    }
  }
  return layout;
}

BatchLossResult inbatch_contrast(const UnitEmbeddingBatch& view1, const UnitEmbeddingBatch& view2,
                                 const LossSpec& spec) {
  return batch_value(inbatch_logits(view1, view2).rows, spec);
}

}  // namespace contrast
