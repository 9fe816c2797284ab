#include "contrast/losses.hpp"

#include <cmath>
#include <gtest/gtest.h>

#include "contrast/gradients.hpp"
#include "contrast/rng.hpp"

namespace contrast {
namespace {

// Frozen expected values computed by direct high-precision evaluation of the
// loss formulas (50-digit arithmetic), rounded to double.
constexpr double kInfoNce_08_02_t05 = 0.26328246733803117;
constexpr double kMaclReweight_08_02_t05 = 1.1374110426068609;
constexpr double kInBatchUniform_t1 = 0.55144471393205109;

LossSpec spec_of(LossVariant v, double tau, bool adaptive = false, bool reweight = false,
                 double alpha = 0.0, double a0 = 0.0) {
  return {v, TemperatureConfig(tau, alpha, a0), adaptive, reweight};
}

UnitEmbeddingBatch random_batch(RngStream& rng, std::size_t n, std::size_t m) {
  Matrix raw(n, m);
  for (double& x : raw.data) x = rng.normal();
  return make_unit_batch(std::move(raw));
}

LogitsRow random_row(RngStream& rng, std::size_t k) {
  LogitsRow row;
  row.pos = rng.uniform(-1.0, 1.0);
  for (std::size_t j = 0; j < k; ++j) row.negs.push_back(rng.uniform(-1.0, 1.0));
  return row;
}

TEST(CosineLogits, SharedPool) {
  Matrix f(1, 2);
  f(0, 0) = 1.0;
  Matrix g(1, 2);
  g(0, 0) = 1.0;
  Matrix pool(1, 2);
  pool(0, 1) = 1.0;
  const auto rows = cosine_logits(UnitEmbeddingBatch{f}, UnitEmbeddingBatch{g},
                                  UnitEmbeddingBatch{pool}, NegativeMode::SharedPool);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].pos, 1.0);
  ASSERT_EQ(rows[0].negs.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].negs[0], 0.0);
}

TEST(CosineLogits, SharedPoolNegativeSimilarity) {
  Matrix f(1, 2);
  f(0, 0) = 1.0;
  Matrix g(1, 2);
  g(0, 1) = 1.0;
  Matrix pool(1, 2);
  pool(0, 0) = -1.0;
  const auto rows = cosine_logits(UnitEmbeddingBatch{f}, UnitEmbeddingBatch{g},
                                  UnitEmbeddingBatch{pool}, NegativeMode::SharedPool);
  EXPECT_DOUBLE_EQ(rows[0].pos, 0.0);
  EXPECT_DOUBLE_EQ(rows[0].negs[0], -1.0);
}

TEST(CosineLogits, RejectsDimensionMismatch) {
  RngStream rng(31, "logits");
  const auto a = random_batch(rng, 3, 2);
  const auto g = random_batch(rng, 3, 3);
  EXPECT_THROW(cosine_logits(a, g, g, NegativeMode::SharedPool), DimensionMismatch);
}

TEST(CosineLogits, PerAnchorOthersExcludesOwnRow) {
  RngStream rng(32, "logits");
  const auto a = random_batch(rng, 4, 8);
  const auto g = random_batch(rng, 4, 8);
  const auto rows = cosine_logits(a, g, g, NegativeMode::PerAnchorOthers);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[i].negs.size(), 3u);
    EXPECT_DOUBLE_EQ(rows[i].pos, dot(a.row(i), g.row(i)));
  }
}

TEST(InfoNceValue, FrozenExample) {
  EXPECT_NEAR(infonce_value({0.8, {0.2}}, 0.5), kInfoNce_08_02_t05, 1e-12);
}

TEST(InfoNceValue, UniformRowGivesLogKPlus1) {
  for (std::size_t k : {1u, 4u, 17u}) {
    const LogitsRow row{0.3, std::vector<double>(k, 0.3)};
    EXPECT_NEAR(infonce_value(row, 0.7), std::log(static_cast<double>(k + 1)), 1e-12);
  }
}

TEST(InfoNceValue, RejectsNonPositiveTau) {
  EXPECT_THROW(infonce_value({0.8, {0.2}}, 0.0), NonPositiveTau);
  EXPECT_THROW(infonce_value({0.8, {0.2}}, -1.0), NonPositiveTau);
}

TEST(DclValue, SingleNegativeReducesToGap) {
  EXPECT_NEAR(dcl_value({0.8, {0.2}}, 0.5), -1.2, 1e-12);
}

TEST(DclValue, EqualPosAndNegIsZero) {
  EXPECT_NEAR(dcl_value({0.44, {0.44}}, 0.3), 0.0, 1e-12);
}

TEST(DclValue, UniformNegativesGiveLogK) {
  const LogitsRow row{0.5, std::vector<double>(8, 0.5)};
  EXPECT_NEAR(dcl_value(row, 0.2), std::log(8.0), 1e-12);
}

TEST(DclValue, MatchesBruteForceIdentity) {
  RngStream rng(33, "dcl");
  for (int trial = 0; trial < 200; ++trial) {
    const LogitsRow row = random_row(rng, 1 + rng.below(16));
    const double tau = rng.uniform(0.05, 2.0);
    double sum = 0.0;
    for (double s : row.negs) sum += std::exp(s / tau);
    EXPECT_NEAR(dcl_value(row, tau), -row.pos / tau + std::log(sum), 1e-12);
  }
}

TEST(MaclBatchValue, ReweightedExample) {
  const auto res = macl_batch_value({{0.8, {0.2}}}, spec_of(LossVariant::MACL, 0.5, false, true));
  EXPECT_NEAR(res.v[0], 4.3201169227365477, 1e-12);
  EXPECT_NEAR(res.mean_loss, kMaclReweight_08_02_t05, 1e-12);
  EXPECT_FALSE(res.clamped);
  EXPECT_DOUBLE_EQ(res.tau_used, 0.5);
}

TEST(MaclBatchValue, PlainEqualsInfoNce) {
  RngStream rng(34, "macl");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LogitsRow> rows(1 + rng.below(6));
    for (auto& row : rows) row = random_row(rng, 1 + rng.below(8));
    const double tau = rng.uniform(0.05, 1.5);
    const auto macl = batch_value(rows, spec_of(LossVariant::MACL, tau));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_NEAR(macl.per_anchor_loss[i], infonce_value(rows[i], tau), 1e-12);
      EXPECT_DOUBLE_EQ(macl.v[i], 1.0);
    }
  }
}

TEST(MaclBatchValue, AdaptiveTemperatureFromBatchAlignment) {
  const std::vector<LogitsRow> rows{{0.9, {0.1}}, {0.7, {0.0}}};
  const auto res = macl_batch_value(rows, spec_of(LossVariant::MACL, 0.1, true, false, 0.5, 0.0));
  EXPECT_NEAR(res.a_batch, 0.8, 1e-15);
  EXPECT_NEAR(res.tau_used, 0.14, 1e-15);
}

TEST(MaclBatchValue, RejectsWrongVariantAndEmptyBatch) {
  EXPECT_THROW(macl_batch_value({{0.5, {0.1}}}, spec_of(LossVariant::InfoNCE, 0.5)),
               InvalidConfig);
  EXPECT_THROW(batch_value({}, spec_of(LossVariant::MACL, 0.5)), EmptyBatch);
}

TEST(BatchValue, MeanIsAnchorAverage) {
  RngStream rng(35, "batch-mean");
  std::vector<LogitsRow> rows(7);
  for (auto& row : rows) row = random_row(rng, 5);
  const auto res = batch_value(rows, spec_of(LossVariant::DCL, 0.3));
  double mean = 0.0;
  for (double v : res.per_anchor_loss) mean += v;
  mean /= static_cast<double>(rows.size());
  EXPECT_NEAR(res.mean_loss, mean, 1e-12);
}

// Softmax shift invariance: a constant added to every logit of a row leaves
// the InfoNCE and MACL values unchanged.
TEST(BatchValue, ShiftStability) {
  RngStream rng(36, "shift");
  for (int trial = 0; trial < 100; ++trial) {
    const LogitsRow row = random_row(rng, 1 + rng.below(16));
    const double tau = rng.uniform(0.05, 2.0);
    const double c = rng.uniform(-1.0, 1.0);
    LogitsRow shifted = row;
    shifted.pos += c;
    for (double& s : shifted.negs) s += c;
    EXPECT_NEAR(infonce_value(row, tau), infonce_value(shifted, tau), 1e-12);
    const auto spec = spec_of(LossVariant::MACL, tau, false, true);
    EXPECT_NEAR(batch_value({row}, spec).mean_loss, batch_value({shifted}, spec).mean_loss,
                1e-12);
  }
}

// Per-anchor MACL loss with reweighting equals InfoNCE / W.
TEST(BatchValue, ReweightIdentity) {
  RngStream rng(37, "reweight-id");
  for (int trial = 0; trial < 200; ++trial) {
    const LogitsRow row = random_row(rng, 1 + rng.below(32));
    const double tau = rng.uniform(0.05, 2.0);
    const auto res = batch_value({row}, spec_of(LossVariant::MACL, tau, false, true));
    const double w = scaling_factor(row, tau);
    EXPECT_NEAR(res.per_anchor_loss[0], infonce_value(row, tau) / w, 1e-12);
  }
}

// The stabilized path agrees with the naive formula wherever the naive one
// does not overflow.
TEST(BatchValue, StabilizedMatchesNaive) {
  RngStream rng(38, "naive");
  for (int trial = 0; trial < 300; ++trial) {
    const LogitsRow row = random_row(rng, 1 + rng.below(16));
    const double tau = rng.uniform(0.05, 2.0);
    double num = std::exp(row.pos / tau);
    double den = num;
    for (double s : row.negs) den += std::exp(s / tau);
    ASSERT_TRUE(std::isfinite(den));
    EXPECT_NEAR(infonce_value(row, tau), -std::log(num / den), 1e-10);
  }
}

TEST(InBatchContrast, TwoIdenticalOrthonormalViews) {
  Matrix views(2, 2);
  views(0, 0) = 1.0;
  views(1, 1) = 1.0;
  const UnitEmbeddingBatch v{views};
  const auto res = inbatch_contrast(v, v, spec_of(LossVariant::InfoNCE, 1.0));
  ASSERT_EQ(res.per_anchor_loss.size(), 4u);
  for (double loss : res.per_anchor_loss) EXPECT_NEAR(loss, kInBatchUniform_t1, 1e-12);
  EXPECT_NEAR(res.mean_loss, kInBatchUniform_t1, 1e-12);
}

TEST(InBatchContrast, RejectsSingletonBatch) {
  Matrix one(1, 2);
  one(0, 0) = 1.0;
  const UnitEmbeddingBatch v{one};
  EXPECT_THROW(inbatch_contrast(v, v, spec_of(LossVariant::InfoNCE, 1.0)), BatchTooSmall);
}

TEST(InBatchContrast, SymmetricUnderViewSwap) {
  RngStream rng(39, "swap");
  for (int trial = 0; trial < 20; ++trial) {
    const auto v1 = random_batch(rng, 3 + rng.below(4), 8);
    const auto v2 = random_batch(rng, v1.size(), 8);
    for (LossVariant variant : {LossVariant::NTXent, LossVariant::DCL, LossVariant::MACL}) {
      const auto spec = spec_of(variant, 0.2, variant == LossVariant::MACL,
                                variant == LossVariant::MACL, 0.5, 0.0);
      EXPECT_NEAR(inbatch_contrast(v1, v2, spec).mean_loss,
                  inbatch_contrast(v2, v1, spec).mean_loss, 1e-12);
    }
  }
}

TEST(InBatchContrast, MaclAlignmentUsesAll2NPositives) {
  RngStream rng(40, "inbatch-a");
  const auto v1 = random_batch(rng, 4, 8);
  const auto v2 = random_batch(rng, 4, 8);
  const auto res = inbatch_contrast(v1, v2, spec_of(LossVariant::MACL, 0.1, true, true, 0.5));
  double mean = 0.0;
  for (std::size_t i = 0; i < 4; ++i) mean += dot(v1.row(i), v2.row(i));
  mean /= 4.0;  // each pair enters twice, so the duplicated mean is unchanged
  EXPECT_NEAR(res.a_batch, mean, 1e-12);
}

TEST(InBatchLayout, NegativeIndexingSkipsSelfAndPositive) {
  RngStream rng(41, "layout");
  const auto v1 = random_batch(rng, 3, 4);
  const auto v2 = random_batch(rng, 3, 4);
  const auto layout = inbatch_logits(v1, v2);
  for (std::size_t a = 0; a < layout.anchors(); ++a) {
    const std::size_t p = layout.positive_of(a);
    for (std::size_t j = 0; j < 2 * layout.n - 2; ++j) {
      const std::size_t e = layout.negative_embedding(a, j);
      EXPECT_NE(e, a);
      EXPECT_NE(e, p);
      EXPECT_LT(e, 2 * layout.n);
      if (j > 0) EXPECT_GT(e, layout.negative_embedding(a, j - 1));
    }
  }
}

}  // namespace
}  // namespace contrast
