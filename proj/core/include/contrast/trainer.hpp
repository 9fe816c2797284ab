#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "contrast/datagen.hpp"
#include "contrast/losses.hpp"
#include "contrast/matrix.hpp"
#include "contrast/rng.hpp"
#include "contrast/types.hpp"

namespace contrast {

struct AffineLayer {
  Matrix weight;  // (in, out)
  Vector bias;    // (out)
};

/// One or two affine maps with elementwise max(0, .) between, output rows
/// L2-normalized onto S^{m-1}.
struct EncoderParams {
  std::vector<AffineLayer> layers;

  std::size_t input_dim() const { return layers.front().weight.rows; }
  std::size_t output_dim() const { return layers.back().weight.cols; }
};

/// Xavier-uniform initialization from the given stream.
EncoderParams make_encoder(std::size_t d_in, std::optional<std::size_t> hidden, std::size_t m,
                           RngStream& init);

/// Activations recorded by the forward pass for exact backpropagation.
struct ForwardCache {
  Matrix input;
  Matrix hidden_pre;   // pre-ReLU, 2-layer encoders only
  Matrix hidden_post;  // post-ReLU, 2-layer encoders only
  Matrix pre_norm;     // affine output before row normalization
  Vector inv_norm;     // 1 / ||row|| of pre_norm
  Matrix unit;         // normalized output rows
};

/// batch is (B, d_in); returns unit rows (B, m). Throws DimensionMismatch on
/// width mismatch and NonFiniteOutput when a row cannot be normalized or the
/// affine output is non-finite.
UnitEmbeddingBatch encoder_forward(const EncoderParams& params, const Matrix& batch,
                                   ForwardCache* cache = nullptr);

struct ParamGrads {
  std::vector<AffineLayer> layers;  // same shapes as the parameters
};

/// Exact gradients of sum_i  d_embeddings_i . e_i  w.r.t. the parameters,
/// chaining through the row normalization via J = (I - u u^T) / ||z||.
ParamGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                            const Matrix& d_embeddings);

void accumulate(ParamGrads& into, const ParamGrads& from);

/// target <- m_enc * target + (1 - m_enc) * online, elementwise.
void momentum_step(const EncoderParams& online, EncoderParams& target, double m_enc);

/// FIFO buffer of past key embeddings. Starts filled with seeded random unit
/// vectors so the loss is defined from the first step; contents are always
/// treated as constants (no gradient flows into the queue).
class NegativeQueue {
 public:
  NegativeQueue(std::size_t capacity, std::size_t dim, RngStream& rng);

  /// Inserts keys row by row, evicting the oldest entries.
  void push(const UnitEmbeddingBatch& keys);

  /// Contents in slot order (fixed regardless of insertion history length).
  UnitEmbeddingBatch snapshot() const;

  std::size_t capacity() const { return data_.rows; }

 private:
  Matrix data_;
  std::size_t head_ = 0;
};

enum class Framework { InBatch, Queue };
enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  LossSpec spec;
  Framework framework = Framework::InBatch;
  std::size_t batch_size = 64;
  std::size_t queue_size = 256;
  double encoder_momentum = 0.999;  // queue framework only
  double lr = 0.5;
  LrSchedule lr_schedule = LrSchedule::Constant;
  double sgd_momentum = 0.9;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  std::size_t eval_k = 200;  // scaled down to n/2 for tiny datasets
  // Encoder architecture (stand-in for the paper-scale networks).
  std::optional<std::size_t> hidden_dim;
  std::size_t embed_dim = 16;
};

struct EpochStats {
  double mean_loss = 0.0;
  double a_batch_mean = 0.0;
  double tau_used_mean = 0.0;
  std::size_t clamp_count = 0;
  double alignment_loss = 0.0;
  double uniformity = 0.0;
  double knn_accuracy = 0.0;
};

struct RunRecord {
  std::vector<EpochStats> epochs;
  EncoderParams final_params;
};

/// Deterministic training loop: seeded shuffles, two-view augmentation,
/// forward/backward through the hand-derived encoder, SGD with momentum,
/// and per-epoch evaluation. Queue mode adds the momentum key encoder and
/// the negative queue. Throws NonFiniteLoss (with epoch/batch in the
/// message) when the loss diverges.
RunRecord train_run(const LabeledDataset& data, const AugmentConfig& aug, const TrainConfig& cfg);

struct EvalMetrics {
  double alignment_loss = 0.0;
  double uniformity = 0.0;
  double knn_accuracy = 0.0;
};

inline constexpr std::size_t kUniformityCap = 2048;
inline constexpr std::uint64_t kEvalDrawBase = 0x8000000000000000ULL;

/// alignment: mean squared distance of freshly augmented view pairs;
/// uniformity: log mean over distinct pairs of exp(-2 ||u - v||^2) on at
/// most `kUniformityCap` points; knn: leave-one-out majority vote over the
/// eval_k cosine-nearest neighbors, ties broken by lowest class id.
EvalMetrics evaluate(const EncoderParams& params, const LabeledDataset& data,
                     const AugmentConfig& aug, std::size_t eval_k,
                     std::uint64_t eval_draw_base = kEvalDrawBase);

double knn_accuracy(const UnitEmbeddingBatch& embeddings, const std::vector<int>& labels,
                    int num_classes, std::size_t k);
double uniformity_metric(const UnitEmbeddingBatch& embeddings, std::size_t cap = kUniformityCap);

/// Flat little-endian parameter snapshot (magic, layer count, per layer
/// in/out dims + weights + bias).
void save_params(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_params(const std::filesystem::path& path);

}  // namespace contrast
