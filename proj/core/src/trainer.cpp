#include "contrast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "contrast/gradients.hpp"
#include "contrast/temperature.hpp"

namespace contrast {

namespace {

constexpr std::uint32_t kParamsMagic = 0x434C5053;  // "SPLC" little-endian bytes
constexpr double kPi = 3.14159265358979323846;

Vector column_sums(const Matrix& m) {
  Vector sums(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) sums[j] += row[j];
  }
  return sums;
}

void add_bias_rows(Matrix& m, const Vector& bias) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias[j];
  }
}

AffineLayer xavier_layer(std::size_t in, std::size_t out, RngStream& rng) {
  AffineLayer layer;
  layer.weight = Matrix(in, out);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
  layer.bias.assign(out, 0.0);
  return layer;
}

ParamGrads zero_grads(const EncoderParams& params) {
  ParamGrads g;
  g.layers.reserve(params.layers.size());
  for (const AffineLayer& l : params.layers) {
    AffineLayer z;
    z.weight = Matrix(l.weight.rows, l.weight.cols);
    z.bias.assign(l.bias.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

}  // namespace

EncoderParams make_encoder(std::size_t d_in, std::optional<std::size_t> hidden, std::size_t m,
                           RngStream& init) {
  if (d_in < 1 || m < 2 || (hidden && *hidden < 1)) {
    throw InvalidConfig("encoder needs d_in >= 1, m >= 2 and a positive hidden width");
  }
  EncoderParams params;
  if (hidden) {
    params.layers.push_back(xavier_layer(d_in, *hidden, init));
    params.layers.push_back(xavier_layer(*hidden, m, init));
  } else {
    params.layers.push_back(xavier_layer(d_in, m, init));
  }
  return params;
}

UnitEmbeddingBatch encoder_forward(const EncoderParams& params, const Matrix& batch,
                                   ForwardCache* cache) {
  if (params.layers.empty() || params.layers.size() > 2) {
    throw InvalidConfig("encoder supports one or two affine layers");
  }
  if (batch.cols != params.input_dim()) {
    throw DimensionMismatch("encoder_forward: batch width " + std::to_string(batch.cols) +
                            " != input dim " + std::to_string(params.input_dim()));
  }

  Matrix pre = matmul(batch, params.layers.front().weight);
  add_bias_rows(pre, params.layers.front().bias);

  Matrix hidden_pre;
  Matrix hidden_post;
  if (params.layers.size() == 2) {
    hidden_pre = pre;
    hidden_post = pre;
    for (double& x : hidden_post.data) x = std::max(0.0, x);
    pre = matmul(hidden_post, params.layers.back().weight);
    add_bias_rows(pre, params.layers.back().bias);
  }

  Matrix unit = pre;
  Vector inv_norm(pre.rows);
  for (std::size_t i = 0; i < pre.rows; ++i) {
    const double n = norm(pre.row(i));
    if (!std::isfinite(n) || n <= 1e-12) {
      throw NonFiniteOutput("encoder output row " + std::to_string(i) +
                            " cannot be normalized (norm = " + std::to_string(n) + ")");
    }
    inv_norm[i] = 1.0 / n;
    for (double& x : unit.row(i)) x *= inv_norm[i];
  }

  if (cache) {
    cache->input = batch;
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden_post = std::move(hidden_post);
    cache->pre_norm = std::move(pre);
    cache->inv_norm = std::move(inv_norm);
    cache->unit = unit;
  }
  return UnitEmbeddingBatch{std::move(unit)};
}

ParamGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                            const Matrix& d_embeddings) {
  if (!d_embeddings.same_shape(cache.unit)) {
    throw ShapeMismatch("encoder_backward: upstream gradient shape mismatch");
  }

  // Through the row normalization: dz = (du - (du . u) u) / ||z||.
  Matrix dz(d_embeddings.rows, d_embeddings.cols);
  for (std::size_t i = 0; i < d_embeddings.rows; ++i) {
    const auto du = d_embeddings.row(i);
    const auto u = cache.unit.row(i);
    const double proj = dot(du, u);
    auto out = dz.row(i);
    for (std::size_t j = 0; j < du.size(); ++j) out[j] = cache.inv_norm[i] * (du[j] - proj * u[j]);
  }

  ParamGrads grads = zero_grads(params);
  if (params.layers.size() == 2) {
    grads.layers[1].weight = matmul_tn(cache.hidden_post, dz);
    grads.layers[1].bias = column_sums(dz);
    Matrix dh = matmul_nt(dz, params.layers[1].weight);
    for (std::size_t i = 0; i < dh.data.size(); ++i) {
      if (cache.hidden_pre.data[i] <= 0.0) dh.data[i] = 0.0;
    }
    grads.layers[0].weight = matmul_tn(cache.input, dh);
    grads.layers[0].bias = column_sums(dh);
  } else {
    grads.layers[0].weight = matmul_tn(cache.input, dz);
    grads.layers[0].bias = column_sums(dz);
  }
  return grads;
}

void accumulate(ParamGrads& into, const ParamGrads& from) {
  if (into.layers.size() != from.layers.size()) {
    throw ShapeMismatch("accumulate: layer counts differ");
  }
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    auto& a = into.layers[l];
    const auto& b = from.layers[l];
    if (!a.weight.same_shape(b.weight) || a.bias.size() != b.bias.size()) {
      throw ShapeMismatch("accumulate: layer shapes differ");
    }
    for (std::size_t i = 0; i < a.weight.data.size(); ++i) a.weight.data[i] += b.weight.data[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  }
}

void momentum_step(const EncoderParams& online, EncoderParams& target, double m_enc) {
  if (!(m_enc >= 0.0 && m_enc < 1.0)) throw InvalidConfig("encoder momentum must lie in [0, 1)");
  if (online.layers.size() != target.layers.size()) {
    throw ShapeMismatch("momentum_step: layer counts differ");
  }
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    const auto& src = online.layers[l];
    auto& dst = target.layers[l];
    if (!src.weight.same_shape(dst.weight) || src.bias.size() != dst.bias.size()) {
      throw ShapeMismatch("momentum_step: layer shapes differ");
    }
    for (std::size_t i = 0; i < dst.weight.data.size(); ++i) {
      dst.weight.data[i] = m_enc * dst.weight.data[i] + (1.0 - m_enc) * src.weight.data[i];
    }
    for (std::size_t i = 0; i < dst.bias.size(); ++i) {
      dst.bias[i] = m_enc * dst.bias[i] + (1.0 - m_enc) * src.bias[i];
    }
  }
}

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim, RngStream& rng) {
  if (capacity < 1 || dim < 2) throw InvalidConfig("queue needs capacity >= 1 and dim >= 2");
  data_ = Matrix(capacity, dim);
  for (std::size_t i = 0; i < capacity; ++i) {
    for (double& x : data_.row(i)) x = rng.normal();
    const double n = norm(data_.row(i));
    for (double& x : data_.row(i)) x /= n;
  }
}

void NegativeQueue::push(const UnitEmbeddingBatch& keys) {
  if (keys.dim() != data_.cols) throw DimensionMismatch("queue_push: key dimension mismatch");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto slot = data_.row(head_);
    const auto key = keys.row(i);
    std::copy(key.begin(), key.end(), slot.begin());
    head_ = (head_ + 1) % data_.rows;
  }
}

UnitEmbeddingBatch NegativeQueue::snapshot() const { return UnitEmbeddingBatch{data_}; }

double knn_accuracy(const UnitEmbeddingBatch& embeddings, const std::vector<int>& labels,
                    int num_classes, std::size_t k) {
  const std::size_t n = embeddings.size();
  if (n != labels.size()) throw ShapeMismatch("knn: embedding and label counts differ");
  if (n < 2 || num_classes < 1) throw InvalidConfig("knn needs n >= 2 and C >= 1");
  k = std::max<std::size_t>(1, std::min(k, n - 1));

  std::size_t correct = 0;
  std::vector<std::pair<double, std::size_t>> sims;
  sims.reserve(n - 1);
  std::vector<std::size_t> votes(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    sims.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sims.emplace_back(dot(embeddings.row(i), embeddings.row(j)), j);
    }
    auto better = [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    };
    std::nth_element(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k - 1), sims.end(),
                     better);
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t r = 0; r < k; ++r) votes[static_cast<std::size_t>(labels[sims[r].second])]++;
    // Majority vote, ties resolved toward the lowest class id.
    std::size_t winner = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
      if (votes[c] > votes[winner]) winner = c;
    }
    if (static_cast<int>(winner) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double uniformity_metric(const UnitEmbeddingBatch& embeddings, std::size_t cap) {
  const std::size_t n = std::min(embeddings.size(), cap);
  if (n < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += std::exp(-2.0 * squared_distance(embeddings.row(i), embeddings.row(j)));
      ++pairs;
    }
  }
  return std::log(sum / static_cast<double>(pairs));
}

EvalMetrics evaluate(const EncoderParams& params, const LabeledDataset& data,
                     const AugmentConfig& aug, std::size_t eval_k, std::uint64_t eval_draw_base) {
  if (data.size() == 0) throw EmptyInput();
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  Matrix view_a(n, d);
  Matrix view_b(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto [a, b] = two_view_augment(data.points.row(i), aug, eval_draw_base + i);
    std::copy(a.begin(), a.end(), view_a.row(i).begin());
    std::copy(b.begin(), b.end(), view_b.row(i).begin());
  }

  EvalMetrics metrics;
  const UnitEmbeddingBatch ea = encoder_forward(params, view_a);
  const UnitEmbeddingBatch eb = encoder_forward(params, view_b);
  metrics.alignment_loss = alignment_loss(ea, eb);

  const UnitEmbeddingBatch embeddings = encoder_forward(params, data.points);
  metrics.uniformity = uniformity_metric(embeddings);
  const std::size_t k = std::max<std::size_t>(1, std::min(eval_k, n / 2));
  metrics.knn_accuracy = knn_accuracy(embeddings, data.labels, data.num_classes, k);
  return metrics;
}

namespace {

struct BatchOutcome {
  BatchLossResult loss;
  ParamGrads grads;
};

/// SimCLR-style step: both views through the online encoder, symmetric
/// in-batch loss, every embedding accumulating its anchor / positive-key /
/// negative-key roles.
BatchOutcome inbatch_step(const EncoderParams& online, const Matrix& view_a, const Matrix& view_b,
                          const LossSpec& spec) {
  ForwardCache cache_a;
  ForwardCache cache_b;
  const UnitEmbeddingBatch ea = encoder_forward(online, view_a, &cache_a);
  const UnitEmbeddingBatch eb = encoder_forward(online, view_b, &cache_b);

  const InBatchLayout layout = inbatch_logits(ea, eb);
  BatchOutcome out{batch_value(layout.rows, spec), {}};

  const std::size_t n = layout.n;
  const std::size_t two_n = 2 * n;
  const std::size_t m = ea.dim();
  const double inv_anchors = 1.0 / static_cast<double>(two_n);

  auto embedding = [&](std::size_t e) { return e < n ? ea.row(e) : eb.row(e - n); };

  Matrix d_embed(two_n, m);
  Matrix negs(two_n - 2, m);
  for (std::size_t a = 0; a < two_n; ++a) {
    const std::size_t p = layout.positive_of(a);
    for (std::size_t j = 0; j < two_n - 2; ++j) {
      const auto src = embedding(layout.negative_embedding(a, j));
      std::copy(src.begin(), src.end(), negs.row(j).begin());
    }
    const GradientReport rep =
        analytic_gradients(embedding(a), embedding(p), negs, spec, out.loss.tau_used);
    auto da = d_embed.row(a);
    for (std::size_t c = 0; c < m; ++c) da[c] += inv_anchors * rep.d_anchor[c];
    auto dp = d_embed.row(p);
    for (std::size_t c = 0; c < m; ++c) dp[c] += inv_anchors * rep.d_pos_key[c];
    for (std::size_t j = 0; j < two_n - 2; ++j) {
      auto dn = d_embed.row(layout.negative_embedding(a, j));
      for (std::size_t c = 0; c < m; ++c) dn[c] += inv_anchors * rep.d_neg_keys(j, c);
    }
  }

  Matrix d_ea(n, m);
  Matrix d_eb(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(d_embed.row(i).begin(), d_embed.row(i).end(), d_ea.row(i).begin());
    std::copy(d_embed.row(i + n).begin(), d_embed.row(i + n).end(), d_eb.row(i).begin());
  }
  out.grads = encoder_backward(online, cache_a, d_ea);
  accumulate(out.grads, encoder_backward(online, cache_b, d_eb));
  return out;
}

/// MoCo-style step: anchors from the online encoder, positive keys from the
/// momentum encoder, negatives from the queue; only anchors carry gradient.
BatchOutcome queue_step(const EncoderParams& online, const EncoderParams& target,
                        const Matrix& view_a, const Matrix& view_b, const NegativeQueue& queue,
                        const LossSpec& spec, UnitEmbeddingBatch* keys_out) {
  ForwardCache cache;
  const UnitEmbeddingBatch anchors = encoder_forward(online, view_a, &cache);
  UnitEmbeddingBatch keys = encoder_forward(target, view_b);
  const UnitEmbeddingBatch pool = queue.snapshot();

  const auto rows = cosine_logits(anchors, keys, pool, NegativeMode::SharedPool);
  BatchOutcome out{batch_value(rows, spec), {}};

  const std::size_t n = anchors.size();
  const std::size_t m = anchors.dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix d_anchors(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const GradientReport rep =
        analytic_gradients(anchors.row(i), keys.row(i), pool.data, spec, out.loss.tau_used);
    auto row = d_anchors.row(i);
    for (std::size_t c = 0; c < m; ++c) row[c] = inv_n * rep.d_anchor[c];
  }
  out.grads = encoder_backward(online, cache, d_anchors);
  *keys_out = std::move(keys);
  return out;
}

void sgd_update(EncoderParams& params, ParamGrads& velocity, const ParamGrads& grads,
                double momentum, double lr) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& v = velocity.layers[l];
    const auto& g = grads.layers[l];
    auto& p = params.layers[l];
    for (std::size_t i = 0; i < p.weight.data.size(); ++i) {
      v.weight.data[i] = momentum * v.weight.data[i] + g.weight.data[i];
      p.weight.data[i] -= lr * v.weight.data[i];
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      v.bias[i] = momentum * v.bias[i] + g.bias[i];
      p.bias[i] -= lr * v.bias[i];
    }
  }
}

}  // namespace

RunRecord train_run(const LabeledDataset& data, const AugmentConfig& aug, const TrainConfig& cfg) {
  if (data.size() == 0) throw EmptyInput();
  if (cfg.batch_size < 1 || data.size() < cfg.batch_size) {
    throw InvalidConfig("train_run: need 1 <= batch_size <= n");
  }
  if (cfg.framework == Framework::InBatch && cfg.batch_size < 2) {
    throw BatchTooSmall(cfg.batch_size);
  }
  if (cfg.framework == Framework::Queue) {
    if (cfg.queue_size < 1) throw InvalidConfig("queue framework needs queue_size >= 1");
    if (!(cfg.encoder_momentum >= 0.0 && cfg.encoder_momentum < 1.0)) {
      throw InvalidConfig("encoder momentum must lie in [0, 1)");
    }
  }

  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  RngStream init_rng(cfg.seed, "init");
  EncoderParams online = make_encoder(d, cfg.hidden_dim, cfg.embed_dim, init_rng);
  EncoderParams target;
  std::optional<NegativeQueue> queue;
  if (cfg.framework == Framework::Queue) {
    target = online;  // key encoder starts as a copy of the query encoder
    RngStream queue_rng(cfg.seed, "queue");
    queue.emplace(cfg.queue_size, cfg.embed_dim, queue_rng);
  }
  ParamGrads velocity = zero_grads(online);

  RunRecord record;
  record.epochs.reserve(cfg.epochs);

  std::vector<std::size_t> order(n);
  const std::size_t batches = n / cfg.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle_rng(cfg.seed, "shuffle", epoch);
    shuffle_rng.shuffle(order);

    double lr = cfg.lr;
    if (cfg.lr_schedule == LrSchedule::Cosine && cfg.epochs > 1) {
      lr = cfg.lr * 0.5 *
           (1.0 + std::cos(kPi * static_cast<double>(epoch) / static_cast<double>(cfg.epochs)));
    }

    EpochStats stats;
    Matrix view_a(cfg.batch_size, d);
    Matrix view_b(cfg.batch_size, d);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t r = 0; r < cfg.batch_size; ++r) {
        const std::size_t idx = order[b * cfg.batch_size + r];
        auto [va, vb] = two_view_augment(data.points.row(idx), aug,
                                         static_cast<std::uint64_t>(epoch) * n + idx);
        std::copy(va.begin(), va.end(), view_a.row(r).begin());
        std::copy(vb.begin(), vb.end(), view_b.row(r).begin());
      }

      BatchOutcome outcome;
      UnitEmbeddingBatch keys;
      try {
        if (cfg.framework == Framework::InBatch) {
          outcome = inbatch_step(online, view_a, view_b, cfg.spec);
        } else {
          outcome = queue_step(online, target, view_a, view_b, *queue, cfg.spec, &keys);
        }
      } catch (const NonFiniteOutput& e) {
        throw NonFiniteLoss("non-finite state at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(b) + ": " + e.what());
      }
      if (!std::isfinite(outcome.loss.mean_loss)) {
        throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(b));
      }

      sgd_update(online, velocity, outcome.grads, cfg.sgd_momentum, lr);
      if (cfg.framework == Framework::Queue) {
        momentum_step(online, target, cfg.encoder_momentum);
        queue->push(keys);
      }

      stats.mean_loss += outcome.loss.mean_loss;
      stats.a_batch_mean += outcome.loss.a_batch;
      stats.tau_used_mean += outcome.loss.tau_used;
      stats.clamp_count += outcome.loss.clamped ? 1 : 0;
    }
    if (batches > 0) {
      stats.mean_loss /= static_cast<double>(batches);
      stats.a_batch_mean /= static_cast<double>(batches);
      stats.tau_used_mean /= static_cast<double>(batches);
    }

    EvalMetrics metrics;
    try {
      metrics = evaluate(online, data, aug, cfg.eval_k,
                         kEvalDrawBase + static_cast<std::uint64_t>(epoch) * n);
    } catch (const NonFiniteOutput& e) {
      throw NonFiniteLoss("non-finite evaluation after epoch " + std::to_string(epoch) + ": " +
                          e.what());
    }
    stats.alignment_loss = metrics.alignment_loss;
    stats.uniformity = metrics.uniformity;
    stats.knn_accuracy = metrics.knn_accuracy;
    record.epochs.push_back(stats);
  }

  record.final_params = std::move(online);
  return record;
}

void save_params(const std::filesystem::path& path, const EncoderParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::uint32_t magic = kParamsMagic;
  const std::uint32_t layer_count = static_cast<std::uint32_t>(params.layers.size());
  out.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  out.write(reinterpret_cast<const char*>(&layer_count), sizeof(layer_count));
  for (const AffineLayer& l : params.layers) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(l.weight.rows),
                                   static_cast<std::uint32_t>(l.weight.cols)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(l.weight.data.data()),
              static_cast<std::streamsize>(l.weight.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l.bias.data()),
              static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
  }
  if (!out) throw Error("short write to " + path.string());
}

EncoderParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::uint32_t magic = 0;
  std::uint32_t layer_count = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&layer_count), sizeof(layer_count));
  if (!in || magic != kParamsMagic || layer_count < 1 || layer_count > 2) {
    throw MalformedRecord("bad parameter snapshot header");
  }
  EncoderParams params;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    std::uint32_t dims[2] = {};
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    AffineLayer layer;
    layer.weight = Matrix(dims[0], dims[1]);
    layer.bias.assign(dims[1], 0.0);
    in.read(reinterpret_cast<char*>(layer.weight.data.data()),
            static_cast<std::streamsize>(layer.weight.data.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(layer.bias.data()),
            static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
    if (!in) throw MalformedRecord("parameter snapshot truncated");
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace contrast
