#include "contrast/gradients.hpp"

#include <cmath>
#include <string>

#include "row_stats.hpp"

namespace contrast {

SoftmaxProbs softmax_probs(const LogitsRow& row, double tau) {
  const auto st = detail::row_stats(row, tau);
  SoftmaxProbs out;
  out.p_pos = st.a_pos / st.z;
  out.p_neg.resize(st.a_neg.size());
  for (std::size_t j = 0; j < st.a_neg.size(); ++j) out.p_neg[j] = st.a_neg[j] / st.z;
  return out;
}

double scaling_factor(const LogitsRow& row, double tau) {
  const auto st = detail::row_stats(row, tau);
  return detail::w_from_stats(st);
}

std::vector<double> hardness_weights(const LogitsRow& row, double tau) {
  return detail::hardness_from_row(row, tau);
}

GradientReport analytic_gradients(std::span<const double> anchor, std::span<const double> pos_key,
                                  const Matrix& neg_keys, const LossSpec& spec, double tau_used) {
  detail::require_tau(tau_used);
  const std::size_t m = anchor.size();
  if (pos_key.size() != m || neg_keys.cols != m) {
    throw DimensionMismatch("analytic_gradients: embedding dimensions differ");
  }
  if (neg_keys.rows == 0) throw EmptyNegatives();

  LogitsRow row;
  row.pos = dot(anchor, pos_key);
  row.negs.reserve(neg_keys.rows);
  for (std::size_t j = 0; j < neg_keys.rows; ++j) row.negs.push_back(dot(anchor, neg_keys.row(j)));

  const auto st = detail::row_stats(row, tau_used);
  GradientReport rep;
  rep.w = detail::w_from_stats(st);
  rep.p_pos = st.a_pos / st.z;
  rep.p_neg.resize(row.k());
  for (std::size_t j = 0; j < row.k(); ++j) rep.p_neg[j] = st.a_neg[j] / st.z;
  rep.p_hat = detail::hardness_from_row(row, tau_used);

  // DCL has no scaling factor; MACL's detached 1/W weight cancels it.
  double scale = rep.w;
  if (spec.variant == LossVariant::DCL || (spec.variant == LossVariant::MACL && spec.reweight)) {
    scale = 1.0;
  }
  scale /= tau_used;

  rep.d_anchor.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    double weighted = 0.0;
    for (std::size_t j = 0; j < row.k(); ++j) weighted += rep.p_hat[j] * neg_keys(j, k);
    rep.d_anchor[k] = -scale * (pos_key[k] - weighted);
  }
  rep.d_pos_key.resize(m);
  for (std::size_t k = 0; k < m; ++k) rep.d_pos_key[k] = -scale * anchor[k];
  rep.d_neg_keys = Matrix(row.k(), m);
  for (std::size_t j = 0; j < row.k(); ++j) {
    for (std::size_t k = 0; k < m; ++k) rep.d_neg_keys(j, k) = scale * rep.p_hat[j] * anchor[k];
  }
  return rep;
}

double dw_dtau_sign_term(const LogitsRow& row, double tau) {
  const auto st = detail::row_stats(row, tau);
  double term = 0.0;
  for (std::size_t j = 0; j < row.k(); ++j) term += (row.pos - row.negs[j]) * st.a_neg[j];
  return term;
}

double dw_dtau(const LogitsRow& row, double tau) {
  const auto st = detail::row_stats(row, tau);
  double term = 0.0;
  for (std::size_t j = 0; j < row.k(); ++j) term += (row.pos - row.negs[j]) * st.a_neg[j];
  // The max-logit factors cancel between E_i * sum and (sum E)^2.
  return term * st.a_pos / (st.z * st.z) / (tau * tau);
}

std::vector<double> finite_difference(const ScalarFn& fn, const std::vector<double>& point,
                                      const FiniteDiffConfig& cfg) {
  std::vector<double> x = point;
  std::vector<double> grad(point.size());
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + cfg.step;
    const double hi = fn(x);
    x[k] = orig - cfg.step;
    const double lo = fn(x);
    x[k] = orig;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw NonFiniteLoss("finite_difference: non-finite probe at coordinate " + std::to_string(k));
    }
    grad[k] = (hi - lo) / (2.0 * cfg.step);
  }
  return grad;
}

bool close(double a, double b, double rel_tol, double abs_tol) {
  return std::abs(a - b) <= abs_tol + rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace contrast
