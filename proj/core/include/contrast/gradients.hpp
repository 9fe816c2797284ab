#pragma once

#include <functional>
#include <span>
#include <vector>

#include "contrast/types.hpp"

namespace contrast {

struct SoftmaxProbs {
  double p_pos = 0.0;
  std::vector<double> p_neg;
};

/// Softmax over (pos, negs) at temperature tau, max-logit stabilized.
/// p_pos + sum(p_neg) = 1 up to round-off.
SoftmaxProbs softmax_probs(const LogitsRow& row, double tau);

/// Gradient scaling factor W = sum_j p_neg_j = 1 - p_pos. Always in (0, 1)
/// for finite logits.
double scaling_factor(const LogitsRow& row, double tau);

/// Hardness weights p_hat_j = softmax over negatives only. Sums to 1 and
/// equals p_neg_j / W.
std::vector<double> hardness_weights(const LogitsRow& row, double tau);

/// Closed-form gradients of the per-anchor loss w.r.t. the anchor, the
/// positive key, and each negative key, treating all vectors as free
/// variables of the dot-product loss:
///
///   d_anchor   = -(S/tau) * (g_pos - sum_j p_hat_j * g_j)
///   d_pos_key  = -(S/tau) * f
///   d_neg_j    =  (S/tau) * p_hat_j * f
///
/// where S = W for InfoNCE/NT-Xent and for MACL without reweighting, and
/// S = 1 for DCL and for MACL with reweighting (the detached 1/W weight
/// cancels the scaling factor). `tau_used` is the temperature the forward
/// pass actually used; for adaptive MACL the caller computes it from the
/// detached batch alignment.
GradientReport analytic_gradients(std::span<const double> anchor, std::span<const double> pos_key,
                                  const Matrix& neg_keys, const LossSpec& spec, double tau_used);

/// d W / d tau = (1/tau^2) * E_i / (sum E)^2 * sum_j (s_i - s_j) E_j with
/// E_k = exp(s_k / tau), evaluated with max-logit stabilization. The sign
/// equals the sign of sum_j (s_i - s_j) E_j.
double dw_dtau(const LogitsRow& row, double tau);

/// Sign-carrying part of dW/dtau: sum_j (s_i - s_j) * exp((s_j - max)/tau).
double dw_dtau_sign_term(const LogitsRow& row, double tau);

struct FiniteDiffConfig {
  double step = 1e-5;
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
};

using ScalarFn = std::function<double(const std::vector<double>&)>;

/// Central-difference gradient of `fn` at `point`. Throws NonFiniteLoss when
/// any probe evaluates non-finite.
std::vector<double> finite_difference(const ScalarFn& fn, const std::vector<double>& point,
                                      const FiniteDiffConfig& cfg = {});

/// |a - b| <= abs_tol + rel_tol * max(|a|, |b|), the comparison used by all
/// gradient checks.
bool close(double a, double b, double rel_tol, double abs_tol);

}  // namespace contrast
