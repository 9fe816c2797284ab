#include "contrast/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "contrast/losses.hpp"
#include "contrast/rng.hpp"
#include "contrast/temperature.hpp"

namespace contrast {

namespace {

Vector random_unit(RngStream& rng, std::size_t m) {
  Vector v(m);
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm(v);
  } while (!(n > 1e-12));
  for (double& x : v) x /= n;
  return v;
}

LogitsRow random_row(RngStream& rng, std::size_t k) {
  LogitsRow row;
  row.pos = rng.uniform(-1.0, 1.0);
  row.negs.reserve(k);
  for (std::size_t j = 0; j < k; ++j) row.negs.push_back(rng.uniform(-1.0, 1.0));
  return row;
}

LogitsRow row_from_points(std::span<const double> anchor, std::span<const double> pos_key,
                          const Matrix& negs) {
  LogitsRow row;
  row.pos = dot(anchor, pos_key);
  row.negs.reserve(negs.rows);
  for (std::size_t j = 0; j < negs.rows; ++j) row.negs.push_back(dot(anchor, negs.row(j)));
  return row;
}

/// Forward value of one anchor at frozen (tau_used, v) - the detached
/// semantics the analytic gradients assume.
double frozen_forward(const LogitsRow& row, const LossSpec& spec, double tau_used, double v) {
  switch (spec.variant) {
    case LossVariant::InfoNCE:
    case LossVariant::NTXent:
      return infonce_value(row, tau_used);
    case LossVariant::DCL:
      return dcl_value(row, tau_used);
    case LossVariant::MACL:
      return v * infonce_value(row, tau_used);
  }
  return 0.0;
}

double gap_ratio(double a, double b, double rel_tol, double abs_tol) {
  return std::abs(a - b) / (abs_tol + rel_tol * std::max(std::abs(a), std::abs(b)));
}

std::vector<LossSpec> oracle_specs(double tau) {
  const TemperatureConfig fixed(tau, 0.0, 0.0);
  const TemperatureConfig adaptive(tau, 0.5, 0.0);
  std::vector<LossSpec> specs;
  specs.push_back({LossVariant::InfoNCE, fixed, false, false});
  specs.push_back({LossVariant::NTXent, fixed, false, false});
  specs.push_back({LossVariant::DCL, fixed, false, false});
  specs.push_back({LossVariant::MACL, fixed, false, false});
  specs.push_back({LossVariant::MACL, fixed, false, true});
  specs.push_back({LossVariant::MACL, adaptive, true, false});
  specs.push_back({LossVariant::MACL, adaptive, true, true});
  return specs;
}

}  // namespace

CheckResult check_gradient_oracle(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "grad-oracle");
  CheckResult res{"gradient oracle: analytic vs central differences", true, 0.0, ""};

  for (int c = 0; c < cfg.gradient_configs; ++c) {
    const std::size_t m = cfg.dims[rng.below(cfg.dims.size())];
    const std::size_t k = cfg.k_values[rng.below(cfg.k_values.size())];
    const double tau = cfg.tau_values[rng.below(cfg.tau_values.size())];

    const Vector anchor = random_unit(rng, m);
    const Vector pos_key = random_unit(rng, m);
    Matrix negs(k, m);
    for (std::size_t j = 0; j < k; ++j) {
      const Vector g = random_unit(rng, m);
      std::copy(g.begin(), g.end(), negs.row(j).begin());
    }

    for (const LossSpec& spec : oracle_specs(tau)) {
      const LogitsRow base_row = row_from_points(anchor, pos_key, negs);
      double tau_used = spec.temperature.tau0;
      if (spec.variant == LossVariant::MACL && spec.adaptive) {
        tau_used = adaptive_temperature(base_row.pos, spec.temperature).tau;
      }
      double v = 1.0;
      if (spec.variant == LossVariant::MACL && spec.reweight) {
        v = 1.0 / scaling_factor(base_row, tau_used);
      }

      const GradientReport rep = analytic_gradients(anchor, pos_key, negs, spec, tau_used);

      // Flatten (anchor, pos_key, negs) into one free-variable vector.
      std::vector<double> point;
      point.insert(point.end(), anchor.begin(), anchor.end());
      point.insert(point.end(), pos_key.begin(), pos_key.end());
      point.insert(point.end(), negs.data.begin(), negs.data.end());

      const auto forward = [&](const std::vector<double>& x) {
        const std::span<const double> f(x.data(), m);
        const std::span<const double> g(x.data() + m, m);
        Matrix nb(k, m);
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(2 * m), x.end(), nb.data.begin());
        return frozen_forward(row_from_points(f, g, nb), spec, tau_used, v);
      };

      FiniteDiffConfig fd;
      fd.rel_tol = cfg.rel_tol;
      fd.abs_tol = cfg.abs_tol;
      const std::vector<double> numeric = finite_difference(forward, point, fd);

      std::vector<double> analytic;
      analytic.insert(analytic.end(), rep.d_anchor.begin(), rep.d_anchor.end());
      analytic.insert(analytic.end(), rep.d_pos_key.begin(), rep.d_pos_key.end());
      analytic.insert(analytic.end(), rep.d_neg_keys.data.begin(), rep.d_neg_keys.data.end());

      for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double ratio = gap_ratio(analytic[i], numeric[i], cfg.rel_tol, cfg.abs_tol);
        if (ratio > res.worst) {
          res.worst = ratio;
          res.detail = std::string(to_string(spec.variant)) +
                       (spec.adaptive ? "+adaptive" : "") + (spec.reweight ? "+reweight" : "") +
                       " m=" + std::to_string(m) + " K=" + std::to_string(k);
        }
        if (ratio > 1.0) res.pass = false;
      }
    }
  }
  return res;
}

CheckResult check_alignment_identity(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "alignment-identity");
  CheckResult res{"alignment identity: A = 1 - L_align/2", true, 0.0, ""};
  for (int c = 0; c < cfg.identity_rows; ++c) {
    const std::size_t n = 1 + rng.below(16);
    const std::size_t m = 2 + rng.below(31);
    Matrix f(n, m);
    Matrix g(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector a = random_unit(rng, m);
      const Vector b = random_unit(rng, m);
      std::copy(a.begin(), a.end(), f.row(i).begin());
      std::copy(b.begin(), b.end(), g.row(i).begin());
    }
    const UnitEmbeddingBatch fb{std::move(f)};
    const UnitEmbeddingBatch gb{std::move(g)};
    std::vector<double> sims(n);
    for (std::size_t i = 0; i < n; ++i) sims[i] = dot(fb.row(i), gb.row(i));
    const double a_est = alignment_magnitude(sims).a;
    const double from_loss = 1.0 - alignment_loss(fb, gb) / 2.0;
    const double gap = std::abs(a_est - from_loss);
    res.worst = std::max(res.worst, gap);
    if (gap > cfg.identity_tol) res.pass = false;
  }
  return res;
}

CheckResult check_hardness_identities(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "hardness-identity");
  CheckResult res{"hardness weights: sum = 1 and p_hat = p_neg / W", true, 0.0, ""};
  for (int c = 0; c < cfg.identity_rows; ++c) {
    const std::size_t k = cfg.k_values[static_cast<std::size_t>(c) % cfg.k_values.size()];
    const double tau = cfg.tau_values[rng.below(cfg.tau_values.size())];
    const LogitsRow row = random_row(rng, k);
    const auto probs = softmax_probs(row, tau);
    const double w = scaling_factor(row, tau);
    const auto p_hat = hardness_weights(row, tau);

    double sum = 0.0;
    for (double p : p_hat) sum += p;
    double gap = std::abs(sum - 1.0);
    double total = probs.p_pos;
    for (double p : probs.p_neg) total += p;
    gap = std::max(gap, std::abs(total - 1.0));
    for (std::size_t j = 0; j < k; ++j) {
      gap = std::max(gap, std::abs(p_hat[j] - probs.p_neg[j] / w));
    }
    res.worst = std::max(res.worst, gap);
    if (gap > cfg.identity_tol) res.pass = false;
  }
  return res;
}

CheckResult check_degeneracies(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "degeneracy");
  CheckResult res{"degeneracies: plain MACL = InfoNCE; alpha = 0 keeps tau0", true, 0.0, ""};
  for (int c = 0; c < cfg.identity_rows; ++c) {
    const std::size_t k = 1 + rng.below(32);
    const double tau = cfg.tau_values[rng.below(cfg.tau_values.size())];
    std::vector<LogitsRow> rows(1 + rng.below(8));
    for (LogitsRow& row : rows) row = random_row(rng, k);

    const TemperatureConfig temp(tau, 0.0, 0.0);
    const LossSpec macl_plain{LossVariant::MACL, temp, false, false};
    const LossSpec infonce{LossVariant::InfoNCE, temp, false, false};
    const BatchLossResult a = batch_value(rows, macl_plain);
    const BatchLossResult b = batch_value(rows, infonce);
    double gap = std::abs(a.mean_loss - b.mean_loss);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      gap = std::max(gap, std::abs(a.per_anchor_loss[i] - b.per_anchor_loss[i]));
    }

    const TemperatureConfig zero_alpha(tau, 0.0, rng.uniform(-1.0, 1.0));
    gap = std::max(gap,
                   std::abs(adaptive_temperature(rng.uniform(-1.0, 1.0), zero_alpha).tau - tau));
    res.worst = std::max(res.worst, gap);
    if (gap > cfg.identity_tol) res.pass = false;
  }
  return res;
}

CheckResult check_gradient_equivalences(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "grad-equivalence");
  CheckResult res{"reweighting: MACL(rw) = InfoNCE/W = DCL anchor gradient", true, 0.0, ""};
  for (int c = 0; c < cfg.identity_rows; ++c) {
    const std::size_t m = cfg.dims[rng.below(cfg.dims.size())];
    const std::size_t k = cfg.k_values[rng.below(cfg.k_values.size())];
    const double tau = cfg.tau_values[rng.below(cfg.tau_values.size())];
    const Vector anchor = random_unit(rng, m);
    const Vector pos_key = random_unit(rng, m);
    Matrix negs(k, m);
    for (std::size_t j = 0; j < k; ++j) {
      const Vector g = random_unit(rng, m);
      std::copy(g.begin(), g.end(), negs.row(j).begin());
    }

    const TemperatureConfig temp(tau, 0.0, 0.0);
    const LossSpec infonce{LossVariant::InfoNCE, temp, false, false};
    const LossSpec macl_rw{LossVariant::MACL, temp, false, true};
    const LossSpec dcl{LossVariant::DCL, temp, false, false};
    const GradientReport base = analytic_gradients(anchor, pos_key, negs, infonce, tau);
    const GradientReport rw = analytic_gradients(anchor, pos_key, negs, macl_rw, tau);
    const GradientReport dc = analytic_gradients(anchor, pos_key, negs, dcl, tau);

    double gap = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      gap = std::max(gap, std::abs(rw.d_anchor[i] - base.d_anchor[i] / base.w));
      gap = std::max(gap, std::abs(dc.d_anchor[i] - rw.d_anchor[i]));
    }
    res.worst = std::max(res.worst, gap);
    if (gap > cfg.identity_tol) res.pass = false;
  }
  return res;
}

CheckResult check_monotonicity_laws(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "monotonicity");
  CheckResult res{"monotonicity: tau_a in A; penalty ratio and entropy in tau", true, 0.0, ""};

  // tau_a nondecreasing in A.
  for (int c = 0; c < cfg.monotonicity_configs; ++c) {
    const TemperatureConfig temp(rng.uniform(0.01, 1.0), rng.uniform(0.0, 2.0),
                                 rng.uniform(-1.0, 1.0));
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
      const double a = -1.0 + 2.0 * static_cast<double>(i) / 40.0;
      const double tau = adaptive_temperature(a, temp).tau;
      if (tau < prev) {
        res.pass = false;
        res.worst = std::max(res.worst, prev - tau);
      }
      prev = tau;
    }
  }

  // Penalty ratio strictly decreasing in tau, approaching 1.
  const std::vector<double> ratio_taus{0.05, 0.1, 0.5, 1.0, 10.0};
  for (int c = 0; c < cfg.monotonicity_configs; ++c) {
    const double s_b = rng.uniform(-1.0, 0.1);
    const double s_a = s_b + rng.uniform(0.01, 0.9);
    double prev = std::numeric_limits<double>::infinity();
    for (double tau : ratio_taus) {
      const double r = penalty_ratio(s_a, s_b, tau);
      if (!(r < prev)) {
        res.pass = false;
        res.worst = std::max(res.worst, r - prev);
      }
      prev = r;
    }
    const double tail_gap = std::abs(penalty_ratio(s_a, s_b, 1e3) - 1.0);
    res.worst = std::max(res.worst, tail_gap);
    if (tail_gap >= 1e-3) res.pass = false;
  }

  // Hardness-weight entropy nondecreasing in tau over a log grid.
  const auto grid = log_spaced_grid(0.01, 1e4, 33);
  for (int c = 0; c < cfg.monotonicity_configs; ++c) {
    const LogitsRow row = random_row(rng, 2 + rng.below(63));
    double prev = -1.0;
    for (double tau : grid) {
      const double h = weight_entropy(row, tau);
      if (h < prev) {
        res.pass = false;
        res.worst = std::max(res.worst, prev - h);
      }
      prev = h;
    }
  }
  return res;
}

CheckResult check_dw_dtau(const VerifyConfig& cfg) {
  RngStream rng(cfg.seed, "dw-dtau");
  CheckResult res{"dW/dtau: closed form vs central differences", true, 0.0, ""};
  for (int c = 0; c < cfg.monotonicity_configs; ++c) {
    const std::size_t k = cfg.k_values[rng.below(cfg.k_values.size())];
    const LogitsRow row = random_row(rng, k);
    for (double tau : cfg.tau_values) {
      const double analytic = dw_dtau(row, tau);
      const auto fn = [&](const std::vector<double>& t) { return scaling_factor(row, t[0]); };
      const double numeric = finite_difference(fn, {tau})[0];
      const double ratio = gap_ratio(analytic, numeric, cfg.rel_tol, cfg.abs_tol);
      res.worst = std::max(res.worst, ratio);
      if (ratio > 1.0) res.pass = false;
    }
  }
  return res;
}

std::vector<CheckResult> run_verification(const VerifyConfig& cfg) {
  std::vector<CheckResult> checks;
  checks.push_back(check_gradient_oracle(cfg));
  checks.push_back(check_alignment_identity(cfg));
  checks.push_back(check_hardness_identities(cfg));
  checks.push_back(check_degeneracies(cfg));
  checks.push_back(check_gradient_equivalences(cfg));
  checks.push_back(check_monotonicity_laws(cfg));
  checks.push_back(check_dw_dtau(cfg));
  const PropositionReport props = proposition_report(cfg.propositions);
  for (const AssertionResult& a : props.assertions) {
    checks.push_back({"proposition: " + a.assertion, a.pass, a.worst_gap, ""});
  }
  return checks;
}

}  // namespace contrast
