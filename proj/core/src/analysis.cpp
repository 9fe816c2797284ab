#include "contrast/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "contrast/gradients.hpp"
#include "contrast/rng.hpp"
#include "row_stats.hpp"

namespace contrast {

namespace {

bool is_symmetric_scenario(double pos, const std::vector<double>& negs) {
  if (pos != 1.0) return false;
  for (double s : negs) {
    if (s != -1.0) return false;
  }
  return true;
}

int monotonicity_sign(const std::vector<double>& values) {
  bool nondecreasing = true;
  bool nonincreasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[i - 1]) nondecreasing = false;
    if (values[i] > values[i - 1]) nonincreasing = false;
  }
  if (nondecreasing && nonincreasing) return 0;  // constant
  if (nondecreasing) return 1;
  if (nonincreasing) return -1;
  return 0;
}

void require_increasing(const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidConfig("grid must be strictly increasing");
  }
}

/// 1 - W = R / (R + K) with R = exp((pos - neg)/tau); precise where W -> 1.
double gap_from_ratio(double pos, double neg, double tau, double k) {
  const double r = std::exp((pos - neg) / tau);
  return r / (r + k);
}

}  // namespace

SweepResult sweep_tau(const LogitsRow& row, const std::vector<double>& tau_grid) {
  if (tau_grid.empty()) throw EmptyGrid();
  require_increasing(tau_grid);
  if (row.negs.empty()) throw EmptyNegatives();

  const double k = static_cast<double>(row.k());
  SweepResult sweep;
  sweep.axis = tau_grid;
  sweep.bound = k / (k + 1.0);
  sweep.w.reserve(tau_grid.size());
  for (double tau : tau_grid) sweep.w.push_back(scaling_factor(row, tau));
  if (is_symmetric_scenario(row.pos, row.negs)) {
    std::vector<double> closed(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      closed[i] = k / (std::exp(2.0 / tau_grid[i]) + k);
    }
    sweep.closed_form = std::move(closed);
  }
  sweep.max_abs_gap_to_bound = std::abs(sweep.w.back() - sweep.bound);
  sweep.monotonicity = monotonicity_sign(sweep.w);
  return sweep;
}

SweepResult sweep_k(double pos, double neg, double tau, const std::vector<std::uint64_t>& k_grid) {
  detail::require_tau(tau);
  if (k_grid.empty()) throw EmptyGrid();
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 1) throw InvalidConfig("K grid entries must be >= 1");
    if (i > 0 && k_grid[i] <= k_grid[i - 1]) {
      throw InvalidConfig("K grid must be strictly increasing");
    }
  }

  SweepResult sweep;
  sweep.axis.reserve(k_grid.size());
  sweep.w.reserve(k_grid.size());
  sweep.bound = 1.0;
  const double r = std::exp((pos - neg) / tau);
  std::vector<double> gaps;
  gaps.reserve(k_grid.size());
  for (std::uint64_t k : k_grid) {
    const double kd = static_cast<double>(k);
    sweep.axis.push_back(kd);
    sweep.w.push_back(kd / (r + kd));
    gaps.push_back(r / (r + kd));
  }
  if (is_symmetric_scenario(pos, {neg})) {
    std::vector<double> closed(sweep.w);
    sweep.closed_form = std::move(closed);
  }
  sweep.max_abs_gap_to_bound = gaps.back();
  sweep.monotonicity = -monotonicity_sign(gaps);  // W grows iff the gap shrinks
  return sweep;
}

double weight_entropy(const LogitsRow& row, double tau) {
  const std::vector<double> p_hat = hardness_weights(row, tau);
  double h = 0.0;
  for (double p : p_hat) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double penalty_ratio(double s_a, double s_b, double tau) {
  detail::require_tau(tau);
  return std::exp((s_a - s_b) / tau);
}

PropositionReport proposition_report(const PropositionConfig& cfg) {
  PropositionReport report;
  RngStream rng(cfg.seed, "proposition");

  // Limit in K: 1 - W shrinks monotonically along the doubling grid.
  {
    std::vector<std::uint64_t> k_grid;
    for (std::uint64_t e = 0; e <= cfg.k_limit_max_exp; ++e) k_grid.push_back(1ULL << e);
    AssertionResult res;
    res.assertion = "W approaches 1 as K grows (gap 1-W monotonically decreasing)";
    res.pass = true;
    res.worst_gap = 0.0;
    for (int r = 0; r < cfg.random_rows; ++r) {
      const double pos = rng.uniform(-1.0, 1.0);
      const double neg = rng.uniform(-1.0, 1.0);
      const double tau = cfg.tau_probes[static_cast<std::size_t>(r) % cfg.tau_probes.size()];
      const SweepResult sweep = sweep_k(pos, neg, tau, k_grid);
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < k_grid.size(); ++i) {
        const double gap = gap_from_ratio(pos, neg, tau, sweep.axis[i]);
        if (gap >= prev) res.pass = false;
        prev = gap;
      }
      res.worst_gap = std::max(res.worst_gap, sweep.max_abs_gap_to_bound);
    }
    report.assertions.push_back(std::move(res));
  }

  // Limit in tau: |W(tau_limit) - K/(K+1)| below tolerance for random rows.
  std::vector<LogitsRow> probe_rows;
  {
    AssertionResult res;
    res.assertion = "W(tau -> inf) approaches K/(K+1)";
    res.pass = true;
    res.worst_gap = 0.0;
    for (int r = 0; r < cfg.random_rows; ++r) {
      const std::size_t k = cfg.k_values[static_cast<std::size_t>(r) % cfg.k_values.size()];
      LogitsRow row;
      row.pos = rng.uniform(-1.0, 1.0);
      row.negs.reserve(k);
      for (std::size_t j = 0; j < k; ++j) row.negs.push_back(rng.uniform(-1.0, 1.0));
      const double bound = static_cast<double>(k) / (static_cast<double>(k) + 1.0);
      const double gap = std::abs(scaling_factor(row, cfg.tau_limit) - bound);
      res.worst_gap = std::max(res.worst_gap, gap);
      if (gap >= cfg.limit_gap_tol) res.pass = false;
      probe_rows.push_back(std::move(row));
    }
    report.assertions.push_back(std::move(res));
  }

  // Sign of dW/dtau equals the sign of sum_j (s_i - s_j) E_j everywhere.
  {
    AssertionResult res;
    res.assertion = "sign(dW/dtau) matches sign(sum (s_i - s_j) E_j)";
    res.pass = true;
    res.worst_gap = 0.0;
    for (const LogitsRow& row : probe_rows) {
      for (double tau : cfg.tau_probes) {
        const double d = dw_dtau(row, tau);
        const double term = dw_dtau_sign_term(row, tau);
        const bool match = (d > 0.0 && term > 0.0) || (d < 0.0 && term < 0.0) ||
                           (d == 0.0 && term == 0.0);
        if (!match) {
          res.pass = false;
          res.worst_gap = std::max(res.worst_gap, std::abs(d));
        }
      }
    }
    report.assertions.push_back(std::move(res));
  }

  report.all_pass = true;
  for (const AssertionResult& a : report.assertions) report.all_pass = report.all_pass && a.pass;
  return report;
}

std::string format_g17(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
  out << "axis,W,closed_form,bound\n";
  for (std::size_t i = 0; i < sweep.axis.size(); ++i) {
    out << format_g17(sweep.axis[i]) << ',' << format_g17(sweep.w[i]) << ',';
    if (sweep.closed_form) out << format_g17((*sweep.closed_form)[i]);
    out << ',' << format_g17(sweep.bound) << '\n';
  }
}

void write_entropy_csv(const std::vector<double>& tau_grid, const std::vector<double>& entropy,
                       std::ostream& out) {
  if (tau_grid.size() != entropy.size()) {
    throw ShapeMismatch("entropy CSV: grid and value lengths differ");
  }
  out << "axis,entropy\n";
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    out << format_g17(tau_grid[i]) << ',' << format_g17(entropy[i]) << '\n';
  }
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw InvalidConfig("log grid needs 0 < lo < hi and at least 2 points");
  }
  std::vector<double> grid(points);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = std::exp(llo + t * (lhi - llo));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace contrast
