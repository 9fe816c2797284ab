#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "contrast/types.hpp"

namespace contrast {

/// One sweep of the gradient scaling factor along tau or K.
/// monotonicity: +1 nondecreasing over the grid, -1 nonincreasing, 0 mixed.
struct SweepResult {
  std::vector<double> axis;
  std::vector<double> w;
  std::optional<std::vector<double>> closed_form;
  double bound = 0.0;
  double max_abs_gap_to_bound = 0.0;
  int monotonicity = 0;
};

/// W(tau) over a strictly increasing grid. bound = K/(K+1). For the
/// symmetric scenario (pos = 1, all negs = -1) the closed form
/// K / (exp(2/tau) + K) is attached. The reported gap is |W - bound| at the
/// largest tau.
SweepResult sweep_tau(const LogitsRow& row, const std::vector<double>& tau_grid);

/// W(K) for rows with K copies of `neg`, using the closed form
/// K / (exp((pos - neg)/tau) + K). bound = 1 (the large-K limit); the
/// reported gap is 1 - W at the largest K.
SweepResult sweep_k(double pos, double neg, double tau, const std::vector<std::uint64_t>& k_grid);

/// Shannon entropy (natural log) of the hardness weights; in [0, ln K].
double weight_entropy(const LogitsRow& row, double tau);

/// Relative penalty between two negatives: exp((s_a - s_b) / tau).
double penalty_ratio(double s_a, double s_b, double tau);

struct PropositionConfig {
  std::uint64_t seed = 20240501;
  int random_rows = 50;
  std::vector<std::size_t> k_values{1, 4, 64};
  std::vector<double> tau_probes{0.07, 0.1, 0.5, 1.0, 10.0};
  double tau_limit = 1e4;       // probe for the K/(K+1) limit
  double limit_gap_tol = 1e-3;  // |W(tau_limit) - K/(K+1)| must stay below
  std::uint64_t k_limit_max_exp = 20;  // K grid = 2^0 .. 2^k_limit_max_exp
};

struct AssertionResult {
  std::string assertion;
  bool pass = false;
  double worst_gap = 0.0;
};

struct PropositionReport {
  std::vector<AssertionResult> assertions;
  bool all_pass = false;
};

/// Numerical verification of the two scaling-factor limits and the
/// dW/dtau sign rule on randomized similarity rows:
///   - 1 - W decreases monotonically along the K grid and W(K) increases;
///   - |W(tau_limit) - K/(K+1)| < limit_gap_tol;
///   - sign(dW/dtau) matches sign(sum_j (s_i - s_j) E_j) at every probe.
PropositionReport proposition_report(const PropositionConfig& cfg);

/// Shortest-round-trip-free formatting: 17 significant digits, '.' decimal
/// separator, locale independent. The CSV number format.
std::string format_g17(double value);

/// CSV emission, header `axis,W,closed_form,bound`, LF endings. The
/// closed_form field is empty when the sweep has none.
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);

/// CSV emission for an entropy-vs-tau curve, header `axis,entropy`.
void write_entropy_csv(const std::vector<double>& tau_grid, const std::vector<double>& entropy,
                       std::ostream& out);

/// Log-spaced grid of `points` values over [lo, hi], strictly increasing.
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points);

}  // namespace contrast
