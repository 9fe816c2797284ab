#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contrast/analysis.hpp"
#include "contrast/gradients.hpp"

namespace contrast {

struct VerifyConfig {
  std::uint64_t seed = 20240501;
  int gradient_configs = 120;      // random (m, K, tau, variant) draws
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
  int identity_rows = 1000;        // rows for the exact-identity checks
  double identity_tol = 1e-12;
  int monotonicity_configs = 100;  // configs for tau_a / entropy / ratio laws
  std::vector<std::size_t> k_values{1, 4, 64};
  std::vector<std::size_t> dims{2, 8, 64};
  std::vector<double> tau_values{0.07, 0.1, 0.5, 1.0};
  PropositionConfig propositions;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst observed gap, in the check's own units
  std::string detail;
};

/// Analytic gradients of every loss variant (anchor, positive key, each
/// negative key) against central finite differences of the matching forward
/// value, with A and V held at their point values for adaptive MACL.
CheckResult check_gradient_oracle(const VerifyConfig& cfg);

/// A = 1 - L_align / 2 on random unit batches.
CheckResult check_alignment_identity(const VerifyConfig& cfg);

/// sum p_hat = 1 and p_hat_j = p_neg_j / W on random rows.
CheckResult check_hardness_identities(const VerifyConfig& cfg);

/// MACL with adaptive and reweight off equals InfoNCE; alpha = 0 makes
/// tau_a = tau0 exactly.
CheckResult check_degeneracies(const VerifyConfig& cfg);

/// MACL(reweight) anchor gradient = InfoNCE anchor gradient / W, and equals
/// the DCL anchor gradient at equal tau.
CheckResult check_gradient_equivalences(const VerifyConfig& cfg);

/// Hardness-weight entropy nondecreasing in tau; penalty ratio strictly
/// decreasing in tau and -> 1; tau_a nondecreasing in A.
CheckResult check_monotonicity_laws(const VerifyConfig& cfg);

/// dW/dtau against central differences of the scaling factor.
CheckResult check_dw_dtau(const VerifyConfig& cfg);

/// All of the above plus proposition_report, in a fixed order.
std::vector<CheckResult> run_verification(const VerifyConfig& cfg);

}  // namespace contrast
