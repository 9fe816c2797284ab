#pragma once

// Internal: max-logit-stabilized softmax pieces shared by the loss and
// gradient paths. Not installed.

#include <algorithm>
#include <cmath>
#include <vector>

#include "contrast/errors.hpp"
#include "contrast/types.hpp"

namespace contrast::detail {

inline void require_tau(double tau) {
  if (!(tau > 0.0)) throw NonPositiveTau(tau);
}

/// exp terms relative to the max over (pos, negs): a_pos = exp((pos-max)/tau),
/// a_neg[j] = exp((neg_j-max)/tau), z = a_pos + sum(a_neg).
struct RowStats {
  double max_logit = 0.0;
  double a_pos = 0.0;
  std::vector<double> a_neg;
  double neg_sum = 0.0;  // sum of a_neg in index order
  double z = 0.0;
};

inline RowStats row_stats(const LogitsRow& row, double tau) {
  require_tau(tau);
  if (row.negs.empty()) throw EmptyNegatives();
  RowStats st;
  st.max_logit = row.pos;
  for (double s : row.negs) st.max_logit = std::max(st.max_logit, s);
  st.a_pos = std::exp((row.pos - st.max_logit) / tau);
  st.a_neg.reserve(row.negs.size());
  for (double s : row.negs) {
    st.a_neg.push_back(std::exp((s - st.max_logit) / tau));
    st.neg_sum += st.a_neg.back();
  }
  st.z = st.a_pos + st.neg_sum;
  return st;
}

/// -log p_pos = log(z) + (max - pos)/tau.
inline double infonce_from_stats(const RowStats& st, const LogitsRow& row, double tau) {
  return std::log(st.z) + (st.max_logit - row.pos) / tau;
}

inline double w_from_stats(const RowStats& st) { return st.neg_sum / st.z; }

/// Softmax over the negatives only, stabilized by their own max.
inline std::vector<double> hardness_from_row(const LogitsRow& row, double tau) {
  require_tau(tau);
  if (row.negs.empty()) throw EmptyNegatives();
  double max_neg = row.negs.front();
  for (double s : row.negs) max_neg = std::max(max_neg, s);
  std::vector<double> e(row.negs.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < row.negs.size(); ++j) {
    e[j] = std::exp((row.negs[j] - max_neg) / tau);
    sum += e[j];
  }
  for (double& x : e) x /= sum;
  return e;
}

}  // namespace contrast::detail
