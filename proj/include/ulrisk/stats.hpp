#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ulrisk/error.hpp"

namespace ulrisk::stats {

/// Two-sided standard normal tail P(|Z| >= |z|). std::erfc is accurate to a
/// few ulp, well inside the 1e-7 absolute budget the tests assume.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Median; for an even count, the mean of the two middle order statistics.
inline double median(std::vector<double> values) {
  require(!values.empty(), ErrorKind::InvariantViolation, "median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

/// Linear-interpolation quantile (Hyndman-Fan type 7).
inline double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::InvariantViolation, "quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and U(0,1).
inline double ks_uniform_statistic(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Exact rational score, so that equal predictions give bit-equal metrics.
struct Score {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

/// Accuracy with "positive" meaning prob > cutoff.
inline Score accuracy(std::span<const double> probs, std::span<const std::uint8_t> labels,
                      double cutoff = 0.5) {
  require(probs.size() == labels.size(), ErrorKind::LengthMismatch, "accuracy: length mismatch");
  Score s{0, static_cast<std::int64_t>(probs.size())};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    s.numerator += ((probs[i] > cutoff) == (labels[i] != 0)) ? 1 : 0;
  }
  return s;
}

/// Area under the ROC curve as the Mann-Whitney statistic; ties count one half.
/// Numerator and denominator are both doubled to stay integral.
inline Score auc(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  require(probs.size() == labels.size(), ErrorKind::LengthMismatch, "auc: length mismatch");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  std::int64_t pos = 0, neg = 0, numerator = 0, neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && probs[order[j]] == probs[order[i]]) {
      (labels[order[j]] ? group_pos : group_neg) += 1;
      ++j;
    }
    numerator += group_pos * (2 * neg_below + group_neg);
    neg_below += group_neg;
    pos += group_pos;
    neg += group_neg;
    i = j;
  }
  require(pos > 0 && neg > 0, ErrorKind::SingleClassEval, "auc: needs both classes");
  return Score{numerator, 2 * pos * neg};
}

}  // namespace ulrisk::stats
