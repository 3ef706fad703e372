#pragma once

#include <cmath>
#include <vector>

namespace racs {

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two points.
inline double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Standard normal quantile for the 0.999 level (two-sided p = 0.001 tests
// use the one-sided 0.999 cut on the chi-square side).
constexpr double kZp999 = 3.090232;

// Upper critical value of the chi-square distribution, Wilson-Hilferty cube
// approximation. Accurate to a fraction of a percent for df >= 2, which is
// plenty for a reject/accept gate.
inline double chi_square_crit(double df, double z) {
  double a = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * a * a * a;
}

// Pearson chi-square statistic for equiprobable cells.
inline double chi_square_stat(const std::vector<uint64_t>& counts) {
  uint64_t total = 0;
  for (uint64_t c : counts) total += c;
  if (counts.empty() || total == 0) return 0.0;
  double expect = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (uint64_t c : counts) {
    double d = static_cast<double>(c) - expect;
    stat += d * d / expect;
  }
  return stat;
}

// Lag-1 autocorrelation of a real-valued sequence; 0 for degenerate input.
inline double autocorr_lag1(const std::vector<double>& xs) {
  if (xs.size() < 3) return 0.0;
  double m = mean_of(xs);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double d = xs[i] - m;
    den += d * d;
    if (i + 1 < xs.size()) num += d * (xs[i + 1] - m);
  }
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace racs
