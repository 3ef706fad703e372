#include "racs/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace racs {

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0;
  std::sort(xs.begin(), xs.end());
  double rank = std::ceil(q * static_cast<double>(xs.size()));
  size_t i = rank < 1 ? 0 : static_cast<size_t>(rank) - 1;
  if (i >= xs.size()) i = xs.size() - 1;
  return xs[i];
}

}  // namespace racs
