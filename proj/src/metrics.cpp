#include "sdual/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sdual {

double gap_closed(double p, double d1, double d2) {
  if (d1 > p || d2 > p) throw std::invalid_argument("gap_closed: dual bounds must not exceed p");
  if (d1 == d2) return 0.0;
  if (d1 > d2) {
    if (p == d2) return 1.0;
    return 1.0 - (p - d1) / (p - d2);
  }
  if (p == d1) return -1.0;
  return -1.0 + (p - d2) / (p - d1);
}

double shifted_geomean(const std::vector<double>& values, double shift) {
  if (values.empty()) throw std::invalid_argument("shifted_geomean: empty input");
  if (shift < 0.0) throw std::invalid_argument("shifted_geomean: negative shift");
  double log_sum = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("shifted_geomean: negative value");
    log_sum += std::log(v + shift);
  }
  return std::exp(log_sum / double(values.size())) - shift;
}

double target_bound(double dual, double primal) {
  if (dual > primal) throw std::invalid_argument("target_bound: dual exceeds primal");
  return dual + (primal - dual) * 0.2;
}

}  // namespace sdual
