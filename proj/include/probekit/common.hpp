#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace probekit {

// Store payloads are binary32 row-major; all training math runs in binary64.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorD = Eigen::VectorXd;

// Validation failure anywhere in the toolkit. The CLI maps this to exit
// code 1 (user error); anything else escaping to main is an internal error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// ceil(fraction * n) with a guard against FP residue on exact multiples,
// so e.g. 0.2 of 10 is 2, not 3. Result clamped to [0, n].
inline int fraction_count(double fraction, int n) {
  int k = static_cast<int>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (k < 0) k = 0;
  if (k > n) k = n;
  return k;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population convention (divide by n), matching the run-averaging protocol.
inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace probekit
