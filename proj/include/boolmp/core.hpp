#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace boolmp {

// Finite stand-in for +/- infinity in log-ratio arithmetic. Hard priors and
// deterministic channels clamp here instead of producing non-finite values.
inline constexpr double kMaxLogRatio = 1e6;

// Rejected or malformed input (bad file, bad dimensions, bad probabilities).
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds a hard size limit (e.g. exhaustive enumeration bound).
class size_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double clamp_log_ratio(double v) {
  return std::clamp(v, -kMaxLogRatio, kMaxLogRatio);
}

inline double pos_part(double v) { return v > 0.0 ? v : 0.0; }

// log(p / (1-p)); returns +/-infinity at the endpoints (callers clamp).
inline double logit(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(p) - std::log1p(-p);
}

// log(1 + e^a), overflow-safe.
inline double softplus(double a) {
  return pos_part(a) + std::log1p(std::exp(-std::fabs(a)));
}

// Inverse of softplus: log(e^b - 1) for b > 0. Non-positive or underflowing
// arguments clamp to -kMaxLogRatio; `clamped` reports that this happened.
inline double softplus_inv(double b, bool* clamped = nullptr) {
  if (clamped) *clamped = false;
  if (b <= 0.0) {
    if (clamped) *clamped = true;
    return -kMaxLogRatio;
  }
  double r = b + std::log1p(-std::exp(-b));
  if (!(r > -kMaxLogRatio)) return -kMaxLogRatio;
  return r;
}

// Dense row-major table of doubles (marginals, priors, message scratch).
struct Table {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Table() = default;
  Table(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw input_error("Table: negative dimensions");
  }

  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(i) * cols + j];
  }
  double& operator()(int i, int j) {
    return values[static_cast<std::size_t>(i) * cols + j];
  }
  std::size_t size() const { return values.size(); }
};

// Streaming log(sum of e^v) with a running max.
class LogSumExp {
 public:
  void add(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return;
    if (v > max_) {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    } else {
      sum_ += std::exp(v - max_);
    }
  }
  double value() const {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

}  // namespace boolmp
