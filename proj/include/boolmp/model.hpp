#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <utility>
#include <vector>

#include "boolmp/bool_matrix.hpp"
#include "boolmp/core.hpp"
#include "boolmp/random.hpp"

namespace boolmp {

// Observation symbols.
inline constexpr int kObserved0 = 0;
inline constexpr int kObserved1 = 1;
inline constexpr int kErased = 2;

// Entry-wise conditional P(o | z), o in {0, 1, erased}, z in {0, 1}: six
// probabilities per entry. Either one shared six-tuple or a full per-entry
// table. Six-tuple layout: [p(0|0), p(1|0), p(e|0), p(0|1), p(1|1), p(e|1)].
class Channel {
 public:
  using Cell = std::array<double, 6>;

  static Channel symmetric(double correct) {
    return from_six({correct, 1.0 - correct, 0.0, 1.0 - correct, correct, 0.0});
  }

  static Channel symmetric_erasure(double correct, double erase) {
    double pass = 1.0 - erase;
    return from_six({pass * correct, pass * (1.0 - correct), erase,
                     pass * (1.0 - correct), pass * correct, erase});
  }

  static Channel from_six(const Cell& cell) {
    validate_cell(cell);
    Channel ch;
    ch.shared_ = cell;
    return ch;
  }

  static Channel per_entry(int rows, int cols, std::vector<Cell> cells) {
    if (rows < 0 || cols < 0 ||
        cells.size() != static_cast<std::size_t>(rows) * cols)
      throw input_error("Channel: per-entry table size mismatch");
    for (const auto& c : cells) validate_cell(c);
    Channel ch;
    ch.rows_ = rows;
    ch.cols_ = cols;
    ch.cells_ = std::move(cells);
    return ch;
  }

  bool is_per_entry() const { return !cells_.empty(); }

  double prob(int m, int n, int obs, int z) const {
    const Cell& c = cell(m, n);
    return c[static_cast<std::size_t>(z) * 3 + obs];
  }

  // log P(o|1) - log P(o|0), clamped to the finite log-ratio range.
  double log_ratio(int m, int n, int obs) const {
    if (obs != kObserved0 && obs != kObserved1)
      throw input_error("Channel::log_ratio: observed value must be 0 or 1");
    double p1 = prob(m, n, obs, 1);
    double p0 = prob(m, n, obs, 0);
    if (p1 == 0.0 && p0 == 0.0)
      throw input_error("Channel: observation has zero probability under both z");
    if (p0 == 0.0) return kMaxLogRatio;
    if (p1 == 0.0) return -kMaxLogRatio;
    return clamp_log_ratio(std::log(p1) - std::log(p0));
  }

 private:
  static void validate_cell(const Cell& c) {
    for (double v : c) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw input_error("Channel: probabilities must be finite and nonnegative");
    }
    for (int z = 0; z < 2; ++z) {
      double sum = c[z * 3] + c[z * 3 + 1] + c[z * 3 + 2];
      if (std::fabs(sum - 1.0) > 1e-12)
        throw input_error("Channel: conditionals must sum to 1 for each z");
    }
  }

  const Cell& cell(int m, int n) const {
    if (cells_.empty()) return shared_;
    return cells_[static_cast<std::size_t>(m) * cols_ + n];
  }

  Cell shared_{};
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Cell> cells_;
};

inline double channel_log_ratio(const Channel& ch, int m, int n, int obs) {
  return ch.log_ratio(m, n, obs);
}

// Separable Bernoulli priors over the factor matrices: px[m][k] = P(x=1),
// py[k][n] = P(y=1). Probabilities of exactly 0 or 1 encode partial
// knowledge (hard-fixed bits).
class Priors {
 public:
  Priors(Table px, Table py) : px_(std::move(px)), py_(std::move(py)) {
    if (px_.cols != py_.rows)
      throw input_error("Priors: px columns must match py rows (rank)");
    for (double v : px_.values) check_prob(v);
    for (double v : py_.values) check_prob(v);
  }

  static Priors uniform(int m, int n, int k, double px = 0.5, double py = 0.5) {
    return Priors(Table(m, k, px), Table(k, n, py));
  }

  int m() const { return px_.rows; }
  int n() const { return py_.cols; }
  int rank() const { return px_.cols; }

  double x(int m, int k) const { return px_(m, k); }
  double y(int k, int n) const { return py_(k, n); }

  void set_x(int m, int k, double p) { check_prob(p); px_(m, k) = p; }
  void set_y(int k, int n, double p) { check_prob(p); py_(k, n) = p; }

  const Table& px() const { return px_; }
  const Table& py() const { return py_; }

 private:
  static void check_prob(double v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw input_error("Priors: probabilities must lie in [0,1]");
  }

  Table px_;
  Table py_;
};

// One observed matrix entry.
struct ObservedEntry {
  int row = 0;
  int col = 0;
  std::uint8_t value = 0;
};

// Sparse set of observed entries over an M x N grid; erased entries are
// simply absent. (row, col) pairs are unique.
class Observation {
 public:
  Observation(int rows, int cols, std::vector<ObservedEntry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows < 0 || cols < 0) throw input_error("Observation: negative dimensions");
    std::unordered_set<std::int64_t> seen;
    seen.reserve(entries_.size() * 2);
    for (const auto& e : entries_) {
      if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
        throw input_error("Observation: entry out of range");
      if (e.value > 1) throw input_error("Observation: value must be 0 or 1");
      std::int64_t key = static_cast<std::int64_t>(e.row) * cols_ + e.col;
      if (!seen.insert(key).second)
        throw input_error("Observation: duplicate (row, col) entry");
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ObservedEntry>& entries() const { return entries_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<ObservedEntry> entries_;
};

// Transmit every entry of z through the channel independently; erased
// entries are dropped. Pure function of (z, ch, seed).
inline Observation apply_channel(const BoolMatrix& z, const Channel& ch,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ObservedEntry> entries;
  for (int m = 0; m < z.rows(); ++m) {
    for (int n = 0; n < z.cols(); ++n) {
      int zv = z(m, n);
      double p0 = ch.prob(m, n, kObserved0, zv);
      double p1 = ch.prob(m, n, kObserved1, zv);
      double u = rng.uniform01();
      if (u < p0) {
        entries.push_back({m, n, 0});
      } else if (u < p0 + p1) {
        entries.push_back({m, n, 1});
      }
      // else erased
    }
  }
  return Observation(z.rows(), z.cols(), std::move(entries));
}

// Unnormalized log-posterior of a full assignment:
//   sum log P_X + sum log P_Y + sum over observed entries of log P(o | z),
// with z the Boolean product bit. Returns -infinity when the assignment has
// zero posterior mass (a zero prior or a zero channel conditional).
inline double posterior_log_score_raw(const BoolMatrix& x, const BoolMatrix& y,
                                      const Observation& obs, const Priors& pr,
                                      const Channel& ch) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  int m_dim = x.rows(), k_dim = x.cols(), n_dim = y.cols();
  if (y.rows() != k_dim || pr.m() != m_dim || pr.n() != n_dim ||
      pr.rank() != k_dim || obs.rows() != m_dim || obs.cols() != n_dim)
    throw input_error("posterior_log_score: dimension mismatch");

  double score = 0.0;
  for (int m = 0; m < m_dim; ++m) {
    for (int k = 0; k < k_dim; ++k) {
      double p = x(m, k) ? pr.x(m, k) : 1.0 - pr.x(m, k);
      if (p <= 0.0) return ninf;
      score += std::log(p);
    }
  }
  for (int k = 0; k < k_dim; ++k) {
    for (int n = 0; n < n_dim; ++n) {
      double p = y(k, n) ? pr.y(k, n) : 1.0 - pr.y(k, n);
      if (p <= 0.0) return ninf;
      score += std::log(p);
    }
  }
  for (const auto& e : obs.entries()) {
    int z = 0;
    for (int k = 0; k < k_dim && !z; ++k) z = x(e.row, k) & y(k, e.col);
    double p = ch.prob(e.row, e.col, e.value, z);
    if (p <= 0.0) return ninf;
    score += std::log(p);
  }
  return score;
}

// Same score with zero-mass assignments floored at -kMaxLogRatio.
inline double posterior_log_score(const BoolMatrix& x, const BoolMatrix& y,
                                  const Observation& obs, const Priors& pr,
                                  const Channel& ch) {
  return std::max(posterior_log_score_raw(x, y, obs, pr, ch), -kMaxLogRatio);
}

}  // namespace boolmp
