#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "boolmp/bool_matrix.hpp"
#include "boolmp/core.hpp"
#include "boolmp/model.hpp"
#include "boolmp/parallel.hpp"
#include "boolmp/random.hpp"

namespace boolmp {

// Which family of sum-product updates run_marginal_map/sum_product_sweep use.
// kDerived is the standard sum-product derivation for this factor graph;
// kAsPrinted keeps the historical update set it replaces (which is not exact
// on tree instances; see tests).
enum class SumProductUpdate { kDerived, kAsPrinted };

struct EngineConfig {
  int rank = 1;
  int max_iters = 200;
  double damping = 0.4;
  double eps = 1e-6;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  int threads = 1;
  SumProductUpdate sum_product_update = SumProductUpdate::kDerived;

  void validate() const {
    if (rank < 1) throw input_error("EngineConfig: rank must be >= 1");
    if (max_iters < 1) throw input_error("EngineConfig: max_iters must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0))
      throw input_error("EngineConfig: damping must lie in (0,1]");
    if (!(eps > 0.0)) throw input_error("EngineConfig: eps must be positive");
    if (threads < 1) throw input_error("EngineConfig: threads must be >= 1");
  }
};

// Log-ratio message tables, one value per (observed entry, k). Naming is by
// graph edge: each observed entry (m,n) owns K constraint factors linking
// x[m][k], y[k][n] and the entry's likelihood factor.
//   factor_to_x   : constraint -> x variable        (marginal evidence for x)
//   x_to_factor   : x variable -> constraint
//   factor_to_y   : constraint -> y variable
//   y_to_factor   : y variable -> constraint
//   factor_to_obs : constraint -> likelihood factor
//   obs_to_factor : likelihood factor -> constraint
struct MessageState {
  std::size_t entry_count = 0;
  int rank = 0;
  std::vector<double> factor_to_x;
  std::vector<double> x_to_factor;
  std::vector<double> factor_to_y;
  std::vector<double> y_to_factor;
  std::vector<double> factor_to_obs;
  std::vector<double> obs_to_factor;
  int iteration = 0;
  std::uint64_t softplus_inv_clamps = 0;

  std::size_t cells() const { return entry_count * static_cast<std::size_t>(rank); }
  std::size_t at(std::size_t entry, int k) const {
    return entry * static_cast<std::size_t>(rank) + k;
  }
};

struct DecimationStep {
  bool on_x = true;
  int row = 0;
  int col = 0;
  std::uint8_t value = 0;
  int round = 0;
};

struct FactorizationResult {
  BoolMatrix x;
  BoolMatrix y;
  Table gamma_x;
  Table gamma_y;
  int iterations = 0;
  bool converged = false;
  double final_delta = 0.0;
  // Marginal-mode metadata.
  int decimation_rounds = 0;
  int unconverged_rounds = 0;
  std::uint64_t softplus_inv_clamps = 0;
  std::vector<DecimationStep> decimation_trace;
};

struct DecimationConfig {
  int batch = 1;        // variables fixed per round
  int max_rounds = 0;   // 0 = run until every variable is fixed

  void validate() const {
    if (batch < 1) throw input_error("DecimationConfig: batch must be >= 1");
    if (max_rounds < 0) throw input_error("DecimationConfig: max_rounds must be >= 0");
  }
};

// Indexed view of one inference problem: per-row/per-column entry lists,
// prior logits, and the per-entry channel log-ratio. Entry indices follow
// the observation's entry order; all sums over entries accumulate in
// ascending entry index so results do not depend on thread count.
class FactorGraph {
 public:
  FactorGraph(const Observation& obs, const Priors& pr, const Channel& ch,
              int rank)
      : rows_(obs.rows()),
        cols_(obs.cols()),
        rank_(rank),
        entries_(obs.entries()),
        logit_x_(pr.m(), pr.rank()),
        logit_y_(pr.rank(), pr.n()) {
    if (rank < 1) throw input_error("FactorGraph: rank must be >= 1");
    if (pr.m() != rows_ || pr.n() != cols_ || pr.rank() != rank)
      throw input_error("FactorGraph: prior dimensions disagree with observation");
    row_entries_.resize(rows_);
    col_entries_.resize(cols_);
    llr_.reserve(entries_.size());
    for (std::size_t w = 0; w < entries_.size(); ++w) {
      const auto& e = entries_[w];
      row_entries_[e.row].push_back(w);
      col_entries_[e.col].push_back(w);
      llr_.push_back(ch.log_ratio(e.row, e.col, e.value));
    }
    for (int m = 0; m < rows_; ++m)
      for (int k = 0; k < rank_; ++k) logit_x_(m, k) = logit(pr.x(m, k));
    for (int k = 0; k < rank_; ++k)
      for (int n = 0; n < cols_; ++n) logit_y_(k, n) = logit(pr.y(k, n));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int rank() const { return rank_; }
  std::size_t entry_count() const { return entries_.size(); }
  const std::vector<ObservedEntry>& entries() const { return entries_; }
  const std::vector<std::size_t>& row_entries(int m) const { return row_entries_[m]; }
  const std::vector<std::size_t>& col_entries(int n) const { return col_entries_[n]; }
  double llr(std::size_t entry) const { return llr_[entry]; }
  double logit_x(int m, int k) const { return logit_x_(m, k); }
  double logit_y(int k, int n) const { return logit_y_(k, n); }

  void check_state(const MessageState& st) const {
    if (st.entry_count != entries_.size() || st.rank != rank_ ||
        st.factor_to_x.size() != st.cells() || st.x_to_factor.size() != st.cells() ||
        st.factor_to_y.size() != st.cells() || st.y_to_factor.size() != st.cells() ||
        st.factor_to_obs.size() != st.cells() || st.obs_to_factor.size() != st.cells())
      throw input_error("MessageState: shape disagrees with the factor graph");
  }

 private:
  int rows_;
  int cols_;
  int rank_;
  std::vector<ObservedEntry> entries_;
  std::vector<std::vector<std::size_t>> row_entries_;
  std::vector<std::vector<std::size_t>> col_entries_;
  std::vector<double> llr_;
  Table logit_x_;
  Table logit_y_;
};

// Random initialization: every table cell is an independent logit of a
// uniform draw, scaled by cfg.init_scale. Scale 0 gives the all-zero state.
inline MessageState init_messages(const Observation& obs, const EngineConfig& cfg) {
  cfg.validate();
  MessageState st;
  st.entry_count = obs.size();
  st.rank = cfg.rank;
  std::size_t cells = st.cells();
  Rng rng(cfg.seed);
  auto fill = [&](std::vector<double>& table) {
    table.resize(cells);
    for (auto& v : table)
      v = clamp_log_ratio(cfg.init_scale * rng.logit_of_uniform());
  };
  fill(st.factor_to_x);
  fill(st.x_to_factor);
  fill(st.factor_to_y);
  fill(st.y_to_factor);
  fill(st.factor_to_obs);
  fill(st.obs_to_factor);
  return st;
}

// Marginal log-ratios: prior logit plus the sum of incoming factor messages
// along the variable's observed row/column. Hard priors pin the marginal to
// +/-kMaxLogRatio regardless of messages.
inline void compute_marginals(const MessageState& st, const FactorGraph& g,
                              Table& gamma_x, Table& gamma_y, int threads = 1) {
  g.check_state(st);
  gamma_x = Table(g.rows(), g.rank());
  gamma_y = Table(g.rank(), g.cols());
  int rank = g.rank();
  parallel_for(g.rows(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t m = lo; m < hi; ++m) {
      for (int k = 0; k < rank; ++k) {
        double sum = g.logit_x(static_cast<int>(m), k);
        for (std::size_t w : g.row_entries(static_cast<int>(m)))
          sum += st.factor_to_x[st.at(w, k)];
        gamma_x(static_cast<int>(m), k) = clamp_log_ratio(sum);
      }
    }
  });
  parallel_for(g.cols(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t n = lo; n < hi; ++n) {
      for (int k = 0; k < rank; ++k) {
        double sum = g.logit_y(k, static_cast<int>(n));
        for (std::size_t w : g.col_entries(static_cast<int>(n)))
          sum += st.factor_to_y[st.at(w, k)];
        gamma_y(k, static_cast<int>(n)) = clamp_log_ratio(sum);
      }
    }
  });
}

inline std::pair<Table, Table> compute_marginals(const MessageState& st,
                                                 const Observation& obs,
                                                 const Priors& pr) {
  // Channel does not enter the marginals; a trivial one satisfies the graph.
  FactorGraph g(obs, pr, Channel::symmetric(0.5), pr.rank());
  Table gx, gy;
  compute_marginals(st, g, gx, gy);
  return {std::move(gx), std::move(gy)};
}

// Bit = 1 iff the marginal log-ratio is strictly positive.
inline std::pair<BoolMatrix, BoolMatrix> threshold_assign(const Table& gamma_x,
                                                          const Table& gamma_y) {
  BoolMatrix x(gamma_x.rows, gamma_x.cols);
  BoolMatrix y(gamma_y.rows, gamma_y.cols);
  for (int i = 0; i < gamma_x.rows; ++i)
    for (int j = 0; j < gamma_x.cols; ++j) x(i, j) = gamma_x(i, j) > 0.0 ? 1 : 0;
  for (int i = 0; i < gamma_y.rows; ++i)
    for (int j = 0; j < gamma_y.cols; ++j) y(i, j) = gamma_y(i, j) > 0.0 ? 1 : 0;
  return {std::move(x), std::move(y)};
}

}  // namespace boolmp
