#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "boolmp/messages.hpp"

namespace boolmp {

namespace detail {

// log(1 + e^u + e^v), overflow-safe.
inline double log1pexp2(double u, double v) {
  double m = std::max(0.0, std::max(u, v));
  return m + std::log(std::exp(-m) + std::exp(u - m) + std::exp(v - m));
}

}  // namespace detail

// One sum-product sweep (posterior marginals instead of MAP). Identical
// staging to map_sweep; max-of-zero combines become softplus combines.
//
// Two update families are selectable:
//  - kDerived: constraint->likelihood carries its pair normalizer,
//        c  = u + v - log(1 + e^u + e^v),
//        a  = softplus(in + v) - softplus(v),
//    which makes the sweep exact on tree instances (see the enumeration
//    oracle tests).
//  - kAsPrinted: the historical form this replaces,
//        c  = u + v,
//        a  = in + v - log(1 + e^v + e^u).
// The likelihood->constraint update is shared:
//        out_k = T + llr - softplus(softplus_inv(T) + llr),
//        T     = sum_{k' != k} softplus(c_k').
inline double sum_product_sweep(MessageState& st, const FactorGraph& g,
                                const EngineConfig& cfg) {
  cfg.validate();
  g.check_state(st);
  const int rank = g.rank();
  const double lambda = cfg.damping;
  const bool derived = cfg.sum_product_update == SumProductUpdate::kDerived;
  const std::int64_t cells = static_cast<std::int64_t>(st.cells());

  Table gamma_x, gamma_y;
  compute_marginals(st, g, gamma_x, gamma_y, cfg.threads);

  std::atomic<double> delta{0.0};
  parallel_for(static_cast<std::int64_t>(g.entry_count()), cfg.threads,
               [&](std::int64_t lo, std::int64_t hi) {
                 double local = 0.0;
                 for (std::int64_t w = lo; w < hi; ++w) {
                   const auto& e = g.entries()[static_cast<std::size_t>(w)];
                   for (int k = 0; k < rank; ++k) {
                     std::size_t i = st.at(static_cast<std::size_t>(w), k);
                     double old_x = st.x_to_factor[i];
                     double new_x = clamp_log_ratio(
                         (1.0 - lambda) * old_x +
                         lambda * (gamma_x(e.row, k) - st.factor_to_x[i]));
                     st.x_to_factor[i] = new_x;
                     local = std::max(local, std::fabs(new_x - old_x));
                     double old_y = st.y_to_factor[i];
                     double new_y = clamp_log_ratio(
                         (1.0 - lambda) * old_y +
                         lambda * (gamma_y(k, e.col) - st.factor_to_y[i]));
                     st.y_to_factor[i] = new_y;
                     local = std::max(local, std::fabs(new_y - old_y));
                   }
                 }
                 detail::atomic_max(delta, local);
               });

  parallel_for(cells, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double u = st.x_to_factor[i];
      double v = st.y_to_factor[i];
      double c = derived ? u + v - detail::log1pexp2(u, v) : u + v;
      st.factor_to_obs[i] = clamp_log_ratio(c);
    }
  });

  std::atomic<std::uint64_t> clamps{0};
  parallel_for(static_cast<std::int64_t>(g.entry_count()), cfg.threads,
               [&](std::int64_t lo, std::int64_t hi) {
                 std::uint64_t local_clamps = 0;
                 for (std::int64_t w = lo; w < hi; ++w) {
                   std::size_t base = st.at(static_cast<std::size_t>(w), 0);
                   double llr = g.llr(static_cast<std::size_t>(w));
                   if (llr == 0.0) {
                     // T - softplus(softplus_inv(T)) is identically zero;
                     // emit it exactly so uninformative entries stay inert.
                     for (int k = 0; k < rank; ++k) st.obs_to_factor[base + k] = 0.0;
                     continue;
                   }
                   double total = 0.0;
                   for (int k = 0; k < rank; ++k)
                     total += softplus(st.factor_to_obs[base + k]);
                   for (int k = 0; k < rank; ++k) {
                     double t = total - softplus(st.factor_to_obs[base + k]);
                     bool clamped = false;
                     double inv = softplus_inv(t, &clamped);
                     if (clamped) ++local_clamps;
                     st.obs_to_factor[base + k] =
                         clamp_log_ratio(t + llr - softplus(inv + llr));
                   }
                 }
                 if (local_clamps) clamps.fetch_add(local_clamps);
               });
  st.softplus_inv_clamps += clamps.load();

  parallel_for(cells, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double in = st.obs_to_factor[i];
      double u = st.x_to_factor[i];
      double v = st.y_to_factor[i];
      double a, b;
      if (derived) {
        a = softplus(in + v) - softplus(v);
        b = softplus(in + u) - softplus(u);
      } else {
        a = in + v - detail::log1pexp2(u, v);
        b = in + u - detail::log1pexp2(u, v);
      }
      st.factor_to_x[i] = clamp_log_ratio(a);
      st.factor_to_y[i] = clamp_log_ratio(b);
    }
  });

  ++st.iteration;
  return delta.load(std::memory_order_relaxed);
}

inline double sum_product_sweep(MessageState& st, const Observation& obs,
                                const Priors& pr, const Channel& ch,
                                const EngineConfig& cfg) {
  FactorGraph g(obs, pr, ch, cfg.rank);
  return sum_product_sweep(st, g, cfg);
}

namespace detail {

inline bool prior_is_hard(double p) { return p == 0.0 || p == 1.0; }

struct Candidate {
  double bias;
  bool on_x;
  int row;
  int col;
};

}  // namespace detail

// Marginal-MAP by sum-product plus decimation: converge, fix the most
// biased still-free variables by rewriting their priors to 0/1, and repeat
// on the warm-started state until everything is pinned (or max_rounds).
inline FactorizationResult run_marginal_map(const Observation& obs,
                                            const Priors& pr, const Channel& ch,
                                            const EngineConfig& cfg,
                                            const DecimationConfig& dec) {
  cfg.validate();
  dec.validate();
  if (obs.empty())
    throw input_error("run_marginal_map: empty observation constrains nothing");

  Priors working = pr;
  MessageState st = init_messages(obs, cfg);
  FactorizationResult res;
  double last_delta = 0.0;
  int rounds = 0;

  auto count_free = [&]() {
    int free_vars = 0;
    for (int m = 0; m < working.m(); ++m)
      for (int k = 0; k < working.rank(); ++k)
        free_vars += !detail::prior_is_hard(working.x(m, k));
    for (int k = 0; k < working.rank(); ++k)
      for (int n = 0; n < working.n(); ++n)
        free_vars += !detail::prior_is_hard(working.y(k, n));
    return free_vars;
  };

  while (count_free() > 0 && (dec.max_rounds == 0 || rounds < dec.max_rounds)) {
    ++rounds;
    FactorGraph g(obs, working, ch, cfg.rank);
    int sweeps = 0;
    bool converged = false;
    while (sweeps < cfg.max_iters) {
      last_delta = sum_product_sweep(st, g, cfg);
      ++sweeps;
      if (sweeps >= 2 && last_delta <= cfg.eps) {
        converged = true;
        break;
      }
    }
    if (!converged) ++res.unconverged_rounds;

    Table gamma_x, gamma_y;
    compute_marginals(st, g, gamma_x, gamma_y, cfg.threads);

    std::vector<detail::Candidate> free_vars;
    for (int m = 0; m < working.m(); ++m)
      for (int k = 0; k < working.rank(); ++k)
        if (!detail::prior_is_hard(working.x(m, k)))
          free_vars.push_back({std::fabs(gamma_x(m, k)), true, m, k});
    for (int k = 0; k < working.rank(); ++k)
      for (int n = 0; n < working.n(); ++n)
        if (!detail::prior_is_hard(working.y(k, n)))
          free_vars.push_back({std::fabs(gamma_y(k, n)), false, k, n});
    std::stable_sort(free_vars.begin(), free_vars.end(),
                     [](const auto& a, const auto& b) { return a.bias > b.bias; });

    int to_fix = std::min<int>(dec.batch, static_cast<int>(free_vars.size()));
    for (int i = 0; i < to_fix; ++i) {
      const auto& c = free_vars[static_cast<std::size_t>(i)];
      double gamma = c.on_x ? gamma_x(c.row, c.col) : gamma_y(c.row, c.col);
      std::uint8_t value = gamma > 0.0 ? 1 : 0;
      if (c.on_x)
        working.set_x(c.row, c.col, value);
      else
        working.set_y(c.row, c.col, value);
      res.decimation_trace.push_back({c.on_x, c.row, c.col, value, rounds});
    }
  }

  FactorGraph g(obs, working, ch, cfg.rank);
  compute_marginals(st, g, res.gamma_x, res.gamma_y, cfg.threads);
  auto xy = threshold_assign(res.gamma_x, res.gamma_y);
  res.x = std::move(xy.first);
  res.y = std::move(xy.second);
  res.iterations = st.iteration;
  res.final_delta = last_delta;
  res.converged = res.unconverged_rounds == 0;
  res.decimation_rounds = rounds;
  res.softplus_inv_clamps = st.softplus_inv_clamps;
  return res;
}

}  // namespace boolmp
