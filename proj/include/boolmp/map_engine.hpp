#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "boolmp/messages.hpp"

namespace boolmp {

// One max-sum sweep. Messages flow through the graph in their natural order,
// each stage synchronous over the whole table:
//   1. marginals from the current factor->variable messages,
//   2. damped variable->constraint messages (belief-update form: the full
//      marginal minus the edge's own incoming message),
//   3. constraint->likelihood messages min(u+v, u, v),
//   4. likelihood->constraint messages, reusing the per-entry sum of
//      positive parts and the two largest values instead of per-k scans,
//   5. constraint->variable messages max(0, .)-differences.
// Returns the maximum absolute change across the two damped tables. (A probe
// on the x side alone goes blind on single-row instances, where that table
// decays on its own regardless of the rest of the system.)
inline double map_sweep(MessageState& st, const FactorGraph& g,
                        const EngineConfig& cfg) {
  cfg.validate();
  g.check_state(st);
  const int rank = g.rank();
  const double lambda = cfg.damping;
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
      st.factor_to_obs[i] = clamp_log_ratio(std::min(u + v, std::min(u, v)));
    }
  });

  parallel_for(static_cast<std::int64_t>(g.entry_count()), cfg.threads,
               [&](std::int64_t lo, std::int64_t hi) {
                 constexpr double inf = std::numeric_limits<double>::infinity();
                 for (std::int64_t w = lo; w < hi; ++w) {
                   std::size_t base = st.at(static_cast<std::size_t>(w), 0);
                   double llr = g.llr(static_cast<std::size_t>(w));
                   double sum_pos = 0.0;
                   double max1 = -inf, max2 = -inf;
                   int idx1 = -1;
                   for (int k = 0; k < rank; ++k) {
                     double c = st.factor_to_obs[base + k];
                     sum_pos += pos_part(c);
                     if (c > max1) {
                       max2 = max1;
                       max1 = c;
                       idx1 = k;
                     } else if (c > max2) {
                       max2 = c;
                     }
                   }
                   for (int k = 0; k < rank; ++k) {
                     double other = (k == idx1) ? max2 : max1;
                     // max over an empty set (K = 1) is -inf: the first
                     // branch vanishes and the channel branch decides.
                     double veto = other == -inf ? inf : pos_part(-other);
                     double c = st.factor_to_obs[base + k];
                     st.obs_to_factor[base + k] = clamp_log_ratio(
                         std::min(veto, sum_pos - pos_part(c) + llr));
                   }
                 }
               });

  parallel_for(cells, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double in = st.obs_to_factor[i];
      double u = st.x_to_factor[i];
      double v = st.y_to_factor[i];
      st.factor_to_x[i] = clamp_log_ratio(pos_part(in + v) - pos_part(v));
      st.factor_to_y[i] = clamp_log_ratio(pos_part(in + u) - pos_part(u));
    }
  });

  ++st.iteration;
  return delta.load(std::memory_order_relaxed);
}

inline double map_sweep(MessageState& st, const Observation& obs,
                        const Priors& pr, const Channel& ch,
                        const EngineConfig& cfg) {
  FactorGraph g(obs, pr, ch, cfg.rank);
  return map_sweep(st, g, cfg);
}

// Full max-sum run: random init, sweep to convergence or max_iters, then
// threshold the marginals. Convergence is max |delta x_to_factor| <= eps,
// accepted from the second sweep on (the statistic is trivially zero on the
// very first sweep from a cold state).
inline FactorizationResult run_map(const Observation& obs, const Priors& pr,
                                   const Channel& ch, const EngineConfig& cfg) {
  cfg.validate();
  if (obs.empty())
    throw input_error("run_map: empty observation constrains nothing");
  FactorGraph g(obs, pr, ch, cfg.rank);
  MessageState st = init_messages(obs, cfg);

  FactorizationResult res;
  double delta = std::numeric_limits<double>::infinity();
  while (st.iteration < cfg.max_iters) {
    delta = map_sweep(st, g, cfg);
    if (st.iteration >= 2 && delta <= cfg.eps) {
      res.converged = true;
      break;
    }
  }
  res.iterations = st.iteration;
  res.final_delta = delta;
  compute_marginals(st, g, res.gamma_x, res.gamma_y, cfg.threads);
  auto xy = threshold_assign(res.gamma_x, res.gamma_y);
  res.x = std::move(xy.first);
  res.y = std::move(xy.second);
  return res;
}

}  // namespace boolmp
