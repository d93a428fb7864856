#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "boolmp/bool_matrix.hpp"
#include "boolmp/map_engine.hpp"
#include "boolmp/model.hpp"
#include "boolmp/parallel.hpp"
#include "boolmp/random.hpp"

namespace boolmp {

// Factor density p with X, Y ~ Bernoulli(p) i.i.d. making P(z = 1) exactly
// one half for a rank-K Boolean product: p = sqrt(1 - 0.5^(1/K)).
inline double balanced_density(int k) {
  if (k < 1) throw input_error("balanced_density: rank must be >= 1");
  return std::sqrt(1.0 - std::pow(0.5, 1.0 / k));
}

// Approximate minimum number of observed entries for recoverability:
// K (M + N - ln K + 1). Natural log; the additive O(log K) slack of the
// counting argument is dropped.
inline double info_bound(int m, int n, int k) {
  if (m < 1 || n < 1 || k < 1)
    throw input_error("info_bound: dimensions must be >= 1");
  return static_cast<double>(k) * (m + n - std::log(static_cast<double>(k)) + 1.0);
}

struct Instance {
  BoolMatrix x;
  BoolMatrix y;
  BoolMatrix z;
};

// X, Y i.i.d. Bernoulli at the given densities, Z their Boolean product.
inline Instance generate_instance(int m, int n, int k, double px, double py,
                                  std::uint64_t seed) {
  if (!(px >= 0.0 && px <= 1.0) || !(py >= 0.0 && py <= 1.0))
    throw input_error("generate_instance: densities must lie in [0,1]");
  Instance inst;
  inst.x = BoolMatrix(m, k);
  inst.y = BoolMatrix(k, n);
  Rng rng(seed);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) inst.x(i, j) = rng.bernoulli(px) ? 1 : 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) inst.y(i, j) = rng.bernoulli(py) ? 1 : 0;
  inst.z = boolean_product(inst.x, inst.y);
  return inst;
}

// Exactly `count` distinct cells of z, chosen uniformly without replacement,
// each corrupted by the channel conditioned on non-erasure. Gives exact
// |observed| control for sweeps; i.i.d. erasure stays with apply_channel.
inline Observation sample_observation(const BoolMatrix& z, std::size_t count,
                                      const Channel& ch, std::uint64_t seed) {
  std::size_t total = z.size();
  if (count > total)
    throw input_error("sample_observation: more entries requested than cells");
  Rng rng(seed);
  std::vector<std::uint32_t> cells(total);
  std::iota(cells.begin(), cells.end(), 0u);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(cells[i], cells[j]);
  }
  std::sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(count));

  std::vector<ObservedEntry> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    int m = static_cast<int>(cells[i] / static_cast<std::uint32_t>(z.cols()));
    int n = static_cast<int>(cells[i] % static_cast<std::uint32_t>(z.cols()));
    int zv = z(m, n);
    double p0 = ch.prob(m, n, kObserved0, zv);
    double p1 = ch.prob(m, n, kObserved1, zv);
    if (p0 + p1 <= 0.0)
      throw input_error("sample_observation: channel always erases this cell");
    std::uint8_t o = rng.uniform01() * (p0 + p1) < p0 ? 0 : 1;
    entries.push_back({m, n, o});
  }
  return Observation(z.rows(), z.cols(), std::move(entries));
}

// Grid for phase-transition sweeps. `channel` corrupts the sampled entries
// (generation side); the inference channel is a run_sweep argument because
// reconstruction under a symmetric channel does not depend on its exact
// confidence, while generation noise is an experimental knob.
struct SweepGrid {
  int rows = 0;
  int cols = 0;
  std::vector<int> ranks;
  std::vector<double> obs_fractions;
  int repeats = 1;
  Channel channel = Channel::symmetric(1.0);
  std::uint64_t seed = 0;

  void validate() const {
    if (rows < 1 || cols < 1) throw input_error("SweepGrid: dimensions must be >= 1");
    if (ranks.empty() || obs_fractions.empty())
      throw input_error("SweepGrid: ranks and obs_fractions must be nonempty");
    for (int k : ranks)
      if (k < 1) throw input_error("SweepGrid: ranks must be >= 1");
    for (double f : obs_fractions)
      if (!(f > 0.0 && f <= 1.0))
        throw input_error("SweepGrid: obs_fractions must lie in (0,1]");
    if (repeats < 1) throw input_error("SweepGrid: repeats must be >= 1");
  }
};

struct SweepRow {
  int rank = 0;
  double obs_fraction = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double mean_iters = 0.0;
};

// One grid point x repeat: generate at balanced density, observe an exact
// fraction of cells, run max-sum, score against the full ground truth.
// Per-trial seeds are grid.seed + repeat index with fixed substreams, so a
// grid is reproducible regardless of execution order or thread count.
inline std::vector<SweepRow> run_sweep(const SweepGrid& grid,
                                       const EngineConfig& cfg,
                                       const Channel& inference) {
  grid.validate();
  cfg.validate();

  struct Trial {
    std::size_t row;
    int rank;
    double fraction;
    std::uint64_t seed;
  };
  std::vector<Trial> trials;
  std::vector<SweepRow> rows;
  for (int k : grid.ranks) {
    for (double f : grid.obs_fractions) {
      for (int r = 0; r < grid.repeats; ++r)
        trials.push_back({rows.size(), k, f, grid.seed + static_cast<std::uint64_t>(r)});
      rows.push_back({k, f, 0.0, 0.0, 0.0});
    }
  }

  std::vector<double> errors(trials.size());
  std::vector<double> iters(trials.size());
  EngineConfig trial_cfg = cfg;
  trial_cfg.threads = 1;  // concurrency lives at the trial level here
  parallel_for(static_cast<std::int64_t>(trials.size()),
               cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t i = lo; i < hi; ++i) {
                   const Trial& t = trials[static_cast<std::size_t>(i)];
                   double density = balanced_density(t.rank);
                   Instance inst = generate_instance(grid.rows, grid.cols, t.rank,
                                                     density, density,
                                                     Rng(t.seed, 0).next());
                   auto count = static_cast<std::size_t>(
                       t.fraction * static_cast<double>(inst.z.size()));
                   Observation obs = sample_observation(inst.z, count, grid.channel,
                                                        Rng(t.seed, 1).next());
                   EngineConfig run_cfg = trial_cfg;
                   run_cfg.rank = t.rank;
                   run_cfg.seed = Rng(t.seed, 2).next();
                   Priors pr = Priors::uniform(grid.rows, grid.cols, t.rank);
                   FactorizationResult res = run_map(obs, pr, inference, run_cfg);
                   BoolMatrix zhat = boolean_product(res.x, res.y);
                   errors[static_cast<std::size_t>(i)] =
                       reconstruction_error(inst.z, zhat);
                   iters[static_cast<std::size_t>(i)] = res.iterations;
                 }
               });

  std::size_t trial_idx = 0;
  for (auto& row : rows) {
    double sum = 0.0, sum_sq = 0.0, it_sum = 0.0;
    for (int r = 0; r < grid.repeats; ++r, ++trial_idx) {
      sum += errors[trial_idx];
      sum_sq += errors[trial_idx] * errors[trial_idx];
      it_sum += iters[trial_idx];
    }
    double n = grid.repeats;
    row.mean_error = sum / n;
    row.std_error =
        n > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)))
              : 0.0;
    row.mean_iters = it_sum / n;
  }
  return rows;
}

}  // namespace boolmp
