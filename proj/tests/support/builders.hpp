#pragma once

// Shared helpers for building random test fixtures.

#include <cstdint>
#include <vector>

#include "boolmp/messages.hpp"
#include "boolmp/model.hpp"
#include "boolmp/random.hpp"

namespace boolmp_test {

// Random observation with `count` distinct entries and random 0/1 values.
inline boolmp::Observation random_observation(int rows, int cols,
                                              std::size_t count,
                                              std::uint64_t seed) {
  boolmp::Rng rng(seed);
  std::vector<std::uint32_t> cells(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = static_cast<std::uint32_t>(i);
  std::vector<boolmp::ObservedEntry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(cells.size() - i));
    std::swap(cells[i], cells[j]);
    entries.push_back({static_cast<int>(cells[i] / cols),
                       static_cast<int>(cells[i] % cols),
                       rng.bernoulli(0.5) ? std::uint8_t{1} : std::uint8_t{0}});
  }
  return boolmp::Observation(rows, cols, std::move(entries));
}

// Soft random priors bounded away from 0 and 1.
inline boolmp::Priors random_soft_priors(int m, int n, int k, std::uint64_t seed) {
  boolmp::Table px(m, k), py(k, n);
  boolmp::Rng rng(seed);
  for (auto& v : px.values) v = 0.2 + 0.6 * rng.uniform01();
  for (auto& v : py.values) v = 0.2 + 0.6 * rng.uniform01();
  return boolmp::Priors(std::move(px), std::move(py));
}

inline boolmp::MessageState random_state(const boolmp::Observation& obs, int rank,
                                         std::uint64_t seed) {
  boolmp::EngineConfig cfg;
  cfg.rank = rank;
  cfg.seed = seed;
  return boolmp::init_messages(obs, cfg);
}

}  // namespace boolmp_test
