#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "boolmp/core.hpp"
#include "boolmp/model.hpp"

namespace boolmp {

// Desk-scale exhaustive enumeration over all 2^(K(M+N)) assignments. The
// verification instrument everything else is checked against.

inline constexpr int kMaxOracleBits = 24;

namespace detail {

inline int oracle_bits(const Observation& obs, int rank) {
  if (rank < 1) throw input_error("oracle: rank must be >= 1");
  long bits = static_cast<long>(rank) * (obs.rows() + obs.cols());
  if (bits > kMaxOracleBits)
    throw size_error("oracle: instance needs " + std::to_string(bits) +
                     " assignment bits, limit is " + std::to_string(kMaxOracleBits));
  return static_cast<int>(bits);
}

// Bits are X row-major first, then Y row-major.
inline void decode_assignment(std::uint32_t code, BoolMatrix& x, BoolMatrix& y) {
  int pos = 0;
  for (int m = 0; m < x.rows(); ++m)
    for (int k = 0; k < x.cols(); ++k) x(m, k) = (code >> pos++) & 1u;
  for (int k = 0; k < y.rows(); ++k)
    for (int n = 0; n < y.cols(); ++n) y(k, n) = (code >> pos++) & 1u;
}

// Canonical form modulo the joint K-permutation symmetry: the sorted list of
// per-k (X column, Y row) bit strings.
inline std::vector<std::string> canonical_columns(const BoolMatrix& x,
                                                  const BoolMatrix& y) {
  std::vector<std::string> cols(static_cast<std::size_t>(x.cols()));
  for (int k = 0; k < x.cols(); ++k) {
    std::string s;
    s.reserve(static_cast<std::size_t>(x.rows() + y.cols()));
    for (int m = 0; m < x.rows(); ++m) s.push_back(char('0' + x(m, k)));
    for (int n = 0; n < y.cols(); ++n) s.push_back(char('0' + y(k, n)));
    cols[static_cast<std::size_t>(k)] = std::move(s);
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

}  // namespace detail

struct ExactMapResult {
  BoolMatrix x;
  BoolMatrix y;
  double best_score = 0.0;
  bool is_unique = false;  // unique up to the K-column permutation symmetry
};

inline ExactMapResult exact_map(const Observation& obs, int rank,
                                const Priors& pr, const Channel& ch) {
  int bits = detail::oracle_bits(obs, rank);
  std::uint64_t total = std::uint64_t{1} << bits;

  BoolMatrix x(obs.rows(), rank), y(rank, obs.cols());
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> argmax_codes;
  const double tie_tol = 1e-9;

  for (std::uint64_t code = 0; code < total; ++code) {
    detail::decode_assignment(static_cast<std::uint32_t>(code), x, y);
    double score = posterior_log_score(x, y, obs, pr, ch);
    if (score > best + tie_tol) {
      best = score;
      argmax_codes.assign(1, static_cast<std::uint32_t>(code));
    } else if (score >= best - tie_tol) {
      best = std::max(best, score);
      argmax_codes.push_back(static_cast<std::uint32_t>(code));
    }
  }

  ExactMapResult res;
  detail::decode_assignment(argmax_codes.front(), x, y);
  res.x = x;
  res.y = y;
  res.best_score = best;
  auto canon = detail::canonical_columns(res.x, res.y);
  res.is_unique = true;
  for (std::uint32_t code : argmax_codes) {
    detail::decode_assignment(code, x, y);
    if (detail::canonical_columns(x, y) != canon) {
      res.is_unique = false;
      break;
    }
  }
  return res;
}

// Exact posterior marginal log-ratios: for every bit, the log of the ratio
// between total posterior mass with the bit set and with it clear.
inline std::pair<Table, Table> exact_marginals(const Observation& obs, int rank,
                                               const Priors& pr,
                                               const Channel& ch) {
  int bits = detail::oracle_bits(obs, rank);
  std::uint64_t total = std::uint64_t{1} << bits;

  std::vector<LogSumExp> mass_one(static_cast<std::size_t>(bits));
  std::vector<LogSumExp> mass_zero(static_cast<std::size_t>(bits));
  BoolMatrix x(obs.rows(), rank), y(rank, obs.cols());
  for (std::uint64_t code = 0; code < total; ++code) {
    detail::decode_assignment(static_cast<std::uint32_t>(code), x, y);
    // Raw score: zero-mass assignments must contribute nothing.
    double score = posterior_log_score_raw(x, y, obs, pr, ch);
    for (int b = 0; b < bits; ++b) {
      if ((code >> b) & 1u)
        mass_one[static_cast<std::size_t>(b)].add(score);
      else
        mass_zero[static_cast<std::size_t>(b)].add(score);
    }
  }

  Table gamma_x(obs.rows(), rank), gamma_y(rank, obs.cols());
  int pos = 0;
  auto ratio = [&](int b) {
    double one = mass_one[static_cast<std::size_t>(b)].value();
    double zero = mass_zero[static_cast<std::size_t>(b)].value();
    if (one == zero) return 0.0;  // covers the doubly-impossible corner
    return clamp_log_ratio(one - zero);
  };
  for (int m = 0; m < obs.rows(); ++m)
    for (int k = 0; k < rank; ++k) gamma_x(m, k) = ratio(pos++);
  for (int k = 0; k < rank; ++k)
    for (int n = 0; n < obs.cols(); ++n) gamma_y(k, n) = ratio(pos++);
  return {std::move(gamma_x), std::move(gamma_y)};
}

}  // namespace boolmp
