#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "boolmp/bool_matrix.hpp"
#include "boolmp/messages.hpp"
#include "boolmp/model.hpp"
#include "boolmp/random.hpp"
#include "boolmp/synth.hpp"

namespace boolmp {

namespace detail {

inline std::string loc(const std::string& name, int line) {
  return name + ":" + std::to_string(line) + ": ";
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open " + path + " for writing");
  return out;
}

// Fixed-format reals for CSV output: 6 significant digits, '.' separator.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dense matrix text: first line "M N", then M lines of exactly N chars 0/1.
// ---------------------------------------------------------------------------

inline BoolMatrix parse_dense_matrix(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw input_error(detail::loc(name, 1) + "missing header");
  std::istringstream header(line);
  long rows = -1, cols = -1;
  std::string extra;
  if (!(header >> rows >> cols) || (header >> extra) || rows < 0 || cols < 0)
    throw input_error(detail::loc(name, 1) + "header must be 'M N'");
  BoolMatrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line))
      throw input_error(detail::loc(name, r + 2) + "unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<long>(line.size()) != cols)
      throw input_error(detail::loc(name, r + 2) + "expected exactly " +
                        std::to_string(cols) + " characters");
    for (int c = 0; c < cols; ++c) {
      if (line[static_cast<std::size_t>(c)] == '1')
        m(r, c) = 1;
      else if (line[static_cast<std::size_t>(c)] != '0')
        throw input_error(detail::loc(name, r + 2) + "characters must be 0 or 1");
    }
  }
  return m;
}

inline void write_dense_matrix(const BoolMatrix& m, std::ostream& out) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << char('0' + m(r, c));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Plain PBM (magic P1), 1 = black. PBM headers are width then height.
// ---------------------------------------------------------------------------

inline BoolMatrix parse_pbm(std::istream& in, const std::string& name) {
  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
      // Plain PBM allows pixel digits without separating whitespace.
      if (tok.size() == 1 && (tok[0] == '0' || tok[0] == '1')) {
        int peek = in.peek();
        if (peek == '0' || peek == '1' || peek == EOF || std::isspace(peek) ||
            peek == '#')
          break;
      }
    }
    return tok;
  };

  if (next_token() != "P1") throw input_error(name + ": not a plain PBM (magic P1)");
  auto read_dim = [&]() {
    std::string tok = next_token();
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw input_error(name + ": bad PBM dimension '" + tok + "'");
    }
  };
  long width = read_dim();
  long height = read_dim();
  BoolMatrix m(static_cast<int>(height), static_cast<int>(width));
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      std::string tok = next_token();
      if (tok == "1")
        m(static_cast<int>(r), static_cast<int>(c)) = 1;
      else if (tok != "0")
        throw input_error(name + ": bad PBM pixel '" + tok + "'");
    }
  }
  return m;
}

inline void write_pbm(const BoolMatrix& m, std::ostream& out) {
  out << "P1\n" << m.cols() << ' ' << m.rows() << '\n';
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << int(m(r, c));
    }
    out << '\n';
  }
}

// Reads either format, deciding by the P1 magic.
inline BoolMatrix read_dense_matrix(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  in.clear();
  in.seekg(0);
  if (m0 == 'P' && m1 == '1') return parse_pbm(in, path);
  return parse_dense_matrix(in, path);
}

inline void write_matrix_file(const BoolMatrix& m, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pbm")
    write_pbm(m, out);
  else
    write_dense_matrix(m, out);
}

// ---------------------------------------------------------------------------
// Sparse triplet text: first line "M N", then "m n v" per observed entry,
// 0-based, v in {0,1}.
// ---------------------------------------------------------------------------

inline Observation parse_observations(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw input_error(detail::loc(name, 1) + "missing header");
  std::istringstream header(line);
  long rows = -1, cols = -1;
  std::string extra;
  if (!(header >> rows >> cols) || (header >> extra) || rows < 0 || cols < 0)
    throw input_error(detail::loc(name, 1) + "header must be 'M N'");

  std::vector<ObservedEntry> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    long m = -1, n = -1, v = -1;
    if (!(row >> m >> n >> v) || (row >> extra))
      throw input_error(detail::loc(name, line_no) + "expected 'm n v'");
    if (m < 0 || m >= rows || n < 0 || n >= cols)
      throw input_error(detail::loc(name, line_no) + "entry out of range");
    if (v != 0 && v != 1)
      throw input_error(detail::loc(name, line_no) + "value must be 0 or 1");
    entries.push_back({static_cast<int>(m), static_cast<int>(n),
                       static_cast<std::uint8_t>(v)});
  }
  try {
    return Observation(static_cast<int>(rows), static_cast<int>(cols),
                       std::move(entries));
  } catch (const input_error& e) {
    throw input_error(name + ": " + e.what());
  }
}

inline Observation parse_observations(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return parse_observations(in, path);
}

inline void write_observations(const Observation& obs, std::ostream& out) {
  out << obs.rows() << ' ' << obs.cols() << '\n';
  for (const auto& e : obs.entries())
    out << e.row << ' ' << e.col << ' ' << int(e.value) << '\n';
}

inline void write_observations_file(const Observation& obs, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  write_observations(obs, out);
}

// ---------------------------------------------------------------------------
// Ratings logs (tab-separated "user item rating timestamp", header-less).
// Users and items map densely to row/column indices in first-seen order.
// ---------------------------------------------------------------------------

struct RatedCell {
  int row = 0;
  int col = 0;
  double rating = 0.0;
};

struct RatingsLog {
  int rows = 0;
  int cols = 0;
  std::vector<RatedCell> cells;
};

inline RatingsLog parse_ratings(std::istream& in, const std::string& name) {
  RatingsLog log;
  std::map<long long, int> users, items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    long long user = 0, item = 0;
    double rating = 0.0;
    std::string timestamp;
    if (!(row >> user >> item >> rating >> timestamp))
      throw input_error(detail::loc(name, line_no) +
                        "expected 'user item rating timestamp'");
    if (!std::isfinite(rating))
      throw input_error(detail::loc(name, line_no) + "rating must be finite");
    auto u = users.emplace(user, static_cast<int>(users.size()));
    auto it = items.emplace(item, static_cast<int>(items.size()));
    log.cells.push_back({u.first->second, it.first->second, rating});
  }
  log.rows = static_cast<int>(users.size());
  log.cols = static_cast<int>(items.size());
  std::vector<char> seen(static_cast<std::size_t>(log.rows) * log.cols, 0);
  for (const auto& c : log.cells) {
    char& flag = seen[static_cast<std::size_t>(c.row) * log.cols + c.col];
    if (flag) throw input_error(name + ": duplicate (user, item) rating");
    flag = 1;
  }
  return log;
}

inline RatingsLog parse_ratings(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  return parse_ratings(in, path);
}

struct IngestResult {
  Observation train;
  Observation test;
  double global_mean = 0.0;
};

// Binarize ratings against the global mean (1 iff strictly above), then
// split the rated cells uniformly at random: floor(alpha * count) go to
// train, the rest to test. Pure function of (log, alpha, seed).
inline IngestResult ingest_ratings(const RatingsLog& log, double alpha,
                                   std::uint64_t seed) {
  if (log.cells.empty()) throw input_error("ingest_ratings: empty ratings log");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw input_error("ingest_ratings: alpha must lie in (0,1)");

  double mean = 0.0;
  for (const auto& c : log.cells) mean += c.rating;
  mean /= static_cast<double>(log.cells.size());

  std::vector<std::size_t> order(log.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  auto train_count =
      static_cast<std::size_t>(alpha * static_cast<double>(order.size()));

  auto make = [&](std::size_t lo, std::size_t hi) {
    std::vector<ObservedEntry> entries;
    entries.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& c = log.cells[order[i]];
      entries.push_back({c.row, c.col, c.rating > mean ? std::uint8_t{1}
                                                       : std::uint8_t{0}});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return Observation(log.rows, log.cols, std::move(entries));
  };
  return {make(0, train_count), make(train_count, order.size()), mean};
}

// ---------------------------------------------------------------------------
// Message histogram over the constraint->x table. After convergence most
// factors exert almost no pull on their variables, so this table piles up
// near zero; the variable->constraint table does not (it aggregates the
// variable's whole belief and spreads wide).
// ---------------------------------------------------------------------------

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
};

// Equal-width bins over [min, max]; a degenerate range widens to +/-0.5
// around the single value; bin-boundary values land in the lower bin.
inline std::vector<HistogramBin> message_histogram(const MessageState& st,
                                                   int bins) {
  if (bins < 1) throw input_error("message_histogram: bins must be >= 1");
  const auto& table = st.factor_to_x;
  double lo = 0.0, hi = 0.0;
  if (!table.empty()) {
    lo = hi = table[0];
    for (double v : table) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = lo + b * width;
    out[static_cast<std::size_t>(b)].hi = b + 1 == bins ? hi : lo + (b + 1) * width;
  }
  for (double v : table) {
    int idx;
    if (v <= lo) {
      idx = 0;
    } else {
      idx = static_cast<int>(std::ceil((v - lo) / width)) - 1;
      idx = std::clamp(idx, 0, bins - 1);
    }
    ++out[static_cast<std::size_t>(idx)].count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV writers. 6 significant digits, '.' decimal separator.
// ---------------------------------------------------------------------------

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "K,obs_fraction,mean_error,std_error,mean_iters\n";
  for (const auto& r : rows) {
    out << r.rank << ',' << detail::fmt6(r.obs_fraction) << ','
        << detail::fmt6(r.mean_error) << ',' << detail::fmt6(r.std_error) << ','
        << detail::fmt6(r.mean_iters) << '\n';
  }
}

inline void write_gamma_csv(const Table& gamma, const char* row_name,
                            const char* col_name, std::ostream& out) {
  out << row_name << ',' << col_name << ",gamma\n";
  for (int i = 0; i < gamma.rows; ++i)
    for (int j = 0; j < gamma.cols; ++j)
      out << i << ',' << j << ',' << detail::fmt6(gamma(i, j)) << '\n';
}

inline void write_histogram_csv(const std::vector<HistogramBin>& bins,
                                std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins)
    out << detail::fmt6(b.lo) << ',' << detail::fmt6(b.hi) << ',' << b.count << '\n';
}

}  // namespace boolmp
