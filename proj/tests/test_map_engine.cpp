#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "boolmp/map_engine.hpp"
#include "boolmp/oracle.hpp"
#include "boolmp/synth.hpp"
#include "support/builders.hpp"
#include "support/reference_updates.hpp"

using namespace boolmp;
using Catch::Matchers::WithinAbs;

namespace {

EngineConfig config(int rank, double damping = 0.4, std::uint64_t seed = 0,
                    double init_scale = 1.0) {
  EngineConfig cfg;
  cfg.rank = rank;
  cfg.damping = damping;
  cfg.seed = seed;
  cfg.init_scale = init_scale;
  return cfg;
}

void check_tables_close(const MessageState& a, const MessageState& b, double tol) {
  REQUIRE(a.cells() == b.cells());
  auto cmp = [&](const std::vector<double>& u, const std::vector<double>& v) {
    for (std::size_t i = 0; i < u.size(); ++i)
      CHECK_THAT(u[i], WithinAbs(v[i], tol));
  };
  cmp(a.factor_to_x, b.factor_to_x);
  cmp(a.x_to_factor, b.x_to_factor);
  cmp(a.factor_to_y, b.factor_to_y);
  cmp(a.y_to_factor, b.y_to_factor);
  cmp(a.factor_to_obs, b.factor_to_obs);
  cmp(a.obs_to_factor, b.obs_to_factor);
}

}  // namespace

TEST_CASE("init_messages determinism and scale") {
  Observation obs = boolmp_test::random_observation(4, 4, 6, 3);
  EngineConfig cfg = config(2, 0.4, 99, 0.0);
  MessageState zero = init_messages(obs, cfg);
  for (double v : zero.x_to_factor) CHECK(v == 0.0);
  for (double v : zero.obs_to_factor) CHECK(v == 0.0);
  CHECK(zero.iteration == 0);

  cfg.init_scale = 1.0;
  MessageState a = init_messages(obs, cfg);
  MessageState b = init_messages(obs, cfg);
  CHECK(a.x_to_factor == b.x_to_factor);
  CHECK(a.factor_to_obs == b.factor_to_obs);
  cfg.seed = 100;
  MessageState c = init_messages(obs, cfg);
  CHECK(a.x_to_factor != c.x_to_factor);
}

TEST_CASE("logit is zero at one half") {
  CHECK(logit(0.5) == 0.0);
}

TEST_CASE("zero messages are a fixed point when the channel is uninformative") {
  Observation obs = boolmp_test::random_observation(3, 3, 5, 17);
  Priors pr = Priors::uniform(3, 3, 2);
  Channel flat = Channel::symmetric(0.5);
  EngineConfig cfg = config(2, 0.4, 0, 0.0);
  MessageState st = init_messages(obs, cfg);
  double delta = map_sweep(st, obs, pr, flat, cfg);
  CHECK(delta == 0.0);
  for (double v : st.factor_to_x) CHECK(v == 0.0);
  for (double v : st.x_to_factor) CHECK(v == 0.0);
  for (double v : st.factor_to_obs) CHECK(v == 0.0);
  for (double v : st.obs_to_factor) CHECK(v == 0.0);
}

TEST_CASE("one sweep of the 1x1 instance, by hand") {
  Observation obs(1, 1, {{0, 0, 1}});
  Priors pr = Priors::uniform(1, 1, 1);
  Channel ch = Channel::symmetric(0.9);
  EngineConfig cfg = config(1, 1.0, 0, 0.0);
  MessageState st = init_messages(obs, cfg);
  map_sweep(st, obs, pr, ch, cfg);

  double llr = std::log(9.0);
  CHECK(st.x_to_factor[0] == 0.0);
  CHECK(st.y_to_factor[0] == 0.0);
  CHECK(st.factor_to_obs[0] == 0.0);
  CHECK_THAT(st.obs_to_factor[0], WithinAbs(llr, 1e-12));
  CHECK_THAT(st.factor_to_x[0], WithinAbs(llr, 1e-12));
  CHECK_THAT(st.factor_to_y[0], WithinAbs(llr, 1e-12));

  auto [gx, gy] = compute_marginals(st, obs, pr);
  CHECK_THAT(gx(0, 0), WithinAbs(llr, 1e-12));
  CHECK_THAT(gy(0, 0), WithinAbs(llr, 1e-12));
  auto [x, y] = threshold_assign(gx, gy);
  CHECK(x(0, 0) == 1);
  CHECK(y(0, 0) == 1);
}

TEST_CASE("map_sweep matches the literal update equations") {
  // The production sweep reuses the marginal sums and the per-entry top-2
  // values; the reference recomputes everything the slow way.
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Observation obs = boolmp_test::random_observation(8, 8, 20, 1000 + seed);
    Priors pr = boolmp_test::random_soft_priors(8, 8, 3, 2000 + seed);
    Channel ch = Channel::symmetric(0.9);
    double damping = seed % 2 ? 1.0 : 0.4;
    EngineConfig cfg = config(3, damping, 3000 + seed);
    FactorGraph g(obs, pr, ch, cfg.rank);

    MessageState fast = init_messages(obs, cfg);
    MessageState slow = fast;
    double fast_delta = map_sweep(fast, g, cfg);
    double slow_delta = boolmp_test::reference_map_sweep(slow, g, cfg);
    check_tables_close(fast, slow, 1e-9);
    CHECK_THAT(fast_delta, WithinAbs(slow_delta, 1e-9));
  }
}

TEST_CASE("compute_marginals") {
  Observation obs(2, 2, {{0, 0, 1}});
  Priors pr = Priors::uniform(2, 2, 1);
  EngineConfig cfg = config(1, 0.4, 0, 0.0);
  MessageState st = init_messages(obs, cfg);

  SECTION("no evidence gives zero marginals") {
    auto [gx, gy] = compute_marginals(st, obs, pr);
    for (double v : gx.values) CHECK(v == 0.0);
    for (double v : gy.values) CHECK(v == 0.0);
  }

  SECTION("hard priors pin the marginal regardless of messages") {
    Priors hard = pr;
    hard.set_x(0, 0, 1.0);
    hard.set_x(1, 0, 0.0);
    st.factor_to_x[0] = -250.0;
    auto [gx, gy] = compute_marginals(st, obs, hard);
    CHECK(gx(0, 0) == kMaxLogRatio);
    CHECK(gx(1, 0) == -kMaxLogRatio);
  }

  SECTION("single observed entry sums one message") {
    st.factor_to_x[0] = 2.19722;
    auto [gx, gy] = compute_marginals(st, obs, pr);
    CHECK_THAT(gx(0, 0), WithinAbs(2.19722, 1e-12));
    CHECK(gx(1, 0) == 0.0);  // row 1 has no observations: prior logit alone
  }
}

TEST_CASE("threshold_assign sign and tie rules") {
  Table gx(1, 2);
  gx(0, 0) = 0.1;
  gx(0, 1) = -0.1;
  Table gy(2, 1);
  gy(0, 0) = kMaxLogRatio;
  gy(1, 0) = -kMaxLogRatio;
  auto [x, y] = threshold_assign(gx, gy);
  CHECK(x(0, 0) == 1);
  CHECK(x(0, 1) == 0);
  CHECK(y(0, 0) == 1);
  CHECK(y(1, 0) == 0);

  Table zeros(2, 2);
  auto [zx, zy] = threshold_assign(zeros, zeros);
  CHECK(zx == BoolMatrix(2, 2, 0));
}

TEST_CASE("map_sweep rejects mismatched state shapes") {
  Observation obs = boolmp_test::random_observation(3, 3, 4, 2);
  Priors pr = Priors::uniform(3, 3, 2);
  Channel ch = Channel::symmetric(0.9);
  EngineConfig cfg = config(2);
  MessageState st = init_messages(obs, cfg);
  st.rank = 3;  // no longer matches the graph
  CHECK_THROWS_AS(map_sweep(st, obs, pr, ch, cfg), input_error);
  EngineConfig bad = cfg;
  bad.damping = 0.0;
  CHECK_THROWS_AS(bad.validate(), input_error);
  bad = cfg;
  bad.eps = -1.0;
  CHECK_THROWS_AS(bad.validate(), input_error);
}

TEST_CASE("run_map rejects an empty observation") {
  Observation empty(3, 3, {});
  Priors pr = Priors::uniform(3, 3, 1);
  CHECK_THROWS_AS(run_map(empty, pr, Channel::symmetric(0.9), config(1)),
                  input_error);
}

TEST_CASE("run_map solves the 1x1 instance") {
  Observation obs(1, 1, {{0, 0, 1}});
  Priors pr = Priors::uniform(1, 1, 1);
  FactorizationResult res = run_map(obs, pr, Channel::symmetric(0.9), config(1));
  CHECK(res.x(0, 0) == 1);
  CHECK(res.y(0, 0) == 1);
  CHECK(res.converged);
  CHECK(boolean_product(res.x, res.y)(0, 0) == 1);
  // The thresholding of the reported marginals reproduces the assignment.
  auto [tx, ty] = threshold_assign(res.gamma_x, res.gamma_y);
  CHECK(tx == res.x);
  CHECK(ty == res.y);
}

TEST_CASE("run_map recovers a small noiseless factorization") {
  Instance inst = generate_instance(20, 20, 1, balanced_density(1),
                                    balanced_density(1), 5);
  std::vector<ObservedEntry> entries;
  for (int m = 0; m < 20; ++m)
    for (int n = 0; n < 20; ++n) entries.push_back({m, n, inst.z(m, n)});
  Observation obs(20, 20, std::move(entries));
  Priors pr = Priors::uniform(20, 20, 1);
  FactorizationResult res =
      run_map(obs, pr, Channel::symmetric(0.9), config(1, 0.4, 7));
  CHECK(reconstruction_error(inst.z, boolean_product(res.x, res.y)) <= 0.02);
}

TEST_CASE("entries with zero channel log-ratio change nothing") {
  // A completion run only tracks informative entries; entries whose channel
  // cannot distinguish z=0 from z=1 must be inert, bit for bit.
  int rows = 10, cols = 10, rank = 2;
  Observation base = boolmp_test::random_observation(rows, cols, 25, 55);

  std::vector<Channel::Cell> cells(
      static_cast<std::size_t>(rows) * cols,
      Channel::Cell{0.9, 0.1, 0.0, 0.1, 0.9, 0.0});
  std::vector<ObservedEntry> padded = base.entries();
  int added = 0;
  for (int m = 0; m < rows && added < 20; ++m) {
    for (int n = 0; n < cols && added < 20; ++n) {
      bool taken = false;
      for (const auto& e : base.entries())
        taken = taken || (e.row == m && e.col == n);
      if (taken) continue;
      cells[static_cast<std::size_t>(m) * cols + n] =
          Channel::Cell{0.5, 0.5, 0.0, 0.5, 0.5, 0.0};
      padded.push_back({m, n, 1});
      ++added;
    }
  }
  REQUIRE(added == 20);
  Observation extended(rows, cols, padded);
  Channel ch = Channel::per_entry(rows, cols, cells);
  Priors pr = Priors::uniform(rows, cols, rank);

  // Zero-init states evolve identically; padded entries keep zero messages.
  EngineConfig cfg = config(rank, 0.4, 0, 0.0);
  MessageState small = init_messages(base, cfg);
  MessageState big = init_messages(extended, cfg);
  FactorGraph g_small(base, pr, ch, rank);
  FactorGraph g_big(extended, pr, ch, rank);
  for (int t = 0; t < 30; ++t) {
    map_sweep(small, g_small, cfg);
    map_sweep(big, g_big, cfg);
  }
  for (std::size_t w = 0; w < base.size(); ++w) {
    for (int k = 0; k < rank; ++k) {
      CHECK(small.factor_to_x[small.at(w, k)] == big.factor_to_x[big.at(w, k)]);
      CHECK(small.obs_to_factor[small.at(w, k)] == big.obs_to_factor[big.at(w, k)]);
    }
  }
  for (std::size_t w = base.size(); w < extended.size(); ++w)
    for (int k = 0; k < rank; ++k)
      CHECK(big.factor_to_x[big.at(w, k)] == 0.0);

  Table gsx, gsy, gbx, gby;
  compute_marginals(small, g_small, gsx, gsy);
  compute_marginals(big, g_big, gbx, gby);
  CHECK(gsx.values == gbx.values);
  CHECK(gsy.values == gby.values);
}

TEST_CASE("map_sweep commutes with a rank permutation") {
  Observation obs = boolmp_test::random_observation(5, 5, 12, 66);
  Priors pr = Priors::uniform(5, 5, 3);
  Channel ch = Channel::symmetric(0.9);
  EngineConfig cfg = config(3, 0.4, 4);
  MessageState st = init_messages(obs, cfg);

  int perm[3] = {2, 0, 1};
  auto permute = [&](const MessageState& s) {
    MessageState p = s;
    auto shuffle = [&](const std::vector<double>& src, std::vector<double>& dst) {
      for (std::size_t w = 0; w < s.entry_count; ++w)
        for (int k = 0; k < 3; ++k) dst[s.at(w, k)] = src[s.at(w, perm[k])];
    };
    shuffle(s.factor_to_x, p.factor_to_x);
    shuffle(s.x_to_factor, p.x_to_factor);
    shuffle(s.factor_to_y, p.factor_to_y);
    shuffle(s.y_to_factor, p.y_to_factor);
    shuffle(s.factor_to_obs, p.factor_to_obs);
    shuffle(s.obs_to_factor, p.obs_to_factor);
    return p;
  };

  MessageState sweep_then_perm = st;
  map_sweep(sweep_then_perm, obs, pr, ch, cfg);
  sweep_then_perm = permute(sweep_then_perm);

  MessageState perm_then_sweep = permute(st);
  map_sweep(perm_then_sweep, obs, pr, ch, cfg);

  check_tables_close(sweep_then_perm, perm_then_sweep, 1e-12);
}

TEST_CASE("sweeps are byte-identical across thread counts") {
  Observation obs = boolmp_test::random_observation(12, 12, 60, 8);
  Priors pr = boolmp_test::random_soft_priors(12, 12, 3, 9);
  Channel ch = Channel::symmetric(0.9);

  auto run = [&](int threads) {
    EngineConfig cfg = config(3, 0.4, 21);
    cfg.threads = threads;
    MessageState st = init_messages(obs, cfg);
    FactorGraph g(obs, pr, ch, 3);
    for (int t = 0; t < 10; ++t) map_sweep(st, g, cfg);
    return st;
  };
  MessageState one = run(1);
  MessageState four = run(4);
  CHECK(one.factor_to_x == four.factor_to_x);
  CHECK(one.x_to_factor == four.x_to_factor);
  CHECK(one.factor_to_y == four.factor_to_y);
  CHECK(one.y_to_factor == four.y_to_factor);
  CHECK(one.factor_to_obs == four.factor_to_obs);
  CHECK(one.obs_to_factor == four.obs_to_factor);
}

TEST_CASE("run_map beats at least 90% of all assignments by enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance inst = generate_instance(3, 3, 1, 0.5, 0.5, 800 + seed);
    Observation obs = apply_channel(inst.z, Channel::symmetric(0.9), 820 + seed);
    if (obs.empty()) continue;
    Priors pr = Priors::uniform(3, 3, 1);
    Channel ch = Channel::symmetric(0.9);
    FactorizationResult res = run_map(obs, pr, ch, config(1, 0.4, 840 + seed));
    double got = posterior_log_score(res.x, res.y, obs, pr, ch);
    int beaten = 0, total = 0;
    for (unsigned code = 0; code < 64u; ++code) {
      BoolMatrix x(3, 1), y(1, 3);
      for (int b = 0; b < 3; ++b) x(b, 0) = (code >> b) & 1u;
      for (int b = 0; b < 3; ++b) y(0, b) = (code >> (3 + b)) & 1u;
      ++total;
      if (got >= posterior_log_score(x, y, obs, pr, ch) - 1e-12) ++beaten;
    }
    CHECK(beaten >= (total * 9) / 10);
  }
}

TEST_CASE("run_map result on oracle-sized instances scores near the optimum") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Instance inst = generate_instance(3, 3, 1, 0.5, 0.5, 500 + seed);
    Observation obs = apply_channel(inst.z, Channel::symmetric(0.9), 600 + seed);
    if (obs.empty()) continue;
    Priors pr = Priors::uniform(3, 3, 1);
    Channel ch = Channel::symmetric(0.9);
    FactorizationResult res = run_map(obs, pr, ch, config(1, 0.4, 700 + seed));
    double got = posterior_log_score(res.x, res.y, obs, pr, ch);
    double best = exact_map(obs, 1, pr, ch).best_score;
    if (got >= best - 1e-6) ++wins;
  }
  CHECK(wins >= 18);
}
