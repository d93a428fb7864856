// Command-line driver: factorize, complete, sweep, oracle-check, ingest, diag.
//
// Exit codes: 0 success, 1 input error, 2 size/limit error,
// 3 non-convergence (only with --strict).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boolmp/boolmp.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSize = 2;
constexpr int kExitNotConverged = 3;

struct EngineFlags {
  int rank = 1;
  int max_iters = 200;
  double damping = 0.4;
  double eps = 1e-6;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  int threads = 1;
  std::string channel = "symmetric:0.9";
  double prior_x = 0.5;
  double prior_y = 0.5;
  std::string mode = "map";
  int decimation_batch = 1;
  int max_rounds = 0;
  bool strict = false;
  std::string sp_update = "derived";
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f, bool with_rank = true) {
  if (with_rank)
    cmd->add_option("--rank", f.rank, "Factorization rank K")->required();
  cmd->add_option("--max-iters", f.max_iters, "Maximum sweeps per run");
  cmd->add_option("--damping", f.damping, "Damping weight in (0,1]");
  cmd->add_option("--eps", f.eps, "Convergence threshold on message change");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--init-scale", f.init_scale,
                  "Scale of the random message initialization (0 = zeros)");
  cmd->add_option("--threads", f.threads, "Worker thread cap");
  cmd->add_option("--channel", f.channel,
                  "Noise model: symmetric:<c> or table:<6 probabilities "
                  "p(0|0),p(1|0),p(e|0),p(0|1),p(1|1),p(e|1)>");
  cmd->add_option("--prior-x", f.prior_x, "P(x=1) prior");
  cmd->add_option("--prior-y", f.prior_y, "P(y=1) prior");
  cmd->add_option("--mode", f.mode, "Inference mode: map or marginal")
      ->check(CLI::IsMember({"map", "marginal"}));
  cmd->add_option("--decimation-batch", f.decimation_batch,
                  "Variables fixed per decimation round (marginal mode)");
  cmd->add_option("--max-rounds", f.max_rounds,
                  "Decimation round cap, 0 = until all fixed (marginal mode)");
  cmd->add_option("--sum-product-update", f.sp_update,
                  "Sum-product update family (marginal mode)")
      ->check(CLI::IsMember({"derived", "printed"}));
  cmd->add_flag("--strict", f.strict, "Exit 3 when the run does not converge");
}

boolmp::Channel parse_channel(const std::string& text) {
  auto fail = [&]() -> boolmp::Channel {
    throw boolmp::input_error(
        "bad --channel '" + text + "': expected symmetric:<c> or table:<v,..6..,v>");
  };
  auto colon = text.find(':');
  if (colon == std::string::npos) return fail();
  std::string kind = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  try {
    if (kind == "symmetric") {
      std::size_t used = 0;
      double c = std::stod(rest, &used);
      if (used != rest.size()) return fail();
      return boolmp::Channel::symmetric(c);
    }
    if (kind == "table") {
      boolmp::Channel::Cell cell{};
      std::istringstream in(rest);
      std::string part;
      for (int i = 0; i < 6; ++i) {
        if (!std::getline(in, part, ',')) return fail();
        cell[static_cast<std::size_t>(i)] = std::stod(part);
      }
      if (std::getline(in, part, ',')) return fail();
      return boolmp::Channel::from_six(cell);
    }
  } catch (const boolmp::input_error&) {
    throw;
  } catch (const std::exception&) {
    return fail();
  }
  return fail();
}

boolmp::EngineConfig engine_config(const EngineFlags& f) {
  boolmp::EngineConfig cfg;
  cfg.rank = f.rank;
  cfg.max_iters = f.max_iters;
  cfg.damping = f.damping;
  cfg.eps = f.eps;
  cfg.seed = f.seed;
  cfg.init_scale = f.init_scale;
  cfg.threads = f.threads;
  cfg.sum_product_update = f.sp_update == "printed"
                               ? boolmp::SumProductUpdate::kAsPrinted
                               : boolmp::SumProductUpdate::kDerived;
  cfg.validate();
  return cfg;
}

boolmp::FactorizationResult run_engine(const boolmp::Observation& obs,
                                       const EngineFlags& f) {
  boolmp::Priors pr = boolmp::Priors::uniform(obs.rows(), obs.cols(), f.rank,
                                              f.prior_x, f.prior_y);
  boolmp::Channel ch = parse_channel(f.channel);
  boolmp::EngineConfig cfg = engine_config(f);
  if (f.mode == "marginal") {
    boolmp::DecimationConfig dec;
    dec.batch = f.decimation_batch;
    dec.max_rounds = f.max_rounds;
    return boolmp::run_marginal_map(obs, pr, ch, cfg, dec);
  }
  return boolmp::run_map(obs, pr, ch, cfg);
}

void write_result_files(const boolmp::FactorizationResult& res,
                        const std::string& out_x, const std::string& out_y,
                        const std::string& out_z, const std::string& out_gx,
                        const std::string& out_gy) {
  namespace io = boolmp;
  if (!out_x.empty()) io::write_matrix_file(res.x, out_x);
  if (!out_y.empty()) io::write_matrix_file(res.y, out_y);
  if (!out_z.empty())
    io::write_matrix_file(boolmp::boolean_product(res.x, res.y), out_z);
  if (!out_gx.empty()) {
    auto out = boolmp::detail::open_output(out_gx);
    io::write_gamma_csv(res.gamma_x, "m", "k", out);
  }
  if (!out_gy.empty()) {
    auto out = boolmp::detail::open_output(out_gy);
    io::write_gamma_csv(res.gamma_y, "k", "n", out);
  }
}

int finish_run(const boolmp::FactorizationResult& res, bool strict) {
  std::cout << "iterations " << res.iterations << '\n'
            << "converged " << (res.converged ? 1 : 0) << '\n'
            << "final_delta " << boolmp::detail::fmt6(res.final_delta) << '\n';
  if (strict && !res.converged) return kExitNotConverged;
  return kExitOk;
}

// factorize: dense 0/1 matrix (text or PBM) fully observed.
int cmd_factorize(const std::string& input, const EngineFlags& flags,
                  const std::string& out_x, const std::string& out_y,
                  const std::string& out_z, const std::string& out_gx,
                  const std::string& out_gy) {
  boolmp::BoolMatrix z = boolmp::read_dense_matrix(input);
  std::vector<boolmp::ObservedEntry> entries;
  entries.reserve(z.size());
  for (int m = 0; m < z.rows(); ++m)
    for (int n = 0; n < z.cols(); ++n) entries.push_back({m, n, z(m, n)});
  boolmp::Observation obs(z.rows(), z.cols(), std::move(entries));

  boolmp::FactorizationResult res = run_engine(obs, flags);
  write_result_files(res, out_x, out_y, out_z, out_gx, out_gy);
  std::cout << "reconstruction_error "
            << boolmp::detail::fmt6(boolmp::reconstruction_error(
                   z, boolmp::boolean_product(res.x, res.y)))
            << '\n';
  return finish_run(res, flags.strict);
}

// complete: sparse triplet observation, or a dense matrix subsampled at
// --obs-fraction (the image-completion path).
int cmd_complete(const std::string& input, double obs_fraction,
                 const std::string& test_path, const EngineFlags& flags,
                 const std::string& out_x, const std::string& out_y,
                 const std::string& out_z, const std::string& out_gx,
                 const std::string& out_gy) {
  std::optional<boolmp::BoolMatrix> truth;
  std::optional<boolmp::Observation> obs;
  if (obs_fraction > 0.0) {
    truth = boolmp::read_dense_matrix(input);
    auto count = static_cast<std::size_t>(obs_fraction *
                                          static_cast<double>(truth->size()));
    obs = boolmp::sample_observation(*truth, count,
                                     boolmp::Channel::symmetric(1.0), flags.seed);
  } else {
    obs = boolmp::parse_observations(input);
  }

  boolmp::FactorizationResult res = run_engine(*obs, flags);
  write_result_files(res, out_x, out_y, out_z, out_gx, out_gy);

  boolmp::BoolMatrix zhat = boolmp::boolean_product(res.x, res.y);
  if (!test_path.empty()) {
    boolmp::Observation test = boolmp::parse_observations(test_path);
    if (test.rows() != zhat.rows() || test.cols() != zhat.cols())
      throw boolmp::input_error("test observation dimensions disagree");
    std::size_t mismatches = 0;
    for (const auto& e : test.entries())
      mismatches += e.value != zhat(e.row, e.col);
    double err = test.empty() ? 0.0
                              : static_cast<double>(mismatches) /
                                    static_cast<double>(test.size());
    std::cout << "held_out_error " << boolmp::detail::fmt6(err) << '\n';
  }
  if (truth) {
    std::cout << "reconstruction_error "
              << boolmp::detail::fmt6(boolmp::reconstruction_error(*truth, zhat))
              << '\n';
  }
  return finish_run(res, flags.strict);
}

// sweep: JSON grid config -> CSV table.
int cmd_sweep(const std::string& config_path, const EngineFlags& flags,
              const std::string& out_csv) {
  std::ifstream in(config_path);
  if (!in) throw boolmp::input_error("cannot open " + config_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw boolmp::input_error(config_path + ": " + e.what());
  }

  boolmp::SweepGrid grid;
  try {
    grid.rows = doc.at("rows").get<int>();
    grid.cols = doc.at("cols").get<int>();
    grid.ranks = doc.at("ranks").get<std::vector<int>>();
    grid.obs_fractions = doc.at("obs_fractions").get<std::vector<double>>();
    grid.repeats = doc.value("repeats", 1);
    grid.seed = doc.value("seed", std::uint64_t{0});
    grid.channel = parse_channel(doc.value("noise", std::string("symmetric:1.0")));
  } catch (const json::exception& e) {
    throw boolmp::input_error(config_path + ": " + e.what());
  }

  boolmp::EngineConfig cfg = engine_config(flags);
  auto rows = boolmp::run_sweep(grid, cfg, parse_channel(flags.channel));
  if (out_csv.empty()) {
    boolmp::write_sweep_csv(rows, std::cout);
  } else {
    auto out = boolmp::detail::open_output(out_csv);
    boolmp::write_sweep_csv(rows, out);
  }
  return kExitOk;
}

// oracle-check: engine vs exhaustive enumeration on a tiny instance.
int cmd_oracle_check(const std::string& input, const EngineFlags& flags) {
  boolmp::Observation obs = boolmp::parse_observations(input);
  boolmp::Priors pr = boolmp::Priors::uniform(obs.rows(), obs.cols(), flags.rank,
                                              flags.prior_x, flags.prior_y);
  boolmp::Channel ch = parse_channel(flags.channel);

  boolmp::ExactMapResult oracle = boolmp::exact_map(obs, flags.rank, pr, ch);
  boolmp::FactorizationResult res = run_engine(obs, flags);
  double engine_score = boolmp::posterior_log_score(res.x, res.y, obs, pr, ch);

  std::cout << "oracle_score " << boolmp::detail::fmt6(oracle.best_score) << '\n'
            << "engine_score " << boolmp::detail::fmt6(engine_score) << '\n'
            << "gap " << boolmp::detail::fmt6(oracle.best_score - engine_score)
            << '\n'
            << "oracle_unique " << (oracle.is_unique ? 1 : 0) << '\n'
            << "agree " << (engine_score >= oracle.best_score - 1e-6 ? 1 : 0)
            << '\n';
  return finish_run(res, flags.strict);
}

// ingest: ratings log -> binarized train/test triplet files.
int cmd_ingest(const std::string& ratings_path, double alpha, std::uint64_t seed,
               const std::string& out_train, const std::string& out_test) {
  boolmp::RatingsLog log = boolmp::parse_ratings(ratings_path);
  boolmp::IngestResult split = boolmp::ingest_ratings(log, alpha, seed);
  boolmp::write_observations_file(split.train, out_train);
  boolmp::write_observations_file(split.test, out_test);
  std::cout << "users " << log.rows << '\n'
            << "items " << log.cols << '\n'
            << "global_mean " << boolmp::detail::fmt6(split.global_mean) << '\n'
            << "train " << split.train.size() << '\n'
            << "test " << split.test.size() << '\n';
  return kExitOk;
}

// diag: run the engine and dump the message histogram.
int cmd_diag(const std::string& input, const EngineFlags& flags, int bins,
             const std::string& out_csv) {
  boolmp::Observation obs = boolmp::parse_observations(input);
  boolmp::Priors pr = boolmp::Priors::uniform(obs.rows(), obs.cols(), flags.rank,
                                              flags.prior_x, flags.prior_y);
  boolmp::Channel ch = parse_channel(flags.channel);
  boolmp::EngineConfig cfg = engine_config(flags);
  boolmp::FactorGraph graph(obs, pr, ch, cfg.rank);
  boolmp::MessageState st = boolmp::init_messages(obs, cfg);
  bool converged = false;
  double delta = 0.0;
  while (st.iteration < cfg.max_iters) {
    delta = flags.mode == "marginal" ? boolmp::sum_product_sweep(st, graph, cfg)
                                     : boolmp::map_sweep(st, graph, cfg);
    if (st.iteration >= 2 && delta <= cfg.eps) {
      converged = true;
      break;
    }
  }
  auto bins_out = boolmp::message_histogram(st, bins);
  if (out_csv.empty()) {
    boolmp::write_histogram_csv(bins_out, std::cout);
  } else {
    auto out = boolmp::detail::open_output(out_csv);
    boolmp::write_histogram_csv(bins_out, out);
  }
  std::cout << "iterations " << st.iteration << '\n'
            << "converged " << (converged ? 1 : 0) << '\n';
  if (flags.strict && !converged) return kExitNotConverged;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean matrix factorization and completion by message passing"};
  app.require_subcommand(1);

  EngineFlags flags;

  std::string input, test_path, out_x, out_y, out_z, out_gx, out_gy, out_csv;
  double obs_fraction = 0.0;

  CLI::App* factorize = app.add_subcommand(
      "factorize", "Factor a fully observed dense 0/1 matrix (text or PBM)");
  factorize->add_option("--input", input, "Dense matrix file")->required();
  add_engine_flags(factorize, flags);
  factorize->add_option("--out-x", out_x, "Write X (dense text, or PBM by extension)");
  factorize->add_option("--out-y", out_y, "Write Y");
  factorize->add_option("--out-z", out_z, "Write the reconstruction X o Y");
  factorize->add_option("--out-gamma-x", out_gx, "Write X marginals CSV");
  factorize->add_option("--out-gamma-y", out_gy, "Write Y marginals CSV");

  CLI::App* complete = app.add_subcommand(
      "complete", "Complete a sparse triplet observation (or a dense matrix "
                  "subsampled at --obs-fraction)");
  complete->add_option("--input", input, "Triplet file (or dense file with --obs-fraction)")
      ->required();
  complete->add_option("--obs-fraction", obs_fraction,
                       "Sample this fraction of a dense input as the observation");
  complete->add_option("--test", test_path, "Held-out triplet file to score");
  add_engine_flags(complete, flags);
  complete->add_option("--out-x", out_x, "Write X");
  complete->add_option("--out-y", out_y, "Write Y");
  complete->add_option("--out-z", out_z, "Write the predicted matrix");
  complete->add_option("--out-gamma-x", out_gx, "Write X marginals CSV");
  complete->add_option("--out-gamma-y", out_gy, "Write Y marginals CSV");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a phase sweep from a JSON grid config and emit CSV");
  sweep->add_option("--config", input, "Grid config JSON")->required();
  add_engine_flags(sweep, flags, /*with_rank=*/false);
  sweep->add_option("--out", out_csv, "CSV path (default stdout)");

  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "Compare the engine against exhaustive enumeration");
  oracle->add_option("--input", input, "Triplet file")->required();
  add_engine_flags(oracle, flags);

  double alpha = 0.5;
  std::string out_train, out_test;
  std::uint64_t ingest_seed = 0;
  int ingest_threads = 1;
  CLI::App* ingest = app.add_subcommand(
      "ingest", "Binarize a ratings log and split it into train/test triplets");
  ingest->add_option("--ratings", input, "Tab-separated ratings log")->required();
  ingest->add_option("--alpha", alpha, "Train fraction in (0,1)");
  ingest->add_option("--seed", ingest_seed, "Split seed");
  ingest->add_option("--out-train", out_train, "Train triplet file")->required();
  ingest->add_option("--out-test", out_test, "Test triplet file")->required();
  ingest->add_option("--threads", ingest_threads, "Accepted for interface parity");

  int bins = 50;
  CLI::App* diag = app.add_subcommand(
      "diag", "Histogram of constraint-to-variable messages after a run");
  diag->add_option("--input", input, "Triplet file")->required();
  add_engine_flags(diag, flags);
  diag->add_option("--bins", bins, "Histogram bin count");
  diag->add_option("--out", out_csv, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (factorize->parsed())
      return cmd_factorize(input, flags, out_x, out_y, out_z, out_gx, out_gy);
    if (complete->parsed())
      return cmd_complete(input, obs_fraction, test_path, flags, out_x, out_y,
                          out_z, out_gx, out_gy);
    if (sweep->parsed()) return cmd_sweep(input, flags, out_csv);
    if (oracle->parsed()) return cmd_oracle_check(input, flags);
    if (ingest->parsed())
      return cmd_ingest(input, alpha, ingest_seed, out_train, out_test);
    if (diag->parsed()) return cmd_diag(input, flags, bins, out_csv);
  } catch (const boolmp::size_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSize;
  } catch (const boolmp::input_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
