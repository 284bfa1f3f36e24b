// dsp: simulate data, fit trend-filtering / time-varying regression models,
// run holdout evaluations and the runtime benchmark.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "dsp/dsp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string data_path;
  std::string truth_path;
  std::string function;
  std::size_t T = 128;
  std::size_t p = 20;
  double rsnr = 7.0;
  std::string predictors = "iid";
  std::uint64_t data_seed = 1;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data_path, "input CSV (time,y[,x1..xp])");
  cmd->add_option("--truth", a.truth_path, "truth CSV written by `simulate`");
  cmd->add_option("--function", a.function, "simulate instead of reading: doppler|bumps|blocks|heavisine|tvp")
      ->check(CLI::IsMember({"doppler", "bumps", "blocks", "heavisine", "tvp"}));
  cmd->add_option("--T", a.T, "simulated length");
  cmd->add_option("--p", a.p, "simulated predictor count (tvp)");
  cmd->add_option("--rsnr", a.rsnr, "simulated root signal-to-noise ratio");
  cmd->add_option("--predictors", a.predictors, "simulated predictors (tvp)")
      ->check(CLI::IsMember({"iid", "ar"}));
  cmd->add_option("--data-seed", a.data_seed, "simulation seed");
}

dsp::Dataset simulate(const DataArgs& a) {
  if (a.function == "tvp") {
    return dsp::simulate_tvp(a.T, a.p, a.rsnr,
                             a.predictors == "ar" ? dsp::PredictorMode::ar : dsp::PredictorMode::iid,
                             a.data_seed);
  }
  return dsp::simulate_donoho(a.function, a.T, a.rsnr, a.data_seed);
}

// truth.csv: time,truth[,beta_1..beta_p]
void write_truth(const dsp::Dataset& d, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw dsp::PreconditionError("cannot write " + path.string());
  out.precision(17);
  out << "time,truth";
  const std::size_t p = d.beta_truth.empty() ? 0 : d.p;
  for (std::size_t j = 0; j < p; ++j) out << ",beta_" << (j + 1);
  out << '\n';
  for (std::size_t t = 0; t < d.size(); ++t) {
    out << d.time[t] << ',' << d.truth[t];
    for (std::size_t j = 0; j < p; ++j) out << ',' << d.beta_truth[j * d.size() + t];
    out << '\n';
  }
}

void read_truth(dsp::Dataset& d, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dsp::PreconditionError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  const std::size_t cols = dsp::detail::split_csv(line).size();
  const std::size_t p = cols > 2 ? cols - 2 : 0;
  std::vector<double> truth, beta;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (dsp::detail::trim(line).empty()) continue;
    const auto cells = dsp::detail::split_csv(line);
    std::vector<double> v(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells.size() != cols || !dsp::detail::parse_double(cells[k], v[k])) {
        throw dsp::DomainError(path + ":" + std::to_string(lineno) + ": malformed truth row");
      }
    }
    truth.push_back(v[1]);
    for (std::size_t j = 0; j < p; ++j) beta.push_back(v[2 + j]);
  }
  if (truth.size() != d.size()) throw dsp::DomainError(path + ": truth length does not match the data grid");
  d.truth = truth;
  if (p > 0) {
    const std::size_t T = truth.size();
    d.beta_truth.assign(p * T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < p; ++j) d.beta_truth[j * T + t] = beta[t * p + j];
    }
  }
}

dsp::Dataset load(const DataArgs& a) {
  if (!a.data_path.empty() && !a.function.empty()) throw CLI::ValidationError("use either --data or --function");
  if (a.data_path.empty() && a.function.empty()) throw CLI::ValidationError("one of --data or --function is required");
  if (!a.function.empty()) return simulate(a);
  dsp::Dataset d = dsp::ingest_csv(a.data_path);
  if (!a.truth_path.empty()) read_truth(d, a.truth_path);
  return d;
}

struct FitArgs {
  std::string model = "btf";
  std::string prior = "dhs";
  int d = 0;
  std::string obs_error = "const";
  std::size_t iters = 10000;
  std::size_t burn = 5000;
  std::size_t thin = 5;
  std::size_t chains = 1;
};

void add_fit_options(CLI::App* cmd, FitArgs& f, bool with_prior) {
  cmd->add_option("--model", f.model, "btf or tvp")->check(CLI::IsMember({"btf", "tvp"}));
  if (with_prior) cmd->add_option("--prior", f.prior, "dhs, hs or nig")->check(CLI::IsMember({"dhs", "hs", "nig"}));
  cmd->add_option("--d", f.d, "differencing order (default 2 for btf, 1 for tvp)")->check(CLI::IsMember({1, 2}));
  cmd->add_option("--obs-error", f.obs_error, "const or sv")->check(CLI::IsMember({"const", "sv"}));
  cmd->add_option("--iters", f.iters, "MCMC iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--burn", f.burn, "burn-in iterations");
  cmd->add_option("--thin", f.thin, "thinning")->check(CLI::PositiveNumber);
  cmd->add_option("--chains", f.chains, "independent chains")->check(CLI::PositiveNumber);
}

dsp::PriorFamily parse_prior(const std::string& s) {
  if (s == "dhs") return dsp::PriorFamily::dhs;
  if (s == "hs") return dsp::PriorFamily::hs;
  if (s == "nig") return dsp::PriorFamily::nig;
  throw CLI::ValidationError("--prior", "unknown prior '" + s + "'");
}

dsp::FitRequest make_request(const FitArgs& f, std::uint64_t seed) {
  dsp::FitRequest r;
  r.model = f.model == "tvp" ? dsp::ModelKind::tvp : dsp::ModelKind::btf;
  r.prior = parse_prior(f.prior);
  r.D = f.d != 0 ? f.d : (r.model == dsp::ModelKind::btf ? 2 : 1);
  r.obs_error = f.obs_error == "sv" ? dsp::ObsError::stochastic_volatility : dsp::ObsError::constant;
  r.config.n_iter = f.iters;
  r.config.burn = f.burn;
  r.config.thin = f.thin;
  r.config.chains = f.chains;
  r.config.seed = seed;
  if (!(f.iters > f.burn)) throw CLI::ValidationError("--iters must exceed --burn");
  return r;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw dsp::PreconditionError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic shrinkage trend filtering and time-varying regression"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  DataArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "write a simulated dataset (data.csv, truth.csv)");
  add_data_options(sim, sim_args);

  DataArgs fit_data;
  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a model and write draws, summaries and a report");
  add_data_options(fit, fit_data);
  add_fit_options(fit, fit_args, true);

  DataArgs eval_data;
  FitArgs eval_args;
  double holdout = 0.1;
  std::size_t repeats = 1;
  std::vector<std::string> priors{"dhs", "hs", "nig"};
  auto* eval = app.add_subcommand("eval", "random holdout evaluation of several priors");
  add_data_options(eval, eval_data);
  add_fit_options(eval, eval_args, false);
  eval->add_option("--holdout", holdout, "held-out fraction of observed points");
  eval->add_option("--repeats", repeats, "number of random splits")->check(CLI::PositiveNumber);
  eval->add_option("--priors", priors, "priors to compare")->delimiter(',')->check(CLI::IsMember({"dhs", "hs", "nig"}));

  std::vector<std::size_t> bench_T{1000, 10000, 100000};
  std::size_t bench_iters = 100;
  auto* bench = app.add_subcommand("bench", "runtime per 1000 iterations of trend filtering vs T");
  bench->add_option("--T", bench_T, "ascending lengths")->delimiter(',');
  bench->add_option("--iters", bench_iters, "iterations per length")->check(CLI::Range(2, 100000000));

  for (auto* cmd : {sim, fit, eval, bench}) {
    cmd->add_option("--seed", seed, "seed");
    cmd->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const fs::path out(out_dir);
    if (sim->parsed()) {
      if (sim_args.function.empty()) throw CLI::ValidationError("--function is required");
      sim_args.data_seed = seed;
      const dsp::Dataset d = simulate(sim_args);
      fs::create_directories(out);
      dsp::write_csv(d, (out / "data.csv").string());
      write_truth(d, out / "truth.csv");
      write_json(out / "report.json", {{"provenance", d.provenance}, {"seed", seed}, {"noise_sd", d.noise_sd},
                                       {"files", {"data.csv", "truth.csv"}}});
      std::cout << "wrote " << (out / "data.csv").string() << " (T = " << d.size() << ")\n";
    } else if (fit->parsed()) {
      const dsp::Dataset d = load(fit_data);
      const dsp::FitRequest req = make_request(fit_args, seed);
      const auto chains = dsp::fit_dataset(d, req);
      const auto report = dsp::write_fit_outputs(out, d, req, chains);
      std::cout << "fit " << dsp::to_string(req.model) << "-" << dsp::to_string(req.prior) << ": "
                << report["retained_total"].get<std::size_t>() << " draws, "
                << report["runtime_seconds"].get<double>() << " s";
      if (report.contains("methods")) {
        std::cout << ", rmse " << report["methods"][dsp::to_string(req.prior)]["rmse"].get<double>();
      }
      std::cout << "\n";
    } else if (eval->parsed()) {
      const dsp::Dataset d = load(eval_data);
      nlohmann::json methods = nlohmann::json::object();
      for (const auto& pr : priors) {
        FitArgs a = eval_args;
        a.prior = pr;
        nlohmann::json splits = nlohmann::json::array();
        double rmse = 0.0, width = 0.0, cov = 0.0, secs = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
          const auto test = dsp::holdout_indices(d, holdout, seed + r);
          const dsp::FitRequest req = make_request(a, seed + r);
          const auto m = dsp::evaluate_holdout(d, req, test);
          splits.push_back({{"split_seed", seed + r}, {"n_test", m.n_test}, {"rmse", m.rmse},
                            {"mciw", m.mciw}, {"coverage", m.coverage}});
          rmse += m.rmse;
          width += m.mciw;
          cov += m.coverage;
          secs += m.seconds;
        }
        const double n = static_cast<double>(repeats);
        methods[pr] = {{"rmse", rmse / n}, {"mciw", width / n}, {"coverage", cov / n},
                       {"seconds_per_1000_iterations", 1000.0 * secs / (n * static_cast<double>(a.iters))},
                       {"splits", splits}};
        std::cout << pr << ": rmse " << rmse / n << ", mciw " << width / n << ", coverage " << cov / n << "\n";
      }
      fs::create_directories(out);
      write_json(out / "report.json", {{"protocol", "random holdout"}, {"holdout", holdout}, {"repeats", repeats},
                                       {"seed", seed}, {"data", d.provenance}, {"methods", methods},
                                       {"config", dsp::config_json(make_request(eval_args, seed))},
                                       {"hardware", dsp::hardware_description()}});
    } else if (bench->parsed()) {
      const auto rep = dsp::run_bench(bench_T, bench_iters, seed);
      fs::create_directories(out);
      nlohmann::json j = rep.to_json();
      j["seed"] = seed;
      write_json(out / "report.json", j);
      for (const auto& r : rep.rows) {
        std::cout << "T = " << r.T << ": " << r.per_1000 << " s per 1000 iterations\n";
      }
      std::cout << "log-log slope " << rep.slope << "\n" << rep.hardware << "\n";
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
