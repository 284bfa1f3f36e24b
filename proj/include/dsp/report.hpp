#pragma once

// Fit orchestration and persisted outputs: per-block draw CSVs, summary.json,
// long-format plotdata.csv, the report.json manifest, the holdout evaluation
// and the runtime-scaling benchmark.

#include "dsp/dataset.hpp"
#include "dsp/error.hpp"
#include "dsp/inference.hpp"
#include "dsp/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace dsp {

enum class ModelKind { btf, tvp };

struct FitRequest {
  ModelKind model = ModelKind::btf;
  PriorFamily prior = PriorFamily::dhs;
  int D = 2;
  ObsError obs_error = ObsError::constant;
  McmcConfig config{};
  double level = 0.95;
};

inline std::string to_string(PriorFamily p) {
  switch (p) {
    case PriorFamily::dhs: return "dhs";
    case PriorFamily::hs: return "hs";
    case PriorFamily::nig: return "nig";
  }
  return "?";
}
inline std::string to_string(ObsError e) { return e == ObsError::constant ? "const" : "sv"; }
inline std::string to_string(ModelKind m) { return m == ModelKind::btf ? "btf" : "tvp"; }

/// Chains concatenated in chain order.
inline ModelDraws concat_draws(const std::vector<ModelDraws>& chains) {
  if (chains.empty()) throw PreconditionError("concat_draws: no chains");
  ModelDraws out = chains.front();
  for (std::size_t c = 1; c < chains.size(); ++c) {
    const ModelDraws& d = chains[c];
    out.retained += d.retained;
    out.seconds = std::max(out.seconds, d.seconds);
    out.beta.insert(out.beta.end(), d.beta.begin(), d.beta.end());
    out.h.insert(out.h.end(), d.h.begin(), d.h.end());
    out.phi.insert(out.phi.end(), d.phi.begin(), d.phi.end());
    out.mu.insert(out.mu.end(), d.mu.begin(), d.mu.end());
    out.mu0.insert(out.mu0.end(), d.mu0.begin(), d.mu0.end());
    out.sigma.insert(out.sigma.end(), d.sigma.begin(), d.sigma.end());
    out.y_imputed.insert(out.y_imputed.end(), d.y_imputed.begin(), d.y_imputed.end());
  }
  return out;
}

inline std::vector<ModelDraws> fit_dataset(const Dataset& data, const FitRequest& req) {
  data.check_invariants();
  if (req.model == ModelKind::btf) {
    BtfModelSpec spec;
    spec.D = req.D;
    spec.obs_error = req.obs_error;
    spec.prior = req.prior;
    return fit_btf_chains(data.y, data.missing, spec, req.config);
  }
  if (data.p == 0) throw PreconditionError("tvp model needs predictor columns x1..xp");
  TvpModelSpec spec;
  spec.p = data.p;
  spec.D = req.D;
  spec.obs_error = req.obs_error;
  spec.prior = req.prior;
  return fit_tvp_chains(data.y, data.x, data.missing, spec, req.config);
}

struct FitMetrics {
  double rmse = 0.0;
  double mciw = 0.0;
  double coverage = 0.0;
  double rmse_beta = 0.0;  ///< regression only
};

struct FitSummary {
  std::vector<SummaryBands> paths;  ///< one per coefficient (trend filtering: the trend)
  SummaryBands fitted;              ///< x_t' beta_t
  std::optional<FitMetrics> metrics;
};

inline FitSummary summarize_fit(const ModelDraws& d, const Dataset& data, double level) {
  FitSummary s;
  for (std::size_t j = 0; j < d.p; ++j) s.paths.push_back(summarize_path(d.beta_path(j), d.retained, d.T, level));
  s.fitted = d.p == 1 && data.p == 0 ? s.paths[0]
                                     : summarize_path(d.fitted(data.x), d.retained, d.T, level);
  if (!data.truth.empty()) {
    FitMetrics m;
    m.rmse = rmse(s.fitted.mean, data.truth);
    m.mciw = mciw(s.fitted.hpd_lower, s.fitted.hpd_upper);
    std::vector<Interval> iv;
    for (std::size_t t = 0; t < d.T; ++t) iv.push_back({s.fitted.hpd_lower[t], s.fitted.hpd_upper[t]});
    m.coverage = coverage(iv, data.truth);
    if (!data.beta_truth.empty()) {
      std::vector<double> est;
      for (const auto& pth : s.paths) est.insert(est.end(), pth.mean.begin(), pth.mean.end());
      m.rmse_beta = rmse_matrix(est, data.beta_truth, d.T, d.p);
    }
    s.metrics = m;
  }
  return s;
}

inline std::string hardware_description() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

// ---------------------------------------------------------------------------
// Writers.

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw PreconditionError("cannot write " + p.string());
  out.precision(17);
  return out;
}

// Writes a per-draw block: columns draw, chain, then `names`.
inline void write_block(const std::filesystem::path& path, const std::vector<ModelDraws>& chains,
                        const std::vector<std::string>& names,
                        const std::vector<double> ModelDraws::*member) {
  auto out = open_out(path);
  out << "draw,chain";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  const std::size_t width = names.size();
  std::size_t row = 0;
  for (const auto& d : chains) {
    const auto& v = d.*member;
    for (std::size_t i = 0; i < d.retained; ++i, ++row) {
      out << row << ',' << d.chain;
      for (std::size_t k = 0; k < width; ++k) out << ',' << v[i * width + k];
      out << '\n';
    }
  }
}

inline nlohmann::json bands_json(const SummaryBands& s) {
  return {{"mean", s.mean},           {"hpd_lower", s.hpd_lower},   {"hpd_upper", s.hpd_upper},
          {"band_lower", s.band_lower}, {"band_upper", s.band_upper}, {"simbas", s.simbas},
          {"gbpv", s.gbpv}};
}

}  // namespace detail

inline nlohmann::json config_json(const FitRequest& req) {
  const auto& c = req.config;
  return {{"model", to_string(req.model)}, {"prior", to_string(req.prior)}, {"d", req.D},
          {"obs_error", to_string(req.obs_error)}, {"iters", c.n_iter}, {"burn", c.burn},
          {"thin", c.thin}, {"chains", c.chains}, {"seed", c.seed}, {"a_phi", c.a_phi},
          {"b_phi", c.b_phi}, {"offset_scale", c.offset_scale}, {"level", req.level}};
}

inline nlohmann::json metrics_json(const FitMetrics& m, bool regression) {
  nlohmann::json j{{"rmse", m.rmse}, {"mciw", m.mciw}, {"coverage", m.coverage}};
  if (regression) j["rmse_beta"] = m.rmse_beta;
  return j;
}

/// Writes draws_*.csv, summary.json, plotdata.csv and report.json into dir.
inline nlohmann::json write_fit_outputs(const std::filesystem::path& dir, const Dataset& data,
                                        const FitRequest& req, const std::vector<ModelDraws>& chains) {
  std::filesystem::create_directories(dir);
  const ModelDraws all = concat_draws(chains);
  const std::size_t T = all.T;
  const std::size_t p = all.p;

  std::vector<std::string> coef_names, h_names, block_names, sigma_names, miss_names;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::string suffix = p == 1 ? std::to_string(t + 1) : std::to_string(j + 1) + "_" + std::to_string(t + 1);
      coef_names.push_back("beta_" + suffix);
      h_names.push_back("h_" + suffix);
    }
    block_names.push_back(p == 1 ? "value" : "j" + std::to_string(j + 1));
  }
  for (std::size_t t = 0; t < T; ++t) sigma_names.push_back("sigma_" + std::to_string(t + 1));
  for (std::size_t t : all.missing) miss_names.push_back("y_" + std::to_string(t + 1));

  std::vector<std::string> files{"draws_beta.csv", "draws_h.csv", "draws_phi.csv", "draws_mu.csv",
                                 "draws_mu0.csv", "draws_sigma.csv"};
  detail::write_block(dir / "draws_beta.csv", chains, coef_names, &ModelDraws::beta);
  detail::write_block(dir / "draws_h.csv", chains, h_names, &ModelDraws::h);
  detail::write_block(dir / "draws_phi.csv", chains, block_names, &ModelDraws::phi);
  detail::write_block(dir / "draws_mu.csv", chains, block_names, &ModelDraws::mu);
  detail::write_block(dir / "draws_mu0.csv", chains, {"mu0"}, &ModelDraws::mu0);
  detail::write_block(dir / "draws_sigma.csv", chains, sigma_names, &ModelDraws::sigma);
  if (!miss_names.empty()) {
    detail::write_block(dir / "draws_y_missing.csv", chains, miss_names, &ModelDraws::y_imputed);
    files.push_back("draws_y_missing.csv");
  }

  const FitSummary s = summarize_fit(all, data, req.level);
  nlohmann::json summary;
  summary["time"] = data.time;
  summary["fitted"] = detail::bands_json(s.fitted);
  summary["coefficients"] = nlohmann::json::array();
  for (const auto& pth : s.paths) summary["coefficients"].push_back(detail::bands_json(pth));
  if (s.metrics) summary["metrics"] = metrics_json(*s.metrics, req.model == ModelKind::tvp);
  {
    auto out = detail::open_out(dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  {
    auto out = detail::open_out(dir / "plotdata.csv");
    out << "series,time,mean,hpd_lo,hpd_hi,band_lo,band_hi\n";
    auto emit = [&](const std::string& name, const SummaryBands& b) {
      for (std::size_t t = 0; t < T; ++t) {
        out << name << ',' << data.time[t] << ',' << b.mean[t] << ',' << b.hpd_lower[t] << ','
            << b.hpd_upper[t] << ',' << b.band_lower[t] << ',' << b.band_upper[t] << '\n';
      }
    };
    emit("fitted", s.fitted);
    if (req.model == ModelKind::tvp) {
      for (std::size_t j = 0; j < p; ++j) emit("beta_" + std::to_string(j + 1), s.paths[j]);
    }
  }
  files.insert(files.end(), {"summary.json", "plotdata.csv"});

  double seconds = 0.0;
  for (const auto& c : chains) seconds += c.seconds;
  nlohmann::json report{{"config", config_json(req)},
                        {"data", {{"T", T}, {"p", p}, {"missing", all.missing.size()},
                                  {"provenance", data.provenance}}},
                        {"retained_per_chain", chains.front().retained},
                        {"retained_total", all.retained},
                        {"seeds", nlohmann::json::array()},
                        {"runtime_seconds", seconds},
                        {"seconds_per_1000_iterations",
                         1000.0 * seconds / static_cast<double>(req.config.n_iter * chains.size())},
                        {"hardware", hardware_description()},
                        {"files", files}};
  for (const auto& c : chains) report["seeds"].push_back({{"seed", c.seed}, {"chain", c.chain}});
  if (s.metrics) {
    report["methods"] = {{to_string(req.prior), metrics_json(*s.metrics, req.model == ModelKind::tvp)}};
  }
  auto out = detail::open_out(dir / "report.json");
  out << report.dump(2) << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// Holdout evaluation: a random fraction of the observed points is masked,
// the model imputes them, and the posterior predictive draws are scored
// against the held-out values.

struct HoldoutMetrics {
  double rmse = 0.0;
  double mciw = 0.0;
  double coverage = 0.0;
  std::size_t n_test = 0;
  double seconds = 0.0;
};

inline std::vector<std::size_t> holdout_indices(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw PreconditionError("holdout fraction must be in (0, 1)");
  std::vector<std::size_t> obs;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!data.missing[t]) obs.push_back(t);
  }
  const auto n_test = static_cast<std::size_t>(std::round(fraction * static_cast<double>(obs.size())));
  if (n_test == 0 || n_test >= obs.size()) throw PreconditionError("holdout split leaves an empty set");
  RngStream rng(seed, 7);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < n_test; ++i) {
    const auto k = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(obs.size() - i));
    std::swap(obs[i], obs[std::min(k, obs.size() - 1)]);
  }
  std::vector<std::size_t> test(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(test.begin(), test.end());
  return test;
}

inline HoldoutMetrics evaluate_holdout(const Dataset& data, const FitRequest& req,
                                       std::span<const std::size_t> test) {
  Dataset train = data;
  for (std::size_t t : test) {
    train.missing[t] = 1;
    train.y[t] = std::numeric_limits<double>::quiet_NaN();
  }
  const ModelDraws d = concat_draws(fit_dataset(train, req));
  HoldoutMetrics m;
  m.n_test = test.size();
  m.seconds = d.seconds;
  std::vector<double> est, truth;
  std::vector<Interval> iv;
  const std::size_t nm = d.missing.size();
  for (std::size_t t : test) {
    const auto pos = static_cast<std::size_t>(std::find(d.missing.begin(), d.missing.end(), t) - d.missing.begin());
    std::vector<double> draws(d.retained);
    for (std::size_t i = 0; i < d.retained; ++i) draws[i] = d.y_imputed[i * nm + pos];
    est.push_back(std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size()));
    truth.push_back(data.y[t]);
    iv.push_back(hpd_interval(draws, req.level));
  }
  m.rmse = rmse(est, truth);
  m.mciw = mciw(iv);
  m.coverage = coverage(iv, truth);
  return m;
}

// ---------------------------------------------------------------------------
// Runtime scaling of trend filtering with dynamic shrinkage.

struct BenchRow {
  std::size_t T;
  std::size_t iterations;
  double seconds;
  double per_1000;
};

/// Least-squares slope of log(y) on log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("loglog_slope: need two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline BenchRow bench_once(std::size_t T, std::size_t iterations, std::uint64_t seed) {
  const Dataset data = simulate_donoho("doppler", T, 7.0, seed);
  McmcConfig cfg;
  cfg.n_iter = iterations;
  cfg.burn = iterations - 1;
  cfg.thin = 1;
  cfg.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  fit_btf(data.y, data.missing, BtfModelSpec{}, cfg);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {T, iterations, s, 1000.0 * s / static_cast<double>(iterations)};
}

struct BenchReport {
  std::vector<BenchRow> rows;
  double slope = 0.0;
  std::string hardware;

  nlohmann::json to_json() const {
    nlohmann::json j{{"slope", slope}, {"hardware", hardware}, {"rows", nlohmann::json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"T", r.T}, {"iterations", r.iterations}, {"seconds", r.seconds},
                           {"seconds_per_1000_iterations", r.per_1000}});
    }
    return j;
  }
};

inline BenchReport run_bench(std::span<const std::size_t> Ts, std::size_t iterations, std::uint64_t seed) {
  if (Ts.empty() || !std::is_sorted(Ts.begin(), Ts.end())) throw PreconditionError("bench: T list must be ascending");
  if (iterations < 2) throw PreconditionError("bench: need at least 2 iterations");
  BenchReport rep;
  rep.hardware = hardware_description();
  std::vector<double> xs, ys;
  for (std::size_t T : Ts) {
    rep.rows.push_back(bench_once(T, iterations, seed));
    xs.push_back(static_cast<double>(T));
    ys.push_back(rep.rows.back().seconds);
  }
  if (Ts.size() >= 2) rep.slope = loglog_slope(xs, ys);
  return rep;
}

}  // namespace dsp
