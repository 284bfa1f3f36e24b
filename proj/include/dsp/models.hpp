#pragma once

// Gibbs samplers for Bayesian trend filtering and time-varying-parameter
// regression under dynamic shrinkage (DHS), static horseshoe (HS) and
// normal-inverse-Gamma (NIG) priors on the state innovations, with a Jeffreys
// or stochastic-volatility observation layer and missing-value imputation.
//
// Trend filtering is the p = 1, x_t = 1 case of the regression engine; both
// share every step except the assembly of the state precision.

#include "dsp/banded.hpp"
#include "dsp/dsp_core.hpp"
#include "dsp/error.hpp"
#include "dsp/omori.hpp"
#include "dsp/rng.hpp"
#include "dsp/special_dists.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace dsp {

enum class ObsError { constant, stochastic_volatility };
enum class PriorFamily { dhs, hs, nig };

/// Scale of the half-Cauchy prior on the global scale tau.
/// scaled: C+(0, sigma_eps / sqrt(Tp)), or C+(0, 1 / sqrt(Tp)) under SV errors.
/// unit: C+(0, 1). automatic: unit for trend-filtering HS, scaled otherwise.
enum class TauScale { automatic, scaled, unit };

struct BtfModelSpec {
  int D = 2;
  ObsError obs_error = ObsError::constant;
  PriorFamily prior = PriorFamily::dhs;
  TauScale tau_scale = TauScale::automatic;
  std::optional<double> fixed_phi;  ///< DHS with phi pinned at this value

  void validate() const {
    if (D != 1 && D != 2) throw PreconditionError("BtfModelSpec: D must be 1 or 2");
    if (fixed_phi && !(std::fabs(*fixed_phi) < 1.0)) {
      throw PreconditionError("BtfModelSpec: fixed phi must lie in (-1, 1)");
    }
  }
};

struct TvpModelSpec {
  std::size_t p = 1;
  int D = 1;
  ObsError obs_error = ObsError::constant;
  PriorFamily prior = PriorFamily::dhs;
  TauScale tau_scale = TauScale::automatic;
  std::optional<double> fixed_phi;

  void validate() const {
    if (p < 1) throw PreconditionError("TvpModelSpec: p must be at least 1");
    if (D != 1 && D != 2) throw PreconditionError("TvpModelSpec: D must be 1 or 2");
    if (fixed_phi && !(std::fabs(*fixed_phi) < 1.0)) {
      throw PreconditionError("TvpModelSpec: fixed phi must lie in (-1, 1)");
    }
  }
};

struct McmcConfig {
  std::size_t n_iter = 10000;
  std::size_t burn = 5000;
  std::size_t thin = 5;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  double a_phi = 10.0;
  double b_phi = 2.0;
  double offset_scale = kDefaultOffsetScale;  ///< c = offset_scale * var(omega)

  void validate() const {
    if (!(n_iter > burn)) throw PreconditionError("McmcConfig: n_iter must exceed burn");
    if (thin < 1) throw PreconditionError("McmcConfig: thin must be at least 1");
    if (chains < 1) throw PreconditionError("McmcConfig: chains must be at least 1");
    if (!(a_phi > 0.0) || !(b_phi > 0.0)) throw PreconditionError("McmcConfig: Beta prior on phi");
    if (!(offset_scale > 0.0)) throw PreconditionError("McmcConfig: offset scale must be positive");
  }

  std::size_t retained() const { return (n_iter - burn) / thin; }
};

/// Retained draws of one chain. Per-draw blocks are contiguous; coefficient
/// paths are block-major (index j * T + t).
struct ModelDraws {
  std::size_t T = 0;
  std::size_t p = 1;
  int D = 2;
  std::size_t n_iter = 0;
  std::size_t burn = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  std::size_t chain = 0;
  std::size_t retained = 0;
  double seconds = 0.0;  ///< sampling wall time

  std::vector<double> beta;       ///< retained x (p T)
  std::vector<double> h;          ///< retained x (p T), log innovation variances
  std::vector<double> phi;        ///< retained x p
  std::vector<double> mu;         ///< retained x p
  std::vector<double> mu0;        ///< retained, global level log(tau^2)
  std::vector<double> sigma;      ///< retained x T, observation standard deviations
  std::vector<std::size_t> missing;  ///< grid indices of imputed observations
  std::vector<double> y_imputed;  ///< retained x missing.size()

  double beta_at(std::size_t draw, std::size_t j, std::size_t t) const {
    return beta[draw * p * T + j * T + t];
  }
  double h_at(std::size_t draw, std::size_t j, std::size_t t) const {
    return h[draw * p * T + j * T + t];
  }

  /// Draws of beta_{j, .} as a retained x T row-major matrix.
  std::vector<double> beta_path(std::size_t j) const {
    std::vector<double> out(retained * T);
    for (std::size_t i = 0; i < retained; ++i) {
      for (std::size_t t = 0; t < T; ++t) out[i * T + t] = beta_at(i, j, t);
    }
    return out;
  }

  /// Draws of x_t' beta_t as a retained x T matrix; x is row-major T x p
  /// (empty for trend filtering).
  std::vector<double> fitted(std::span<const double> x = {}) const {
    std::vector<double> out(retained * T, 0.0);
    for (std::size_t i = 0; i < retained; ++i) {
      for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += (x.empty() ? 1.0 : x[t * p + j]) * beta_at(i, j, t);
        out[i * T + t] = s;
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Individual updates.

namespace detail {

inline constexpr int kJitterAttempts = 3;

// Joint Gaussian draw with the jitter policy: on factorisation failure add
// 1e-8 * max diagonal, then 1e-7, 1e-6; abort after the third failure.
inline std::vector<double> sample_with_jitter(const BandedPrecision& q,
                                              std::span<const double> linear, RngStream& rng,
                                              NoiseMode mode, std::size_t p, std::size_t T) {
  try {
    return sample_banded_gaussian(q, linear, rng, mode);
  } catch (const NotPositiveDefinite& first) {
    double jitter = 1e-8 * q.max_diagonal();
    std::size_t index = first.index();
    double pivot = first.pivot();
    for (int attempt = 0; attempt < kJitterAttempts; ++attempt, jitter *= 10.0) {
      BandedPrecision qj = q;
      for (double& d : qj.diagonal()) d += jitter;
      try {
        return sample_banded_gaussian(qj, linear, rng, mode);
      } catch (const NotPositiveDefinite& e) {
        index = e.index();
        pivot = e.pivot();
      }
    }
    throw SamplerError("state precision not positive definite after jitter (p = " +
                       std::to_string(p) + ", T = " + std::to_string(T) + ", bandwidth = " +
                       std::to_string(q.bandwidth()) + ", row " + std::to_string(index) +
                       ", pivot " + std::to_string(pivot) + ")");
  }
}

}  // namespace detail

/// beta | y ~ N(Q^{-1} l, Q^{-1}) with Q = diag(obs_prec) + D' diag(innov_prec) D
/// and l = obs_prec .* y.
inline std::vector<double> update_beta_btf(std::span<const double> y,
                                           std::span<const double> obs_prec,
                                           std::span<const double> innov_prec, int D,
                                           RngStream& rng, NoiseMode mode = NoiseMode::sample) {
  if (y.size() != obs_prec.size()) throw PreconditionError("update_beta_btf: length mismatch");
  const BandedPrecision q = build_difference_precision(D, obs_prec, innov_prec);
  std::vector<double> linear(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) linear[t] = obs_prec[t] * y[t];
  return detail::sample_with_jitter(q, linear, rng, mode, 1, y.size());
}

/// Stacked draw of (beta_{1,1}, ..., beta_{p,1}, beta_{1,2}, ...) from the
/// (D p)-banded conditional. x is row-major T x p, innov_prec block-major.
inline std::vector<double> update_beta_tvp(std::span<const double> y, std::span<const double> x,
                                           std::size_t p, std::span<const double> obs_prec,
                                           std::span<const double> innov_prec, int D,
                                           RngStream& rng, NoiseMode mode = NoiseMode::sample) {
  const BandedPrecision q = build_regression_precision(D, p, x, obs_prec, innov_prec);
  const auto linear = regression_linear_term(p, x, obs_prec, y);
  return detail::sample_with_jitter(q, linear, rng, mode, p, y.size());
}

/// Coupling between sigma_eps and tau when tau ~ C+(0, sigma_eps / sqrt(count)).
struct TauCoupling {
  double tau;
  double count;
};

/// Log full conditional of u = log(sigma_eps) under the Jeffreys prior, with
/// the half-Cauchy density of tau when coupled; ss is the residual sum of
/// squares over n observations.
inline double log_sigma_conditional(double u, double ss, double n,
                                    std::optional<TauCoupling> coupling) {
  const double inv_var = std::exp(-2.0 * u);
  double lp = -n * u - 0.5 * ss * inv_var;
  if (coupling) lp += -u - std::log1p(coupling->count * coupling->tau * coupling->tau * inv_var);
  return lp;
}

/// One slice transition on log(sigma_eps).
inline double update_sigma_eps(double ss, std::size_t n, double sigma,
                               std::optional<TauCoupling> coupling, RngStream& rng) {
  if (!std::isfinite(ss) || ss < 0.0) throw DomainError("update_sigma_eps: invalid residual sum");
  if (!(sigma > 0.0)) throw PreconditionError("update_sigma_eps: sigma must be positive");
  const double nn = static_cast<double>(n);
  const double u = slice_sample(
      [&](double v) { return log_sigma_conditional(v, ss, nn, coupling); }, std::log(sigma), rng);
  return std::exp(u);
}

inline double update_sigma_eps(std::span<const double> y, std::span<const double> fitted,
                               double sigma, std::optional<TauCoupling> coupling, RngStream& rng) {
  if (y.size() != fitted.size()) throw PreconditionError("update_sigma_eps: length mismatch");
  double ss = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) ss += (y[t] - fitted[t]) * (y[t] - fitted[t]);
  return update_sigma_eps(ss, y.size(), sigma, coupling, rng);
}

/// y with every masked entry replaced by a draw from N(mean_t, sigma_t^2).
inline std::vector<double> impute_missing(std::span<const double> y, std::span<const double> mean,
                                          std::span<const double> sigma,
                                          std::span<const std::uint8_t> missing, RngStream& rng) {
  std::vector<double> out(y.begin(), y.end());
  if (missing.empty()) return out;
  if (missing.size() != y.size() || mean.size() != y.size() || sigma.size() != y.size()) {
    throw PreconditionError("impute_missing: length mismatch");
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (missing[t]) out[t] = rng.normal(mean[t], sigma[t]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stochastic-volatility observation errors: log sigma_t^2 follows a Gaussian
// AR(1), sampled with the same mixture and banded machinery as the DSP with
// xi_t fixed at 1 / sigma_eta^2 (xi_0 at the stationary precision).

struct SvPrior {
  double mu_mean = 0.0;
  double mu_var = 100.0;
  PhiPrior phi{20.0, 1.5};
  double sigma2_shape = 3.0;  ///< inverse-Gamma on sigma_eta^2
  double sigma2_scale = 0.1;
};

struct SvState {
  DspState core;  ///< h, s, mu, phi; xi holds the fixed Gaussian precisions
  double sigma_eta2 = 0.05;

  void refresh_precisions() {
    const double prec = 1.0 / sigma_eta2;
    std::fill(core.xi.begin(), core.xi.end(), prec);
    if (!core.xi.empty()) core.xi[0] = (1.0 - core.phi * core.phi) * prec;
  }

  std::vector<double> sigma_path() const {
    std::vector<double> out(core.h.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::exp(0.5 * core.h[t]);
    return out;
  }
};

inline SvState initialize_sv(std::size_t T, double sigma0) {
  SvState sv;
  sv.core.h.assign(T, 2.0 * std::log(sigma0));
  sv.core.mu = 2.0 * std::log(sigma0);
  sv.core.phi = 0.9;
  sv.core.s.assign(T, 0);
  sv.core.xi.assign(T, 1.0);
  sv.refresh_precisions();
  return sv;
}

/// Log conditional of phi_sv: the DSP transition terms plus the stationary
/// initial density h_1 ~ N(mu, sigma_eta^2 / (1 - phi^2)).
inline double sv_phi_log_conditional(const SvState& sv, double phi, const PhiPrior& prior) {
  double lp = phi_log_conditional(sv.core, phi, prior);
  if (!std::isfinite(lp)) return lp;
  const double d = sv.core.h[0] - sv.core.mu;
  const double one_m = 1.0 - phi * phi;
  return lp + 0.5 * std::log(one_m) - 0.5 * one_m * d * d / sv.sigma_eta2;
}

/// One SV sweep given observation residuals: s, h, mu, phi, sigma_eta^2.
/// Returns the sigma_t path.
inline std::vector<double> fit_sv_observation(std::span<const double> resid, SvState& sv,
                                              RngStream& rng, const SvPrior& prior = {},
                                              double offset_scale = kDefaultOffsetScale,
                                              const OmoriTable& table = omori_table()) {
  DspState& c = sv.core;
  if (resid.size() != c.size()) throw PreconditionError("fit_sv_observation: length mismatch");
  const auto ytilde = log_square(resid, log_offset(resid, offset_scale));
  update_s(c, ytilde, table, rng);
  update_h(c, ytilde, table, rng);

  c.xi_mu = 1.0 / prior.mu_var;
  update_mu(c, prior.mu_mean, rng);

  SliceOptions opt;
  opt.lower = -1.0;
  opt.upper = 1.0;
  c.phi = slice_sample([&](double x) { return sv_phi_log_conditional(sv, x, prior.phi); }, c.phi,
                       rng, opt);
  sv.refresh_precisions();

  double ss = (1.0 - c.phi * c.phi) * (c.h[0] - c.mu) * (c.h[0] - c.mu);
  for (std::size_t t = 1; t < c.size(); ++t) {
    const double r = c.h[t] - c.mu - c.phi * (c.h[t - 1] - c.mu);
    ss += r * r;
  }
  const double shape = prior.sigma2_shape + 0.5 * static_cast<double>(c.size());
  const double scale = prior.sigma2_scale + 0.5 * ss;
  sv.sigma_eta2 = scale / rng.gamma(shape);
  sv.refresh_precisions();
  return sv.sigma_path();
}

/// NIG prior: tau^{-2} | omega ~ Gamma(a + n/2, rate b + sum omega^2 / 2).
inline double update_nig_precision(std::span<const double> omega, RngStream& rng,
                                   double a = 0.001, double b = 0.001) {
  double ss = 0.0;
  for (double w : omega) ss += w * w;
  const double shape = a + 0.5 * static_cast<double>(omega.size());
  return rng.gamma(shape) / (b + 0.5 * ss);
}

// ---------------------------------------------------------------------------
// Shared engine.

namespace detail {

struct EngineSpec {
  std::size_t p = 1;
  int D = 2;
  ObsError obs = ObsError::constant;
  PriorFamily prior = PriorFamily::dhs;
  bool scaled_tau = true;
  std::optional<double> fixed_phi;
  bool regression = false;  ///< stacked regression builder instead of the difference builder
};

inline void check_data(std::span<const double> y, std::span<const std::uint8_t> missing) {
  if (!missing.empty() && missing.size() != y.size()) {
    throw PreconditionError("missing mask length must match y");
  }
  std::size_t observed = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!missing.empty() && missing[t]) continue;
    if (!std::isfinite(y[t])) throw DomainError("observation " + std::to_string(t) + " is not finite");
    ++observed;
  }
  if (observed == 0) throw PreconditionError("no observed values");
}

/// Linear interpolation across masked entries; ends carry the nearest value.
inline std::vector<double> interpolate_missing(std::span<const double> y,
                                               std::span<const std::uint8_t> missing) {
  std::vector<double> out(y.begin(), y.end());
  if (missing.empty()) return out;
  const std::size_t T = y.size();
  std::vector<std::size_t> obs;
  for (std::size_t t = 0; t < T; ++t) {
    if (!missing[t]) obs.push_back(t);
  }
  std::size_t k = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!missing[t]) continue;
    while (k + 1 < obs.size() && obs[k + 1] < t) ++k;
    if (t < obs.front()) {
      out[t] = y[obs.front()];
    } else if (t > obs.back()) {
      out[t] = y[obs.back()];
    } else {
      const std::size_t a = obs[k];
      const std::size_t b = obs[k + 1];
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      out[t] = (1.0 - w) * y[a] + w * y[b];
    }
  }
  return out;
}

/// Innovations omega_{j,t} of path j from stacked beta (index t * p + j).
inline std::vector<double> path_innovations(std::span<const double> stacked, std::size_t p,
                                            std::size_t j, std::size_t T,
                                            std::span<const double> coef) {
  const std::size_t D = coef.size() - 1;
  std::vector<double> w(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (t < D) {
      w[t] = stacked[t * p + j];
      continue;
    }
    double s = 0.0;
    for (std::size_t d = 0; d <= D; ++d) s += coef[d] * stacked[(t - d) * p + j];
    w[t] = s;
  }
  return w;
}

/// Noise scale guess: sd of D-th differences divided by the operator's norm.
inline double initial_sigma(std::span<const double> y, std::span<const double> coef) {
  const std::size_t D = coef.size() - 1;
  const std::size_t T = y.size();
  double norm2 = 0.0;
  for (double c : coef) norm2 += c * c;
  std::vector<double> d;
  for (std::size_t t = D; t < T; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k <= D; ++k) s += coef[k] * y[t - k];
    d.push_back(s);
  }
  double m = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(d.size() - 1, 1)));
  double scale = sd / std::sqrt(norm2);
  if (!(scale > 0.0)) {
    double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(T);
    double yy = 0.0;
    for (double v : y) yy += (v - ym) * (v - ym);
    scale = std::sqrt(yy / static_cast<double>(T));
  }
  return scale > 0.0 ? scale : 1.0;
}

inline ModelDraws run_engine(std::span<const double> y_in, std::span<const std::uint8_t> missing,
                             std::span<const double> x, const EngineSpec& es,
                             const McmcConfig& cfg, std::size_t chain,
                             const OmoriTable& table = omori_table()) {
  cfg.validate();
  check_data(y_in, missing);
  const std::size_t T = y_in.size();
  const std::size_t p = es.p;
  if (T < static_cast<std::size_t>(2 * es.D + 1)) {
    throw PreconditionError("need T >= 2D + 1 observations (T = " + std::to_string(T) + ")");
  }
  if (es.regression && x.size() != T * p) throw PreconditionError("predictor matrix must be T x p");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("predictors must be finite");
  }
  const auto start = std::chrono::steady_clock::now();

  RngStream rng(cfg.seed, chain);
  RngStream hier_rng = rng.child(0);
  std::vector<RngStream> block_streams;
  for (std::size_t j = 0; j < p; ++j) block_streams.push_back(rng.child(j + 1));
  auto block_rng = [&](std::size_t j) -> RngStream& { return block_streams[j]; };

  const auto coef = difference_coefficients(es.D);
  std::vector<double> y = interpolate_missing(y_in, missing);
  const double np = static_cast<double>(T * p);

  // Minimum-norm pointwise solution of x_t' beta_t = y_t (beta = y for trend filtering).
  std::vector<double> beta(T * p, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    if (!es.regression) {
      beta[t] = y[t];
      continue;
    }
    double xx = 0.0;
    for (std::size_t j = 0; j < p; ++j) xx += x[t * p + j] * x[t * p + j];
    if (xx > 0.0) {
      for (std::size_t j = 0; j < p; ++j) beta[t * p + j] = y[t] * x[t * p + j] / xx;
    }
  }

  double sigma_eps = initial_sigma(y, coef);
  std::vector<double> sigma_path(T, sigma_eps);
  SvState sv;
  const bool use_sv = es.obs == ObsError::stochastic_volatility;
  if (use_sv) sv = initialize_sv(T, sigma_eps);

  std::vector<std::vector<double>> omega(p);
  for (std::size_t j = 0; j < p; ++j) omega[j] = path_innovations(beta, p, j, T, coef);

  const bool is_dsp = es.prior != PriorFamily::nig;
  const double start_phi = es.fixed_phi ? *es.fixed_phi : (es.prior == PriorFamily::hs ? 0.0 : 0.8);
  DspSweepOptions dopt;
  dopt.phi_prior = PhiPrior{cfg.a_phi, cfg.b_phi};
  dopt.fix_phi = es.prior == PriorFamily::hs || es.fixed_phi.has_value();
  dopt.offset_scale = cfg.offset_scale;
  MultiDspState ms;
  std::vector<double> nig_log_var(p, 0.0);
  if (is_dsp) {
    ms = initialize_multivariate(omega, start_phi);
  } else {
    for (std::size_t j = 0; j < p; ++j) {
      double ss = 0.0;
      for (double w : omega[j]) ss += w * w;
      nig_log_var[j] = std::log(std::max(ss / static_cast<double>(T), 1e-300));
    }
  }

  auto global_prior_mean = [&]() {
    if (!es.scaled_tau) return 0.0;
    if (use_sv) return std::log(1.0 / np);
    return std::log(sigma_eps * sigma_eps / np);
  };
  const bool coupled = is_dsp && es.scaled_tau && !use_sv;

  ModelDraws out;
  out.T = T;
  out.p = p;
  out.D = es.D;
  out.n_iter = cfg.n_iter;
  out.burn = cfg.burn;
  out.thin = cfg.thin;
  out.seed = cfg.seed;
  out.chain = chain;
  out.retained = cfg.retained();
  for (std::size_t t = 0; t < T; ++t) {
    if (!missing.empty() && missing[t]) out.missing.push_back(t);
  }
  out.beta.reserve(out.retained * T * p);
  out.h.reserve(out.retained * T * p);
  out.phi.reserve(out.retained * p);
  out.mu.reserve(out.retained * p);
  out.mu0.reserve(out.retained);
  out.sigma.reserve(out.retained * T);
  out.y_imputed.reserve(out.retained * out.missing.size());

  std::vector<double> obs_prec(T);
  std::vector<double> innov_prec(T * p);
  std::vector<double> fitted(T);

  for (std::size_t iter = 0; iter < cfg.n_iter; ++iter) {
    // (i) log-variances of the state innovations
    if (is_dsp) {
      update_multivariate(ms, std::span<const std::vector<double>>(omega), global_prior_mean(), dopt,
                          block_rng, hier_rng, table);
      for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t t = 0; t < T; ++t) innov_prec[j * T + t] = std::exp(-ms.blocks[j].h[t]);
      }
    } else {
      for (std::size_t j = 0; j < p; ++j) {
        const double prec = update_nig_precision(omega[j], block_rng(j));
        nig_log_var[j] = -std::log(prec);
        for (std::size_t t = 0; t < T; ++t) innov_prec[j * T + t] = prec;
      }
    }

    // (ii) states
    for (std::size_t t = 0; t < T; ++t) obs_prec[t] = 1.0 / (sigma_path[t] * sigma_path[t]);
    beta = es.regression ? update_beta_tvp(y, x, p, obs_prec, innov_prec, es.D, rng)
                         : update_beta_btf(y, obs_prec, innov_prec, es.D, rng);
    for (std::size_t j = 0; j < p; ++j) omega[j] = path_innovations(beta, p, j, T, coef);
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += (es.regression ? x[t * p + j] : 1.0) * beta[t * p + j];
      fitted[t] = s;
    }

    // (iii) observation variance
    if (use_sv) {
      std::vector<double> resid(T);
      for (std::size_t t = 0; t < T; ++t) resid[t] = y[t] - fitted[t];
      sigma_path = fit_sv_observation(resid, sv, rng, SvPrior{}, cfg.offset_scale, table);
    } else {
      std::optional<TauCoupling> coupling;
      if (coupled) coupling = TauCoupling{std::exp(0.5 * ms.mu0), np};
      sigma_eps = update_sigma_eps(y, fitted, sigma_eps, coupling, rng);
      std::fill(sigma_path.begin(), sigma_path.end(), sigma_eps);
    }

    // (iv) missing observations
    if (!out.missing.empty()) y = impute_missing(y, fitted, sigma_path, missing, rng);

    if (iter < cfg.burn || (iter - cfg.burn + 1) % cfg.thin != 0) continue;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        const double b = beta[t * p + j];
        const double hv = is_dsp ? ms.blocks[j].h[t] : nig_log_var[j];
        if (!std::isfinite(b) || !std::isfinite(hv)) {
          throw SamplerError("non-finite draw at iteration " + std::to_string(iter));
        }
        out.beta.push_back(b);
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t t = 0; t < T; ++t) out.h.push_back(is_dsp ? ms.blocks[j].h[t] : nig_log_var[j]);
      out.phi.push_back(is_dsp ? ms.blocks[j].phi : 0.0);
      out.mu.push_back(is_dsp ? ms.blocks[j].mu : nig_log_var[j]);
    }
    out.mu0.push_back(is_dsp ? ms.mu0 : nig_log_var[0]);
    out.sigma.insert(out.sigma.end(), sigma_path.begin(), sigma_path.end());
    for (std::size_t t : out.missing) out.y_imputed.push_back(y[t]);
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

template <class Fit>
std::vector<ModelDraws> run_chains(std::size_t chains, Fit&& fit) {
  std::vector<ModelDraws> out(chains);
  if (chains == 1) {
    out[0] = fit(0);
    return out;
  }
  std::vector<std::exception_ptr> errors(chains);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        out[c] = fit(c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace detail

/// Bayesian trend filtering. `missing` (empty or length T) flags grid points
/// without an observation; their y entries are ignored.
inline ModelDraws fit_btf(std::span<const double> y, std::span<const std::uint8_t> missing,
                          const BtfModelSpec& spec, const McmcConfig& cfg, std::size_t chain = 0) {
  spec.validate();
  detail::EngineSpec es;
  es.p = 1;
  es.D = spec.D;
  es.obs = spec.obs_error;
  es.prior = spec.prior;
  es.scaled_tau = spec.tau_scale == TauScale::automatic ? spec.prior != PriorFamily::hs
                                                        : spec.tau_scale == TauScale::scaled;
  es.fixed_phi = spec.fixed_phi;
  es.regression = false;
  return detail::run_engine(y, missing, {}, es, cfg, chain);
}

/// Time-varying-parameter regression y_t = x_t' beta_t + eps_t; x row-major T x p.
inline ModelDraws fit_tvp(std::span<const double> y, std::span<const double> x,
                          std::span<const std::uint8_t> missing, const TvpModelSpec& spec,
                          const McmcConfig& cfg, std::size_t chain = 0) {
  spec.validate();
  detail::EngineSpec es;
  es.p = spec.p;
  es.D = spec.D;
  es.obs = spec.obs_error;
  es.prior = spec.prior;
  es.scaled_tau = spec.tau_scale != TauScale::unit;
  es.fixed_phi = spec.fixed_phi;
  es.regression = true;
  return detail::run_engine(y, missing, x, es, cfg, chain);
}

/// cfg.chains independent chains (streams (seed, chain)) run concurrently.
inline std::vector<ModelDraws> fit_btf_chains(std::span<const double> y,
                                              std::span<const std::uint8_t> missing,
                                              const BtfModelSpec& spec, const McmcConfig& cfg) {
  return detail::run_chains(cfg.chains, [&](std::size_t c) { return fit_btf(y, missing, spec, cfg, c); });
}

inline std::vector<ModelDraws> fit_tvp_chains(std::span<const double> y, std::span<const double> x,
                                              std::span<const std::uint8_t> missing,
                                              const TvpModelSpec& spec, const McmcConfig& cfg) {
  return detail::run_chains(cfg.chains,
                            [&](std::size_t c) { return fit_tvp(y, x, missing, spec, cfg, c); });
}

}  // namespace dsp
