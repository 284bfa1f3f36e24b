#pragma once

// Dynamic shrinkage process: the AR(1) log-variance process
//   h_{t+1} = mu + phi (h_t - mu) + eta_t,   eta_t ~ Z(alpha, beta, 0, 1),
// with omega_t ~ N(0, exp(h_t)), its forward simulation, and the Gibbs
// full conditionals of (s, h, xi, mu, phi) under the Polya-Gamma expansion
// and the ten-component log-chi-square mixture.

#include "dsp/banded.hpp"
#include "dsp/error.hpp"
#include "dsp/omori.hpp"
#include "dsp/rng.hpp"
#include "dsp/special_dists.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace dsp {

struct DspParams {
  double mu = 0.0;
  double phi = 0.0;
  double alpha = 0.5;
  double beta = 0.5;
};

/// Latent state of one dynamic shrinkage process of length T.
///
/// xi[0] is the precision of the initial innovation h_1 - mu; xi[t] (t >= 1)
/// is the precision of the transition into h[t]. s holds mixture component
/// indices 0..9. tau = exp(mu / 2), lambda_t = exp((h_t - mu) / 2) and
/// kappa_t = 1 / (1 + exp(h_t)).
struct DspState {
  std::vector<double> h;
  std::vector<double> xi;
  std::vector<std::uint8_t> s;
  double xi_mu = 0.25;
  double mu = 0.0;
  double phi = 0.0;
  double alpha = 0.5;
  double beta = 0.5;

  std::size_t size() const noexcept { return h.size(); }

  void check_invariants() const {
    if (!(std::fabs(phi) < 1.0)) throw SamplerError("DSP state: |phi| must be < 1");
    if (xi.size() != h.size() || s.size() != h.size()) throw SamplerError("DSP state: size mismatch");
    for (double x : xi) {
      if (!(x > 0.0) || !std::isfinite(x)) throw SamplerError("DSP state: xi must be positive");
    }
    if (!(xi_mu > 0.0)) throw SamplerError("DSP state: xi_mu must be positive");
    for (double v : h) {
      if (!std::isfinite(v)) throw SamplerError("DSP state: non-finite log-variance");
    }
    for (auto c : s) {
      if (c >= OmoriTable::size) throw SamplerError("DSP state: mixture indicator out of range");
    }
  }
};

inline double shrinkage_kappa(double h) { return 1.0 / (1.0 + std::exp(h)); }

/// Simulates h_1..h_T with h_1 = mu + eta_0 and iid Z(alpha, beta, 0, 1) innovations.
inline std::vector<double> forward_simulate(const DspParams& par, std::size_t T, RngStream& rng) {
  if (!std::isfinite(par.mu) || !std::isfinite(par.phi)) {
    throw DomainError("forward_simulate: mu and phi must be finite");
  }
  const ZParams z{par.alpha, par.beta, 0.0, 1.0};
  z.validate();
  std::vector<double> h(T);
  if (T == 0) return h;
  h[0] = par.mu + sample_z(z, rng);
  for (std::size_t t = 1; t < T; ++t) {
    h[t] = par.mu + par.phi * (h[t - 1] - par.mu) + sample_z(z, rng);
  }
  return h;
}

inline constexpr double kDefaultOffsetScale = 1e-10;

/// Offset c in log(omega^2 + c): `scale` times the sample variance of omega,
/// with the variance floored at 1e-10.
inline double log_offset(std::span<const double> omega, double scale = kDefaultOffsetScale) {
  const double n = static_cast<double>(omega.size());
  if (omega.size() < 2) return scale * 1e-10;
  const double mean = std::accumulate(omega.begin(), omega.end(), 0.0) / n;
  double ss = 0.0;
  for (double w : omega) ss += (w - mean) * (w - mean);
  return scale * std::max(ss / (n - 1.0), 1e-10);
}

inline std::vector<double> log_square(std::span<const double> omega, double offset) {
  std::vector<double> y(omega.size());
  for (std::size_t t = 0; t < omega.size(); ++t) y[t] = std::log(omega[t] * omega[t] + offset);
  return y;
}

/// Posterior component probabilities for a residual r = y~ - h under the mixture.
inline std::array<double, OmoriTable::size> mixture_weights(double resid,
                                                            const OmoriTable& table) {
  std::array<double, OmoriTable::size> w{};
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < OmoriTable::size; ++i) {
    const double d = resid - table.mean[i];
    w[i] = std::log(table.prob[i]) - 0.5 * std::log(table.var[i]) - 0.5 * d * d / table.var[i];
    top = std::max(top, w[i]);
  }
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

/// Redraws the mixture indicators given y~ = log(omega^2 + c) and current h.
inline void update_s(DspState& st, std::span<const double> ytilde, const OmoriTable& table,
                     RngStream& rng) {
  if (ytilde.size() != st.size()) throw PreconditionError("update_s: length mismatch");
  for (std::size_t t = 0; t < st.size(); ++t) {
    const auto w = mixture_weights(ytilde[t] - st.h[t], table);
    double u = rng.uniform();
    std::size_t k = 0;
    for (; k + 1 < OmoriTable::size; ++k) {
      u -= w[k];
      if (u <= 0.0) break;
    }
    st.s[t] = static_cast<std::uint8_t>(k);
  }
}

inline void update_s(DspState& st, std::span<const double> omega, double offset,
                     const OmoriTable& table, RngStream& rng) {
  const auto y = log_square(omega, offset);
  update_s(st, y, table, rng);
}

/// Precision Q and linear term l of the Gaussian full conditional of
/// h~ = h - mu given (y~, s, xi, mu, phi).
struct HConditional {
  BandedPrecision precision;
  std::vector<double> linear;
};

inline HConditional h_conditional(const DspState& st, std::span<const double> ytilde,
                                  const OmoriTable& table) {
  const std::size_t T = st.size();
  if (ytilde.size() != T) throw PreconditionError("update_h: length mismatch");
  std::vector<double> obs_prec(T);
  std::vector<double> linear(T);
  const double shift = 0.5 * (st.alpha - st.beta);
  for (std::size_t t = 0; t < T; ++t) {
    const double v = table.var[st.s[t]];
    obs_prec[t] = 1.0 / v;
    linear[t] = (ytilde[t] - table.mean[st.s[t]] - st.mu) / v;
    if (shift != 0.0) linear[t] += shift * (t + 1 < T ? 1.0 - st.phi : 1.0);
  }
  if (T == 1) {
    BandedPrecision q(1, 0);
    q.diagonal()[0] = obs_prec[0] + st.xi[0];
    return {std::move(q), std::move(linear)};
  }
  return {build_difference_precision(1, obs_prec, st.xi, st.phi), std::move(linear)};
}

/// Joint draw of h from its Gaussian full conditional (one banded solve).
inline void update_h(DspState& st, std::span<const double> ytilde, const OmoriTable& table,
                     RngStream& rng, NoiseMode mode = NoiseMode::sample) {
  const auto cond = h_conditional(st, ytilde, table);
  auto ht = sample_banded_gaussian(cond.precision, cond.linear, rng, mode);
  for (std::size_t t = 0; t < st.size(); ++t) st.h[t] = ht[t] + st.mu;
}

/// eta_t for t >= 1 and the initial innovation eta_0 = h_1 - mu.
inline double innovation(const DspState& st, std::size_t t) {
  if (t == 0) return st.h[0] - st.mu;
  return st.h[t] - st.mu - st.phi * (st.h[t - 1] - st.mu);
}

/// xi_t | eta_t ~ PG(alpha + beta, eta_t) for every t (including xi_0), then
/// xi_mu | mu ~ PG(1, mu - mu_prior_mean).
inline void update_xi(DspState& st, double mu_prior_mean, RngStream& rng) {
  const double b = st.alpha + st.beta;
  for (std::size_t t = 0; t < st.size(); ++t) st.xi[t] = sample_pg(b, innovation(st, t), rng);
  st.xi_mu = sample_pg(1.0, st.mu - mu_prior_mean, rng);
}

struct ScalarGaussian {
  double precision;
  double linear;
};

/// Q_mu = xi_mu + xi_0 + (1 - phi)^2 sum_{t>=1} xi_t and the matching l_mu.
inline ScalarGaussian mu_conditional(const DspState& st, double mu_prior_mean) {
  const std::size_t T = st.size();
  const double shift = 0.5 * (st.alpha - st.beta);
  const double one_m_phi = 1.0 - st.phi;
  double sum_xi = 0.0;
  double sum_lin = 0.0;
  for (std::size_t t = 1; t < T; ++t) {
    sum_xi += st.xi[t];
    sum_lin += st.xi[t] * (st.h[t] - st.phi * st.h[t - 1]) - shift;
  }
  const double q = st.xi_mu + st.xi[0] + one_m_phi * one_m_phi * sum_xi;
  const double l = st.xi_mu * mu_prior_mean + st.xi[0] * st.h[0] - shift + one_m_phi * sum_lin;
  return {q, l};
}

inline void update_mu(DspState& st, double mu_prior_mean, RngStream& rng,
                      NoiseMode mode = NoiseMode::sample) {
  const auto c = mu_conditional(st, mu_prior_mean);
  const double e = mode == NoiseMode::sample ? rng.normal() : 0.0;
  st.mu = c.linear / c.precision + e / std::sqrt(c.precision);
}

struct PhiPrior {
  double a = 10.0;
  double b = 2.0;
};

/// Log full conditional of phi: Beta(a, b) prior on (phi + 1)/2 times the
/// Gaussian transition likelihood given xi.
inline double phi_log_conditional(const DspState& st, double phi, const PhiPrior& prior) {
  if (!(phi > -1.0 && phi < 1.0)) return -std::numeric_limits<double>::infinity();
  const double shift = 0.5 * (st.alpha - st.beta);
  double ll = (prior.a - 1.0) * std::log1p(phi) + (prior.b - 1.0) * std::log1p(-phi);
  for (std::size_t t = 1; t < st.size(); ++t) {
    const double r = (st.h[t] - st.mu) - phi * (st.h[t - 1] - st.mu);
    // eta | xi ~ N(shift / xi, 1 / xi)
    const double d = r - shift / st.xi[t];
    ll -= 0.5 * st.xi[t] * d * d;
  }
  return ll;
}

inline void update_phi(DspState& st, const PhiPrior& prior, RngStream& rng) {
  SliceOptions opt;
  opt.lower = -1.0;
  opt.upper = 1.0;
  opt.width = 1.0;
  st.phi = slice_sample([&](double x) { return phi_log_conditional(st, x, prior); }, st.phi, rng,
                        opt);
}

struct DspSweepOptions {
  PhiPrior phi_prior{};
  bool fix_phi = false;  ///< static (non-dynamic) variant: phi stays at its current value
  double offset_scale = kDefaultOffsetScale;
};

/// One DSP sweep in the order s, h, xi, mu, phi for innovations omega.
inline void dsp_sweep(DspState& st, std::span<const double> omega, double mu_prior_mean,
                      const DspSweepOptions& opt, RngStream& rng,
                      const OmoriTable& table = omori_table()) {
  const double c = log_offset(omega, opt.offset_scale);
  const auto ytilde = log_square(omega, c);
  update_s(st, ytilde, table, rng);
  update_h(st, ytilde, table, rng);
  update_xi(st, mu_prior_mean, rng);
  update_mu(st, mu_prior_mean, rng);
  if (!opt.fix_phi) update_phi(st, opt.phi_prior, rng);
}

/// Starting state in the likelihood's typical set: h from a 5-point moving
/// average of log(omega^2 + c), phi = 0.8, xi = 1/4, s nearest component.
inline DspState initialize_dsp(std::span<const double> omega, double phi = 0.8, double alpha = 0.5,
                               double beta = 0.5, const OmoriTable& table = omori_table()) {
  const std::size_t T = omega.size();
  if (T == 0) throw PreconditionError("initialize_dsp: empty innovations");
  const auto y = log_square(omega, log_offset(omega));
  DspState st;
  st.alpha = alpha;
  st.beta = beta;
  st.phi = phi;
  st.h.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= 2 ? t - 2 : 0;
    const std::size_t hi = std::min(T - 1, t + 2);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += y[k];
    st.h[t] = sum / static_cast<double>(hi - lo + 1);
  }
  st.mu = std::accumulate(st.h.begin(), st.h.end(), 0.0) / static_cast<double>(T);
  st.xi.assign(T, 0.25);
  st.xi_mu = 0.25;
  st.s.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double r = y[t] - st.h[t];
    std::size_t best = 0;
    for (std::size_t i = 1; i < OmoriTable::size; ++i) {
      if (std::fabs(r - table.mean[i]) < std::fabs(r - table.mean[best])) best = i;
    }
    st.s[t] = static_cast<std::uint8_t>(best);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Multivariate (diagonal VAR) form.

/// p DSP blocks sharing a global level: mu_j = log(tau_0^2 tau_j^2) and
/// mu_0 = log(tau_0^2), with mu_j | mu_0 ~ N(mu_0, 1/xi_mu_j). With p == 1
/// the predictor-level scale is absent and block 0's mu is the global level.
struct MultiDspState {
  std::vector<DspState> blocks;
  double mu0 = 0.0;
  double xi_mu0 = 0.25;

  std::size_t p() const noexcept { return blocks.size(); }
  bool hierarchical() const noexcept { return blocks.size() > 1; }
};

/// Block-tridiagonal precision of the stacked (h_{1,1..T}, ..., h_{p,1..T})
/// conditional: each block's tridiagonal with zero coupling between blocks.
inline HConditional multivariate_h_conditional(const MultiDspState& ms,
                                               std::span<const std::vector<double>> ytilde,
                                               const OmoriTable& table) {
  const std::size_t p = ms.p();
  const std::size_t T = ms.blocks.at(0).size();
  BandedPrecision q(p * T, T > 1 ? 1 : 0);
  std::vector<double> linear(p * T);
  for (std::size_t j = 0; j < p; ++j) {
    const auto c = h_conditional(ms.blocks[j], ytilde[j], table);
    for (std::size_t t = 0; t < T; ++t) {
      q.diagonal()[j * T + t] = c.precision.diagonal()[t];
      linear[j * T + t] = c.linear[t];
      if (T > 1 && t + 1 < T) q.band(1)[j * T + t] = c.precision.band(1)[t];
    }
  }
  return {std::move(q), std::move(linear)};
}

/// One multivariate sweep. `block_rng(j)` returns the stream used for block j;
/// `hier_rng` drives the global-level updates (p > 1 only). With p == 1 and
/// block_rng(0) the same stream, the draws equal dsp_sweep exactly.
template <class BlockRng>
void update_multivariate(MultiDspState& ms, std::span<const std::vector<double>> omega,
                         double global_prior_mean, const DspSweepOptions& opt,
                         BlockRng&& block_rng, RngStream& hier_rng,
                         const OmoriTable& table = omori_table()) {
  const std::size_t p = ms.p();
  if (omega.size() != p) throw PreconditionError("update_multivariate: need one series per block");
  const std::size_t T = ms.blocks.at(0).size();
  std::vector<std::vector<double>> ytilde(p);
  for (std::size_t j = 0; j < p; ++j) {
    ytilde[j] = log_square(omega[j], log_offset(omega[j], opt.offset_scale));
    update_s(ms.blocks[j], ytilde[j], table, block_rng(j));
  }

  const auto cond = multivariate_h_conditional(ms, ytilde, table);
  const BandedCholesky chol = cholesky_banded(cond.precision);
  std::vector<double> noise(p * T);
  for (std::size_t j = 0; j < p; ++j) {
    RngStream& r = block_rng(j);
    for (std::size_t t = 0; t < T; ++t) noise[j * T + t] = r.normal();
  }
  const auto ht = sample_from_factor(chol, cond.linear, noise);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t t = 0; t < T; ++t) ms.blocks[j].h[t] = ht[j * T + t] + ms.blocks[j].mu;
  }

  const double block_prior = ms.hierarchical() ? ms.mu0 : global_prior_mean;
  for (std::size_t j = 0; j < p; ++j) {
    update_xi(ms.blocks[j], block_prior, block_rng(j));
    update_mu(ms.blocks[j], block_prior, block_rng(j));
    if (!opt.fix_phi) update_phi(ms.blocks[j], opt.phi_prior, block_rng(j));
  }

  if (ms.hierarchical()) {
    // mu_0 | {mu_j}: normal-normal with prior N(global_prior_mean, 1/xi_mu0).
    // Terms are summed in sorted order so the result does not depend on block order.
    std::vector<double> qs, ls;
    for (const auto& b : ms.blocks) {
      qs.push_back(b.xi_mu);
      ls.push_back(b.xi_mu * b.mu);
    }
    std::sort(qs.begin(), qs.end());
    std::sort(ls.begin(), ls.end());
    double q = ms.xi_mu0;
    double l = ms.xi_mu0 * global_prior_mean;
    for (std::size_t j = 0; j < p; ++j) {
      q += qs[j];
      l += ls[j];
    }
    ms.mu0 = l / q + hier_rng.normal() / std::sqrt(q);
    ms.xi_mu0 = sample_pg(1.0, ms.mu0 - global_prior_mean, hier_rng);
  } else {
    ms.mu0 = ms.blocks[0].mu;
    ms.xi_mu0 = ms.blocks[0].xi_mu;
  }
}

inline MultiDspState initialize_multivariate(std::span<const std::vector<double>> omega,
                                             double phi = 0.8) {
  MultiDspState ms;
  for (const auto& w : omega) ms.blocks.push_back(initialize_dsp(w, phi));
  double m = 0.0;
  for (const auto& b : ms.blocks) m += b.mu;
  ms.mu0 = m / static_cast<double>(ms.p());
  return ms;
}

}  // namespace dsp
