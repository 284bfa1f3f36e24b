#pragma once

// Samplers and densities for the distribution family behind dynamic shrinkage
// processes: Polya-Gamma, Z, inverted-Beta, three-parameter Beta, and a
// univariate slice sampler.

#include "dsp/error.hpp"
#include "dsp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

namespace dsp {

struct ZParams {
  double alpha = 0.5;
  double beta = 0.5;
  double mu_z = 0.0;
  double sigma_z = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(sigma_z > 0.0) || !std::isfinite(mu_z)) {
      throw DomainError("ZParams requires alpha > 0, beta > 0, sigma_z > 0 and finite mu_z");
    }
  }
};

/// Three-parameter Beta TPB(shape1, shape2, gamma). gamma == 1 is Beta(shape1, shape2).
struct TpbParams {
  double shape1 = 0.5;
  double shape2 = 0.5;
  double gamma = 1.0;

  void validate() const {
    if (!(shape1 > 0.0) || !(shape2 > 0.0) || !(gamma > 0.0)) {
      throw DomainError("TpbParams requires strictly positive shape1, shape2 and gamma");
    }
  }
};

namespace detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kPgTrunc = 0.64;
inline constexpr int kPgSeriesTerms = 200;

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double log_std_normal_cdf(double x) {
  if (x > -30.0) return std::log(std_normal_cdf(x));
  // Mills-ratio asymptote for the far left tail.
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * kPi);
}

inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Coefficient a_n(x) of the alternating series for the Jacobi density J*(1, 0).
inline double pg_series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kPgTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double log_val = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                         2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(log_val);
}

// Probability of proposing from the exponential (right) piece.
inline double pg_right_mass(double z) {
  const double t = kPgTrunc;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_std_normal_cdf(b);
  const double xa = x0 + z + log_std_normal_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian IG(1/z, 1) truncated to (0, trunc).
inline double truncated_inverse_gaussian(double z, double trunc, RngStream& rng) {
  z = std::fabs(z);
  const double mu = z > 0.0 ? 1.0 / z : std::numeric_limits<double>::infinity();
  double x = trunc + 1.0;
  if (mu > trunc) {
    double accept = 0.0;
    while (rng.uniform() > accept) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / trunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = trunc / ((1.0 + trunc * e1) * (1.0 + trunc * e1));
      accept = std::exp(-0.5 * z * z * x);
    }
  } else {
    while (x > trunc) {
      const double y = std::pow(rng.normal(), 2);
      x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + (mu * y) * (mu * y));
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

// Exact PG(1, c) by the alternating-series accept-reject scheme (no tuning).
inline double sample_pg1(double c, RngStream& rng) {
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double right_mass = pg_right_mass(z);
  for (;;) {
    double x;
    if (rng.uniform() < right_mass) {
      x = kPgTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, kPgTrunc, rng);
    }
    double s = pg_series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= pg_series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += pg_series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace detail

/// E[PG(b, c)] = b tanh(c/2) / (2c), with the c -> 0 limit b/4.
inline double pg_mean(double b, double c) {
  const double ac = std::fabs(c);
  if (ac < 1e-6) return b * (0.25 - ac * ac / 48.0);
  return b * std::tanh(0.5 * ac) / (2.0 * ac);
}

/// Draw from the Polya-Gamma distribution PG(b, c).
///
/// b == 1 uses the exact accept-reject sampler; other integer b sum b exact
/// PG(1, c) draws. Non-integer b falls back to the Gamma-convolution series
/// truncated at 200 terms, with the expected value of the omitted tail added
/// back so the mean stays exact. The neglected tail variance is below
/// b * 2.6e-9.
inline double sample_pg(double b, double c, RngStream& rng) {
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("sample_pg: b must be positive");
  if (!std::isfinite(c)) throw DomainError("sample_pg: c must be finite");
  if (b == 1.0) return detail::sample_pg1(c, rng);
  const double b_int = std::round(b);
  if (b == b_int && b_int <= 64.0) {
    double sum = 0.0;
    for (int i = 0; i < static_cast<int>(b_int); ++i) sum += detail::sample_pg1(c, rng);
    return sum;
  }
  const double c2 = c * c / (4.0 * detail::kPi * detail::kPi);
  double draw = 0.0;
  double partial_mean = 0.0;
  for (int k = 1; k <= detail::kPgSeriesTerms; ++k) {
    const double denom = (k - 0.5) * (k - 0.5) + c2;
    draw += rng.gamma(b) / denom;
    partial_mean += b / denom;
  }
  const double scale = 1.0 / (2.0 * detail::kPi * detail::kPi);
  const double tail = std::max(0.0, pg_mean(b, c) - scale * partial_mean);
  return scale * draw + tail;
}

/// Log density of Z(alpha, beta, mu_z, sigma_z).
inline double z_log_density(double z, const ZParams& p) {
  p.validate();
  const double u = (z - p.mu_z) / p.sigma_z;
  return p.alpha * u - (p.alpha + p.beta) * detail::softplus(u) - std::log(p.sigma_z) -
         detail::log_beta_fn(p.alpha, p.beta);
}

inline double z_density(double z, const ZParams& p) { return std::exp(z_log_density(z, p)); }

/// Draw from Z(alpha, beta, mu_z, sigma_z) as mu_z + sigma_z log(G_alpha / G_beta)
/// with independent Gamma variates.
inline double sample_z(const ZParams& p, RngStream& rng) {
  p.validate();
  const double ga = rng.gamma(p.alpha);
  const double gb = rng.gamma(p.beta);
  return p.mu_z + p.sigma_z * (std::log(ga) - std::log(gb));
}

/// Draw from Z(alpha, beta, mu_z, sigma_z) through its Polya-Gamma mean-variance
/// mixture eta | xi ~ N((alpha - beta) / (2 xi), 1 / xi).
///
/// The mixing law of xi is not PG(alpha + beta, 0): integrating eta out of
/// exp(kappa eta - xi eta^2 / 2) p_PG(xi) leaves xi^(-1/2) exp(kappa^2 / (2 xi))
/// p_PG(xi). It is sampled exactly by drawing an auxiliary eta0 ~ Z and then
/// xi | eta0 ~ PG(alpha + beta, eta0).
inline double sample_z_mixture(const ZParams& p, RngStream& rng) {
  p.validate();
  const double eta0 = std::log(rng.gamma(p.alpha)) - std::log(rng.gamma(p.beta));
  const double xi = sample_pg(p.alpha + p.beta, eta0, rng);
  const double eta = 0.5 * (p.alpha - p.beta) / xi + rng.normal() / std::sqrt(xi);
  return p.mu_z + p.sigma_z * eta;
}

/// Draw from the inverted-Beta IB(beta, alpha): density proportional to
/// x^(alpha - 1) (1 + x)^-(alpha + beta).
inline double sample_inverted_beta(double beta, double alpha, RngStream& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("sample_inverted_beta: shapes must be positive");
  return rng.gamma(alpha) / rng.gamma(beta);
}

inline double tpb_log_density(double kappa, const TpbParams& p) {
  p.validate();
  if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("tpb_density: kappa must lie in (0, 1)");
  const double a = p.shape2;  // exponent partner of (1 - kappa)
  const double b = p.shape1;  // exponent partner of kappa
  return -detail::log_beta_fn(b, a) + b * std::log(p.gamma) + (b - 1.0) * std::log(kappa) +
         (a - 1.0) * std::log1p(-kappa) - (a + b) * std::log1p((p.gamma - 1.0) * kappa);
}

/// TPB(shape1, shape2, gamma) density at kappa in (0, 1).
inline double tpb_density(double kappa, const TpbParams& p) {
  return std::exp(tpb_log_density(kappa, p));
}

struct SliceOptions {
  double width = 1.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  int max_doublings = 200;
};

/// One slice-sampling transition (doubling expansion with the acceptability
/// test, then shrinkage) leaving exp(log_density) invariant. Points outside
/// (lower, upper) have zero density.
template <class LogDensity>
double slice_sample(LogDensity&& log_density, double x0, RngStream& rng,
                    const SliceOptions& opt = {}) {
  if (!(opt.width > 0.0)) throw PreconditionError("slice_sample: width must be positive");
  if (!(x0 > opt.lower && x0 < opt.upper)) {
    throw PreconditionError("slice_sample: starting point outside bounds");
  }
  auto f = [&](double x) -> double {
    if (!(x > opt.lower && x < opt.upper)) return -std::numeric_limits<double>::infinity();
    const double v = log_density(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  const double fx0 = log_density(x0);
  if (!std::isfinite(fx0)) throw PreconditionError("slice_sample: log density not finite at x0");

  const double level = fx0 - rng.exponential();
  const double w = opt.width;
  double left = x0 - w * rng.uniform();
  double right = left + w;
  double f_left = f(left);
  double f_right = f(right);
  for (int k = 0; k < opt.max_doublings && (level < f_left || level < f_right); ++k) {
    if (rng.uniform() < 0.5) {
      left -= right - left;
      f_left = f(left);
    } else {
      right += right - left;
      f_right = f(right);
    }
  }

  auto acceptable = [&](double x1) {
    double lh = left;
    double rh = right;
    double f_lh = f_left;
    double f_rh = f_right;
    bool differ = false;
    while (rh - lh > 1.1 * w) {
      const double mid = 0.5 * (lh + rh);
      if ((x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid)) differ = true;
      if (x1 < mid) {
        rh = mid;
        f_rh = f(rh);
      } else {
        lh = mid;
        f_lh = f(lh);
      }
      if (differ && level >= f_lh && level >= f_rh) return false;
    }
    return true;
  };

  double lo = left;
  double hi = right;
  for (;;) {
    const double x1 = lo + rng.uniform() * (hi - lo);
    if (level < f(x1) && acceptable(x1)) return x1;
    if (x1 < x0) {
      lo = x1;
    } else {
      hi = x1;
    }
    if (hi - lo < 1e-300) return x0;
  }
}

}  // namespace dsp
