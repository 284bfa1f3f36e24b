#pragma once

// Posterior summaries from retained draws: HPD and quantile intervals,
// simultaneous credible bands, SimBaS scores and global Bayesian p-values,
// and the RMSE / MCIW / coverage metrics.
//
// Draw matrices are row-major N x T (one row per retained draw).

#include "dsp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace dsp {

struct Interval {
  double lower;
  double upper;
};

inline constexpr std::size_t kMinHpdDraws = 100;

namespace detail {

inline void check_level(double level, const char* what) {
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError(std::string(what) + ": level must be in (0, 1)");
}

// Number of sorted draws an interval at `level` must contain; the small
// slack keeps ceil(0.95 * 100) at 95 despite rounding.
inline std::size_t coverage_count(double level, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

// Type-7 sample quantile of sorted data.
inline double sorted_quantile(std::span<const double> sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

inline void check_matrix(std::span<const double> draws, std::size_t n, std::size_t T,
                         const char* what) {
  if (n == 0 || T == 0 || draws.size() != n * T) {
    throw PreconditionError(std::string(what) + ": draw matrix must be N x T");
  }
}

}  // namespace detail

/// Shortest interval containing ceil(level * N) of the sorted draws.
inline Interval hpd_interval(std::span<const double> draws, double level) {
  detail::check_level(level, "hpd_interval");
  if (draws.size() < kMinHpdDraws) {
    throw PreconditionError("hpd_interval: need at least 100 draws, got " + std::to_string(draws.size()));
  }
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const std::size_t k = detail::coverage_count(level, x.size());
  std::size_t best = 0;
  double width = x[k - 1] - x[0];
  for (std::size_t i = 1; i + k <= x.size(); ++i) {
    const double w = x[i + k - 1] - x[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {x[best], x[best + k - 1]};
}

/// Equal-tail interval between the (1 - level)/2 and (1 + level)/2 quantiles.
inline Interval quantile_interval(std::span<const double> draws, double level) {
  detail::check_level(level, "quantile_interval");
  if (draws.empty()) throw PreconditionError("quantile_interval: no draws");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  return {detail::sorted_quantile(x, 0.5 * (1.0 - level)), detail::sorted_quantile(x, 0.5 * (1.0 + level))};
}

inline std::vector<double> column_means(std::span<const double> draws, std::size_t n, std::size_t T) {
  detail::check_matrix(draws, n, T, "column_means");
  std::vector<double> m(T, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) m[t] += draws[i * T + t];
  }
  for (double& v : m) v /= static_cast<double>(n);
  return m;
}

inline std::vector<double> column(std::span<const double> draws, std::size_t n, std::size_t T,
                                  std::size_t t) {
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = draws[i * T + t];
  return c;
}

/// Pointwise HPD intervals, one per column.
inline std::vector<Interval> pointwise_hpd(std::span<const double> draws, std::size_t n,
                                           std::size_t T, double level) {
  detail::check_matrix(draws, n, T, "pointwise_hpd");
  std::vector<Interval> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) out.push_back(hpd_interval(column(draws, n, T, t), level));
  return out;
}

/// Posterior mean m_t, sd s_t and the sorted max statistics
/// M_i = max_t |beta_t^(i) - m_t| / s_t over columns with s_t > 0.
struct MaxStatistic {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> sorted_max;  ///< empty when every column has zero variance
};

inline MaxStatistic max_statistic(std::span<const double> draws, std::size_t n, std::size_t T) {
  detail::check_matrix(draws, n, T, "simultaneous_bands");
  MaxStatistic ms;
  ms.mean = column_means(draws, n, T);
  ms.sd.assign(T, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      const double d = draws[i * T + t] - ms.mean[t];
      ms.sd[t] += d * d;
    }
  }
  bool any = false;
  for (double& s : ms.sd) {
    s = n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
    any = any || s > 0.0;
  }
  if (!any) return ms;
  ms.sorted_max.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      if (ms.sd[t] > 0.0) m = std::max(m, std::fabs(draws[i * T + t] - ms.mean[t]) / ms.sd[t]);
    }
    ms.sorted_max[i] = m;
  }
  std::sort(ms.sorted_max.begin(), ms.sorted_max.end());
  return ms;
}

/// Empirical `level` quantile of the max statistic: the smallest q with at
/// least ceil(level * N) draws satisfying M_i <= q.
inline double max_quantile(const MaxStatistic& ms, double level) {
  return ms.sorted_max[detail::coverage_count(level, ms.sorted_max.size()) - 1];
}

struct Bands {
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double critical = 0.0;  ///< q in m_t +- q s_t
};

/// Simultaneous credible bands m_t +- q s_t at `level` = 1 - alpha.
/// Zero-variance columns get the degenerate band [m_t, m_t].
inline Bands simultaneous_bands(std::span<const double> draws, std::size_t n, std::size_t T,
                                double level) {
  detail::check_level(level, "simultaneous_bands");
  const MaxStatistic ms = max_statistic(draws, n, T);
  if (ms.sorted_max.empty()) throw PreconditionError("simultaneous_bands: every column has zero variance");
  Bands b;
  b.critical = max_quantile(ms, level);
  b.mean = ms.mean;
  b.lower.resize(T);
  b.upper.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    b.lower[t] = ms.mean[t] - b.critical * ms.sd[t];
    b.upper[t] = ms.mean[t] + b.critical * ms.sd[t];
  }
  return b;
}

/// alpha grid k / (size + 1), k = 1..size.
inline std::vector<double> default_alpha_grid(std::size_t size = 1000) {
  std::vector<double> g(size);
  for (std::size_t k = 0; k < size; ++k) g[k] = static_cast<double>(k + 1) / static_cast<double>(size + 1);
  return g;
}

/// SimBaS scores P_t = min{alpha in grid : 0 outside B_t(alpha)}, 1 when no
/// grid level excludes zero.
inline std::vector<double> simbas(std::span<const double> draws, std::size_t n, std::size_t T,
                                  std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw PreconditionError("simbas: empty level grid");
  std::vector<double> grid(alpha_grid.begin(), alpha_grid.end());
  std::sort(grid.begin(), grid.end());
  for (double a : grid) detail::check_level(a, "simbas");
  const MaxStatistic ms = max_statistic(draws, n, T);
  std::vector<double> crit(grid.size(), 0.0);
  if (!ms.sorted_max.empty()) {
    for (std::size_t k = 0; k < grid.size(); ++k) crit[k] = max_quantile(ms, 1.0 - grid[k]);
  }
  std::vector<double> p(T, 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double m = std::fabs(ms.mean[t]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      // B_t(alpha) excludes zero iff |m_t| > q_{1-alpha} s_t.
      if (m > crit[k] * ms.sd[t]) {
        p[t] = grid[k];
        break;
      }
    }
  }
  return p;
}

inline std::vector<double> simbas(std::span<const double> draws, std::size_t n, std::size_t T) {
  const auto grid = default_alpha_grid();
  return simbas(draws, n, T, grid);
}

/// Global Bayesian p-value P_j = min_t P_{j,t}.
inline double gbpv(std::span<const double> scores) {
  if (scores.empty()) throw PreconditionError("gbpv: no scores");
  return *std::min_element(scores.begin(), scores.end());
}

inline double rmse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size() || truth.empty()) throw PreconditionError("rmse: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) ss += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

/// RMSE over a T x p coefficient matrix: sqrt(sum (beta* - beta^)^2 / (T p)).
inline double rmse_matrix(std::span<const double> estimate, std::span<const double> truth,
                          std::size_t T, std::size_t p) {
  if (truth.size() != T * p) throw PreconditionError("rmse_matrix: truth must be T x p");
  return rmse(estimate, truth);
}

inline double mciw(std::span<const double> lower, std::span<const double> upper) {
  if (lower.size() != upper.size() || lower.empty()) throw PreconditionError("mciw: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) s += upper[i] - lower[i];
  return s / static_cast<double>(lower.size());
}

inline double mciw(std::span<const Interval> iv) {
  if (iv.empty()) throw PreconditionError("mciw: no intervals");
  double s = 0.0;
  for (const auto& i : iv) s += i.upper - i.lower;
  return s / static_cast<double>(iv.size());
}

/// Fraction of truth values inside their intervals.
inline double coverage(std::span<const Interval> iv, std::span<const double> truth) {
  if (iv.size() != truth.size() || truth.empty()) throw PreconditionError("coverage: length mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += (truth[i] >= iv[i].lower && truth[i] <= iv[i].upper);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Summary of one coefficient path (one j) at level 1 - alpha.
struct SummaryBands {
  std::vector<double> mean;
  std::vector<double> hpd_lower;
  std::vector<double> hpd_upper;
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  std::vector<double> simbas;
  double gbpv = 1.0;
};

inline SummaryBands summarize_path(std::span<const double> draws, std::size_t n, std::size_t T,
                                   double level = 0.95) {
  SummaryBands s;
  const auto hpd = pointwise_hpd(draws, n, T, level);
  for (const auto& iv : hpd) {
    s.hpd_lower.push_back(iv.lower);
    s.hpd_upper.push_back(iv.upper);
  }
  const MaxStatistic ms = max_statistic(draws, n, T);
  s.mean = ms.mean;
  if (ms.sorted_max.empty()) {
    s.band_lower = s.mean;
    s.band_upper = s.mean;
  } else {
    const Bands b = simultaneous_bands(draws, n, T, level);
    s.band_lower = b.lower;
    s.band_upper = b.upper;
  }
  s.simbas = simbas(draws, n, T);
  s.gbpv = gbpv(s.simbas);
  return s;
}

}  // namespace dsp
