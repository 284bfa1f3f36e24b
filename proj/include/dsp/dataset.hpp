#pragma once

// Datasets on an equally spaced grid: the Donoho-Johnstone test functions,
// the sparse time-varying regression design, and CSV ingestion with grid
// expansion for missing or unequally spaced observations.

#include "dsp/error.hpp"
#include "dsp/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dsp {

struct Dataset {
  std::vector<double> time;          ///< grid times, strictly increasing
  std::vector<double> y;             ///< NaN where missing
  std::vector<std::uint8_t> missing;  ///< 1 where the grid point has no observation
  std::size_t p = 0;                 ///< predictor count (0: none)
  std::vector<double> x;             ///< row-major T x p
  std::vector<double> truth;         ///< noiseless signal y*, when simulated
  std::vector<double> beta_truth;    ///< block-major p x T, when simulated
  double noise_sd = 0.0;             ///< sigma*, when simulated
  std::string provenance;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t n_missing() const {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
  }
  bool has_missing() const { return n_missing() > 0; }

  void check_invariants() const {
    const std::size_t T = y.size();
    if (time.size() != T || missing.size() != T) throw PreconditionError("Dataset: size mismatch");
    if (x.size() != T * p) throw PreconditionError("Dataset: predictor matrix must be T x p");
    for (std::size_t t = 1; t < T; ++t) {
      if (!(time[t] > time[t - 1])) throw PreconditionError("Dataset: times must be strictly increasing");
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (static_cast<bool>(missing[t]) != std::isnan(y[t])) {
        throw PreconditionError("Dataset: missing mask inconsistent with values");
      }
    }
  }
};

/// Same grid, values, mask and predictors (bitwise for present values).
inline bool same_data(const Dataset& a, const Dataset& b) {
  if (a.time != b.time || a.missing != b.missing || a.p != b.p || a.x != b.x) return false;
  if (a.y.size() != b.y.size()) return false;
  for (std::size_t t = 0; t < a.y.size(); ++t) {
    if (a.missing[t]) continue;
    if (a.y[t] != b.y[t]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Simulation.

namespace detail {

inline constexpr std::array<double, 11> kJumpLocations{0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                       0.44, 0.65, 0.76, 0.78, 0.81};

inline double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

inline double sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : v) ss += (a - m) * (a - m);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace detail

/// Donoho-Johnstone test function at x in (0, 1].
inline double donoho_function(const std::string& name, double x) {
  using detail::kJumpLocations;
  if (name == "doppler") {
    return std::sqrt(x * (1.0 - x)) * std::sin(2.0 * std::numbers::pi * 1.05 / (x + 0.05));
  }
  if (name == "heavisine") {
    return 4.0 * std::sin(4.0 * std::numbers::pi * x) - detail::sgn(x - 0.3) - detail::sgn(0.72 - x);
  }
  if (name == "blocks") {
    static constexpr std::array<double, 11> height{4.0, -5.0, 3.0, -4.0, 5.0, -4.2,
                                                   2.1, 4.3,  -3.1, 2.1, -4.2};
    double f = 0.0;
    for (std::size_t j = 0; j < 11; ++j) f += height[j] * 0.5 * (1.0 + detail::sgn(x - kJumpLocations[j]));
    return f;
  }
  if (name == "bumps") {
    static constexpr std::array<double, 11> height{4.0, 5.0, 3.0, 4.0, 5.0, 4.2,
                                                   2.1, 4.3, 3.1, 5.1, 4.2};
    static constexpr std::array<double, 11> width{0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                  0.01,  0.01,  0.005, 0.008, 0.005};
    double f = 0.0;
    for (std::size_t j = 0; j < 11; ++j) {
      f += height[j] * std::pow(1.0 + std::fabs((x - kJumpLocations[j]) / width[j]), -4.0);
    }
    return f;
  }
  throw PreconditionError("unknown test function '" + name + "' (doppler, bumps, blocks, heavisine)");
}

/// sigma* = sd(y*) / rsnr with the T - 1 denominator; 0 when rsnr is infinite.
inline double rsnr_noise_sd(std::span<const double> truth, double rsnr) {
  if (!(rsnr > 0.0)) throw PreconditionError("rsnr must be positive");
  if (std::isinf(rsnr)) return 0.0;
  return detail::sample_sd(truth) / rsnr;
}

/// y_t = f(t / T) + N(0, sigma*^2), t = 1..T.
inline Dataset simulate_donoho(const std::string& name, std::size_t T, double rsnr,
                               std::uint64_t seed) {
  if (T < 16) throw PreconditionError("simulate_donoho: T must be at least 16");
  Dataset d;
  d.truth.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    d.truth[t] = donoho_function(name, static_cast<double>(t + 1) / static_cast<double>(T));
  }
  d.noise_sd = rsnr_noise_sd(d.truth, rsnr);
  RngStream rng(seed, 0);
  d.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) d.y[t] = d.truth[t] + d.noise_sd * rng.normal();
  d.time.resize(T);
  for (std::size_t t = 0; t < T; ++t) d.time[t] = static_cast<double>(t + 1);
  d.missing.assign(T, 0);
  std::ostringstream os;
  os << "simulate_donoho name=" << name << " T=" << T << " rsnr=" << rsnr << " seed=" << seed;
  d.provenance = os.str();
  return d;
}

enum class PredictorMode { iid, ar };

/// Sparse time-varying regression design: x_1 = 1, remaining predictors iid
/// N(0, 1) or unit-variance AR(1) with coefficient 0.8; beta_1 = 2,
/// beta_2 = +-2 on t in [41, 80] / [121, 160], beta_3 a scaled random walk
/// up to t = 100 and zero after, every other path zero.
inline Dataset simulate_tvp(std::size_t T, std::size_t p, double rsnr, PredictorMode mode,
                            std::uint64_t seed) {
  if (T < 1 || p < 1) throw PreconditionError("simulate_tvp: T and p must be positive");
  RngStream rng(seed, 0);
  Dataset d;
  d.p = p;
  d.x.assign(T * p, 0.0);
  for (std::size_t t = 0; t < T; ++t) d.x[t * p] = 1.0;
  const double ar = 0.8;
  const double innov_sd = std::sqrt(1.0 - ar * ar);
  for (std::size_t j = 1; j < p; ++j) {
    double prev = rng.normal();
    for (std::size_t t = 0; t < T; ++t) {
      double v;
      if (mode == PredictorMode::iid) {
        v = rng.normal();
      } else {
        v = t == 0 ? prev : ar * prev + innov_sd * rng.normal();
        prev = v;
      }
      d.x[t * p + j] = v;
    }
  }
  d.beta_truth.assign(p * T, 0.0);
  for (std::size_t t = 0; t < T; ++t) d.beta_truth[t] = 2.0;
  if (p >= 2) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t tt = t + 1;
      if (tt >= 41 && tt <= 80) d.beta_truth[T + t] = 2.0;
      if (tt >= 121 && tt <= 160) d.beta_truth[T + t] = -2.0;
    }
  }
  if (p >= 3) {
    double walk = 0.0;
    for (std::size_t t = 0; t < T && t < 100; ++t) {
      walk += rng.normal() / std::sqrt(100.0);
      d.beta_truth[2 * T + t] = walk;
    }
  }
  d.truth.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < p; ++j) d.truth[t] += d.x[t * p + j] * d.beta_truth[j * T + t];
  }
  d.noise_sd = rsnr_noise_sd(d.truth, rsnr);
  d.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) d.y[t] = d.truth[t] + d.noise_sd * rng.normal();
  d.time.resize(T);
  for (std::size_t t = 0; t < T; ++t) d.time[t] = static_cast<double>(t + 1);
  d.missing.assign(T, 0);
  std::ostringstream os;
  os << "simulate_tvp T=" << T << " p=" << p << " rsnr=" << rsnr
     << " predictors=" << (mode == PredictorMode::iid ? "iid" : "ar0.8") << " seed=" << seed;
  d.provenance = os.str();
  return d;
}

// ---------------------------------------------------------------------------
// CSV.

inline constexpr double kGridTolerance = 1e-9;
inline constexpr std::size_t kGridExpansionCap = 50;

/// Tolerant gcd of positive gaps: Euclid's algorithm where remainders within
/// tol * max gap of zero (or of the divisor) count as zero.
inline double gap_gcd(std::span<const double> gaps, double rel_tol = kGridTolerance) {
  if (gaps.empty()) throw PreconditionError("gap_gcd: no gaps");
  const double scale = *std::max_element(gaps.begin(), gaps.end());
  const double tol = rel_tol * scale;
  auto fgcd = [tol](double a, double b) {
    if (a < b) std::swap(a, b);
    while (b > tol) {
      double r = std::fmod(a, b);
      if (r > b - tol) r = 0.0;
      a = b;
      b = r;
    }
    return a;
  };
  double g = gaps[0];
  for (std::size_t i = 1; i < gaps.size(); ++i) g = fgcd(g, gaps[i]);
  return g;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(v);
}

}  // namespace detail

/// Reads `time,y[,x1..xp]` with a header row. An empty y cell is missing.
/// Times need not be equally spaced: they are placed on the grid whose step
/// is the tolerant gcd of successive gaps, and grid points without a row are
/// marked missing. Rows created by expansion have no predictor values, so
/// expansion is refused when predictor columns are present.
inline Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path + ": empty file");
  const auto header = detail::split_csv(line);
  if (header.size() < 2) throw DomainError(path + ": header must start with time,y");
  const std::size_t p = header.size() - 2;

  std::vector<double> times, ys, xs;
  std::vector<std::uint8_t> miss;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (cells.size() != header.size()) {
      throw DomainError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(cells.size()));
    }
    double t;
    if (!detail::parse_double(cells[0], t)) throw DomainError(where + "unparseable time '" + std::string(cells[0]) + "'");
    if (!times.empty()) {
      if (t == times.back()) throw DomainError(where + "duplicate time " + std::string(cells[0]));
      if (t < times.back()) throw DomainError(where + "times must be increasing");
    }
    double v = std::numeric_limits<double>::quiet_NaN();
    const bool absent = cells[1].empty() || cells[1] == "NA" || cells[1] == "nan" || cells[1] == "NaN";
    if (!absent && !detail::parse_double(cells[1], v)) {
      throw DomainError(where + "unparseable value '" + std::string(cells[1]) + "'");
    }
    for (std::size_t j = 0; j < p; ++j) {
      double xv;
      if (!detail::parse_double(cells[2 + j], xv)) {
        throw DomainError(where + "unparseable predictor '" + std::string(cells[2 + j]) + "'");
      }
      xs.push_back(xv);
    }
    times.push_back(t);
    ys.push_back(absent ? std::numeric_limits<double>::quiet_NaN() : v);
    miss.push_back(absent ? 1 : 0);
  }
  if (times.empty()) throw DomainError(path + ": no data rows");

  Dataset d;
  d.p = p;
  d.provenance = "csv " + path;
  const std::size_t n = times.size();
  if (n == 1) {
    d.time = times;
    d.y = ys;
    d.missing = miss;
    d.x = xs;
    return d;
  }
  std::vector<double> gaps(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) gaps[i] = times[i + 1] - times[i];
  const double step = gap_gcd(gaps);
  const double span = times.back() - times.front();
  const double cells_f = std::round(span / step) + 1.0;
  if (cells_f > static_cast<double>(kGridExpansionCap * n)) {
    throw DomainError(path + ": grid step " + std::to_string(step) + " would expand " + std::to_string(n) +
                      " rows to " + std::to_string(static_cast<long long>(cells_f)) +
                      " points (cap 50x); round the time column to a coarser resolution");
  }
  const auto T = static_cast<std::size_t>(cells_f);
  if (T == n) {
    d.time = times;
    d.y = ys;
    d.missing = miss;
    d.x = xs;
    return d;
  }
  if (p > 0) {
    throw DomainError(path + ": unequally spaced times with predictor columns; grid points created by "
                      "expansion would lack predictor values");
  }
  d.time.resize(T);
  for (std::size_t k = 0; k < T; ++k) d.time[k] = times.front() + static_cast<double>(k) * step;
  d.y.assign(T, std::numeric_limits<double>::quiet_NaN());
  d.missing.assign(T, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (times[i] - times.front()) / step;
    const auto k = static_cast<std::size_t>(std::llround(pos));
    if (std::fabs(pos - static_cast<double>(k)) > 1e-6 || k >= T) {
      throw DomainError(path + ": time " + std::to_string(times[i]) + " is off the inferred grid");
    }
    d.time[k] = times[i];
    d.y[k] = ys[i];
    d.missing[k] = miss[i];
  }
  return d;
}

/// Writes the dataset in the ingest schema; missing y cells are left empty.
inline void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PreconditionError("cannot write " + path);
  out.precision(17);
  out << "time,y";
  for (std::size_t j = 0; j < d.p; ++j) out << ",x" << (j + 1);
  out << '\n';
  for (std::size_t t = 0; t < d.size(); ++t) {
    out << d.time[t] << ',';
    if (!d.missing[t]) out << d.y[t];
    for (std::size_t j = 0; j < d.p; ++j) out << ',' << d.x[t * d.p + j];
    out << '\n';
  }
}

}  // namespace dsp
