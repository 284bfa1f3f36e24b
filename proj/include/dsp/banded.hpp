#pragma once

// Symmetric positive-definite banded matrices: storage, Cholesky
// factorisation, triangular solves and joint Gaussian draws. Every operation
// is O(dim * bandwidth^2).

#include "dsp/error.hpp"
#include "dsp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsp {

/// Symmetric banded matrix stored as its lower bands: band(j)[r] holds the
/// entry at (r + j, r). Only the lower triangle exists, so the represented
/// matrix is symmetric by construction.
class BandedPrecision {
public:
  BandedPrecision() = default;

  BandedPrecision(std::size_t dim, std::size_t bandwidth) : dim_(dim), bandwidth_(bandwidth) {
    if (dim == 0) throw PreconditionError("BandedPrecision: dim must be positive");
    if (bandwidth > dim - 1) throw PreconditionError("BandedPrecision: bandwidth exceeds dim - 1");
    bands_.resize(bandwidth + 1);
    for (std::size_t j = 0; j <= bandwidth; ++j) bands_[j].assign(dim - j, 0.0);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t bandwidth() const noexcept { return bandwidth_; }

  std::span<double> band(std::size_t j) { return bands_.at(j); }
  std::span<const double> band(std::size_t j) const { return bands_.at(j); }
  std::span<double> diagonal() { return bands_[0]; }
  std::span<const double> diagonal() const { return bands_[0]; }

  /// Entry (i, j) of the full symmetric matrix; zero outside the band.
  double at(std::size_t i, std::size_t j) const {
    if (i < j) std::swap(i, j);
    const std::size_t off = i - j;
    return off > bandwidth_ ? 0.0 : bands_[off][j];
  }

  /// Adds `value` to entry (i, j) with i >= j, j >= i - bandwidth.
  void add_lower(std::size_t i, std::size_t j, double value) { bands_[i - j][j] += value; }

  double max_diagonal() const { return *std::max_element(bands_[0].begin(), bands_[0].end()); }

private:
  std::size_t dim_ = 0;
  std::size_t bandwidth_ = 0;
  std::vector<std::vector<double>> bands_;
};

/// Lower Cholesky factor L with Q = L L', same bandwidth as Q. Stored row by
/// row: row i holds L(i, i), L(i, i - 1), ..., L(i, i - bandwidth).
class BandedCholesky {
public:
  BandedCholesky(std::size_t dim, std::size_t bandwidth)
      : dim_(dim), bandwidth_(bandwidth), rows_(dim * (bandwidth + 1), 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t bandwidth() const noexcept { return bandwidth_; }

  /// L(i, j) for i >= j; zero outside the band.
  double at(std::size_t i, std::size_t j) const {
    if (j > i || i - j > bandwidth_) return 0.0;
    return rows_[i * (bandwidth_ + 1) + (i - j)];
  }

  double& ref(std::size_t i, std::size_t offset) { return rows_[i * (bandwidth_ + 1) + offset]; }
  double ref(std::size_t i, std::size_t offset) const {
    return rows_[i * (bandwidth_ + 1) + offset];
  }

private:
  std::size_t dim_;
  std::size_t bandwidth_;
  std::vector<double> rows_;
};

/// Banded Cholesky factorisation. Throws NotPositiveDefinite with the index
/// of the first non-positive pivot.
inline BandedCholesky cholesky_banded(const BandedPrecision& q) {
  const std::size_t n = q.dim();
  const std::size_t k = q.bandwidth();
  BandedCholesky l(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = i > k ? i - k : 0;
    for (std::size_t j = first; j <= i; ++j) {
      double s = q.band(i - j)[j];
      const double* li = &l.ref(i, 0);
      const double* lj = &l.ref(j, 0);
      for (std::size_t m = first; m < j; ++m) s -= li[i - m] * lj[j - m];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) throw NotPositiveDefinite(i, s);
        l.ref(i, 0) = std::sqrt(s);
      } else {
        l.ref(i, i - j) = s / lj[0];
      }
    }
  }
  return l;
}

/// Solves L a = b in place.
inline void forward_substitute(const BandedCholesky& l, std::span<double> b) {
  const std::size_t n = l.dim();
  const std::size_t k = l.bandwidth();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = i > k ? i - k : 0;
    double s = b[i];
    for (std::size_t m = first; m < i; ++m) s -= l.ref(i, i - m) * b[m];
    b[i] = s / l.ref(i, 0);
  }
}

/// Solves L' x = b in place.
inline void back_substitute(const BandedCholesky& l, std::span<double> b) {
  const std::size_t n = l.dim();
  const std::size_t k = l.bandwidth();
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t last = std::min(n - 1, ii + k);
    double s = b[ii];
    for (std::size_t r = ii + 1; r <= last; ++r) s -= l.ref(r, r - ii) * b[r];
    b[ii] = s / l.ref(ii, 0);
  }
}

/// Q^{-1} rhs given the factor of Q.
inline std::vector<double> solve_banded(const BandedCholesky& l, std::span<const double> rhs) {
  if (rhs.size() != l.dim()) throw PreconditionError("solve_banded: dimension mismatch");
  std::vector<double> x(rhs.begin(), rhs.end());
  forward_substitute(l, x);
  back_substitute(l, x);
  return x;
}

/// Draw from N(Q^{-1} linear, Q^{-1}) given the factor of Q and a standard
/// normal vector `noise`: solve L a = linear, then L' x = a + noise.
inline std::vector<double> sample_from_factor(const BandedCholesky& l,
                                              std::span<const double> linear,
                                              std::span<const double> noise) {
  if (linear.size() != l.dim() || noise.size() != l.dim()) {
    throw PreconditionError("sample_from_factor: dimension mismatch");
  }
  std::vector<double> x(linear.begin(), linear.end());
  forward_substitute(l, x);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  back_substitute(l, x);
  return x;
}

enum class NoiseMode {
  sample,  ///< e ~ N(0, I): an exact draw
  zero,    ///< e = 0: returns the mean Q^{-1} linear
};

/// Joint Gaussian draw from N(Q^{-1} linear, Q^{-1}).
inline std::vector<double> sample_banded_gaussian(const BandedPrecision& q,
                                                  std::span<const double> linear, RngStream& rng,
                                                  NoiseMode mode = NoiseMode::sample) {
  if (linear.size() != q.dim()) throw PreconditionError("sample_banded_gaussian: dimension mismatch");
  const BandedCholesky l = cholesky_banded(q);
  std::vector<double> noise(q.dim(), 0.0);
  if (mode == NoiseMode::sample) {
    for (double& e : noise) e = rng.normal();
  }
  return sample_from_factor(l, linear, noise);
}

namespace detail {

// Coefficients of one row of the D-th difference operator: binomial with
// alternating signs, e.g. {1, -2, 1} for D = 2.
inline std::vector<double> difference_coefficients(int order) {
  std::vector<double> c{1.0};
  for (int d = 0; d < order; ++d) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i];
    }
    c = std::move(next);
  }
  return c;
}

inline void require_positive(std::span<const double> v, const char* what, bool allow_zero) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
      throw DomainError(std::string(what) + " must be " + (allow_zero ? "non-negative" : "positive") +
                        " and finite");
    }
  }
}

// Adds (Dop' (x) I_p) diag(w) (Dop (x) I_p) to q, where the operator row for
// time t >= order applies `coef` to (t, t-1, ..., t-order) and rows t < order
// are identity rows. w is block-major: w[j * T + t].
inline void add_difference_term(BandedPrecision& q, std::size_t p, std::size_t T, int order,
                                std::span<const double> coef, std::span<const double> w) {
  const std::size_t D = static_cast<std::size_t>(order);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t taps = t < D ? 1 : D + 1;
    for (std::size_t j = 0; j < p; ++j) {
      const double wt = w[j * T + t];
      for (std::size_t d1 = 0; d1 < taps; ++d1) {
        const double a = wt * coef[d1];
        for (std::size_t d2 = d1; d2 < taps; ++d2) {
          // rows (t - d1, j) and (t - d2, j); d1 <= d2 so the first is the lower index.
          q.add_lower((t - d1) * p + j, (t - d2) * p + j, a * coef[d2]);
        }
      }
    }
  }
}

}  // namespace detail

/// Precision of a Gaussian observation layer plus a difference prior:
///   diag(obs_prec) + Dop' diag(innov_prec) Dop.
///
/// Without `phi`, Dop is the order-D difference matrix whose first D rows are
/// identity rows (order 1: tridiagonal; order 2: pentadiagonal). With `phi`,
/// Dop has ones on the diagonal and -phi on the first sub-diagonal, the AR(1)
/// log-volatility precision; `order` must then be 1. obs_prec may contain
/// zeros (unobserved positions); innovation precisions must be positive.
inline BandedPrecision build_difference_precision(int order, std::span<const double> obs_prec,
                                                  std::span<const double> innov_prec,
                                                  std::optional<double> phi = std::nullopt) {
  if (order != 1 && order != 2) throw PreconditionError("difference order must be 1 or 2");
  if (phi && order != 1) throw PreconditionError("AR(1) precision requires order 1");
  const std::size_t T = obs_prec.size();
  if (innov_prec.size() != T) throw PreconditionError("precision vectors must have equal length");
  if (T <= static_cast<std::size_t>(order)) throw PreconditionError("length must exceed the order");
  detail::require_positive(obs_prec, "observation precisions", true);
  detail::require_positive(innov_prec, "innovation precisions", false);
  const std::vector<double> coef =
      phi ? std::vector<double>{1.0, -*phi} : detail::difference_coefficients(order);
  BandedPrecision q(T, static_cast<std::size_t>(order));
  auto diag = q.diagonal();
  for (std::size_t t = 0; t < T; ++t) diag[t] += obs_prec[t];
  detail::add_difference_term(q, 1, T, order, coef, innov_prec);
  return q;
}

/// Stacked precision for time-varying regression with p coefficient paths,
/// ordered (beta_{1,1}, ..., beta_{p,1}, beta_{1,2}, ...):
///   X' diag(obs_prec) X + (Dop' (x) I_p) diag(innov_prec) (Dop (x) I_p),
/// where X = blockdiag(x_1', ..., x_T'). `x` is row-major T x p and
/// innov_prec is block-major (innov_prec[j * T + t]). Bandwidth is order * p.
inline BandedPrecision build_regression_precision(int order, std::size_t p,
                                                  std::span<const double> x,
                                                  std::span<const double> obs_prec,
                                                  std::span<const double> innov_prec) {
  if (order != 1 && order != 2) throw PreconditionError("difference order must be 1 or 2");
  if (p == 0) throw PreconditionError("regression precision needs p >= 1");
  const std::size_t T = obs_prec.size();
  if (x.size() != T * p || innov_prec.size() != T * p) {
    throw PreconditionError("regression precision: inconsistent sizes (T = " + std::to_string(T) +
                            ", p = " + std::to_string(p) + ")");
  }
  if (T <= static_cast<std::size_t>(order)) throw PreconditionError("length must exceed the order");
  detail::require_positive(obs_prec, "observation precisions", true);
  detail::require_positive(innov_prec, "innovation precisions", false);
  const std::vector<double> coef = detail::difference_coefficients(order);
  BandedPrecision q(T * p, static_cast<std::size_t>(order) * p);
  for (std::size_t t = 0; t < T; ++t) {
    const double* xt = &x[t * p];
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k <= j; ++k) {
        q.add_lower(t * p + j, t * p + k, obs_prec[t] * xt[j] * xt[k]);
      }
    }
  }
  detail::add_difference_term(q, p, T, order, coef, innov_prec);
  return q;
}

/// X' diag(obs_prec) y in stacked (t, j) order.
inline std::vector<double> regression_linear_term(std::size_t p, std::span<const double> x,
                                                  std::span<const double> obs_prec,
                                                  std::span<const double> y) {
  const std::size_t T = y.size();
  std::vector<double> ell(T * p);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < p; ++j) ell[t * p + j] = x[t * p + j] * y[t] * obs_prec[t];
  }
  return ell;
}

}  // namespace dsp
