// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include "dsp/dsp.hpp"
#include "support/dense_oracle.hpp"
#include "support/horseshoe_oracle.hpp"
#include "support/stat_tests.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace dsp;
using dsp::testing::chi_square;
using dsp::testing::ks_one_sample;
using dsp::testing::ks_two_sample;
using dsp::testing::max_rel_diff;
using dsp::testing::to_dense;
using dsp::testing::to_eigen;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) { return dsp::testing::median(std::move(v)); }

double beta_half_cdf(double k) { return 2.0 / std::numbers::pi * std::asin(std::sqrt(k)); }

std::vector<double> kappas(const std::vector<double>& h) {
  std::vector<double> k(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) k[t] = shrinkage_kappa(h[t]);
  return k;
}

double tail_mass(const std::vector<double>& k) {
  double n = 0.0;
  for (double v : k) n += (v <= 0.05 || v >= 0.95) ? 1.0 : 0.0;
  return n / static_cast<double>(k.size());
}

// ---------------------------------------------------------------------------

void three_routes(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double min_p = 1.0;
  for (auto [al, be] : {std::pair{0.5, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 1.0}}) {
    RngStream rng(1000 + static_cast<std::uint64_t>(10 * (al + be)));
    const std::size_t n = 100000;
    std::vector<double> direct(n), via_kappa(n), via_z(n);
    for (auto& v : direct) v = sample_inverted_beta(be, al, rng);
    for (auto& v : via_kappa) {
      const double k = rng.beta(be, al);
      v = (1.0 - k) / k;
    }
    for (auto& v : via_z) v = std::exp(sample_z(ZParams{al, be, 0.0, 1.0}, rng));
    for (double p : {ks_two_sample(direct, via_kappa).p_value, ks_two_sample(direct, via_z).p_value,
                     ks_two_sample(via_kappa, via_z).p_value}) {
      min_p = std::min(min_p, p);
    }
  }
  const double s = seconds_since(t0);
  o.detail << "min KS p = " << min_p << " over 9 route pairs, " << s << " s";
  o.require(min_p > 0.01, "KS p > 0.01");
  o.require(s < 10.0, "runtime < 10 s");
}

void pg_mixture(Outcome& o) {
  double min_p = 1.0, min_exact = 1.0;
  for (auto [al, be] : {std::pair{0.5, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 1.0}}) {
    RngStream rng(2200 + static_cast<std::uint64_t>(10 * (al + be)));
    const ZParams p{al, be, 0.0, 1.0};
    std::vector<double> mix(100000), direct(100000);
    for (auto& v : mix) v = sample_z_mixture(p, rng);
    for (auto& v : direct) {
      const double k = rng.beta(be, al);
      v = std::log((1.0 - k) / k);
    }
    min_p = std::min(min_p, ks_two_sample(mix, direct).p_value);
    // larger sample against the exact CDF: logistic(eta) ~ Beta(alpha, beta)
    std::vector<double> big(1000000);
    for (auto& v : big) v = sample_z_mixture(p, rng);
    const auto cdf = [&](double e) { return boost::math::ibeta(al, be, 1.0 / (1.0 + std::exp(-e))); };
    min_exact = std::min(min_exact, ks_one_sample(big, cdf).p_value);
  }
  RngStream rng(2100);
  const std::size_t n = 1000000;
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) m0 += sample_pg(1.0, 0.0, rng);
  for (std::size_t i = 0; i < n; ++i) m2 += sample_pg(1.0, 2.0, rng);
  m0 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  // The unconditional PG(alpha + beta, 0) scale mixture is a different law:
  // its variance E[1/xi] is about 7.4 rather than pi^2.
  std::vector<double> literal(200000);
  for (auto& v : literal) v = rng.normal() / std::sqrt(sample_pg(1.0, 0.0, rng));
  o.detail << "min KS p = " << min_p << " (N = 1e5 vs Beta transform), " << min_exact
           << " (N = 1e6 vs exact CDF), E[PG(1,0)] = " << m0 << ", E[PG(1,2)] = " << m2
           << " (target " << std::tanh(1.0) / 4.0 << "); unconditional PG(1,0) mixture variance "
           << dsp::testing::variance(literal) << " vs pi^2";
  o.require(min_p > 0.01, "KS p > 0.01");
  o.require(min_exact > 0.01, "exact-CDF KS p > 0.01");
  o.require(std::fabs(m0 - 0.25) <= 0.002, "E[PG(1,0)]");
  o.require(std::fabs(m2 - std::tanh(1.0) / 4.0) <= 0.002, "E[PG(1,2)]");
}

void tpb_conditional(Outcome& o) {
  double min_p = 1.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (double phi : {0.5, 0.9}) {
    for (double kt : {0.01, 0.5}) {
      const double ht = std::log((1.0 - kt) / kt);  // tau = 1
      const double gamma = std::exp(phi * ht);      // tau^2 lambda_t^{2 phi}
      RngStream rng(3000 + static_cast<std::uint64_t>(100 * phi + 1000 * kt));
      const int bins = 40;
      const std::size_t n = 100000;
      std::vector<double> obs(bins, 0.0), expected(bins);
      for (std::size_t i = 0; i < n; ++i) {
        const double h1 = phi * ht + sample_z(ZParams{}, rng);  // one step from h_t, mu = 0
        obs[std::min(bins - 1, static_cast<int>(shrinkage_kappa(h1) * bins))] += 1.0;
      }
      for (int b = 0; b < bins; ++b) {
        expected[b] = static_cast<double>(n) *
                      integrator.integrate([&](double k) { return tpb_density(k, TpbParams{0.5, 0.5, gamma}); },
                                           static_cast<double>(b) / bins, static_cast<double>(b + 1) / bins);
      }
      min_p = std::min(min_p, chi_square(obs, expected).p_value);
    }
  }
  o.detail << "min chi-square p = " << min_p << " over 4 (phi, kappa_t) cells";
  o.require(min_p > 0.01, "chi-square p > 0.01");
}

void concentration(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(4000);
  const double ht = std::log((1.0 - 1e-4) / 1e-4);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += shrinkage_kappa(0.9 * ht + sample_z(ZParams{}, rng)) < 0.1;
  const double p_sim = hits / static_cast<double>(n);

  const double y = 20.0, g = 0.5;
  auto via_tpb = [&](double k) { return tpb_density(k, TpbParams{0.5, 0.5, g}) * std::sqrt(k) * std::exp(-y * y * k / 2.0); };
  auto printed = [&](double k) { return std::pow(1.0 - k, -0.5) / (1.0 + (g - 1.0) * k) * std::exp(-y * y * k / 2.0); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  boost::math::quadrature::tanh_sinh<double> ts;
  auto mass_below = [&](const std::function<double(double)>& f) {
    const double below = GK::integrate(f, 0.0, 0.1, 15, 1e-13);
    return below / (below + ts.integrate(f, 0.1, 1.0));
  };
  const double pa = mass_below(via_tpb), pb = mass_below(printed);
  const double s = seconds_since(t0);
  o.detail << "P(kappa_{t+1} < 0.1 | kappa_t = 1e-4) = " << p_sim << "; posterior mass below 0.1 at |y| = 20: "
           << pa << " / " << pb << " (two routes), " << s << " s";
  o.require(p_sim > 0.95, "simulated concentration > 0.95");
  o.require(pa > 0.95 && pb > 0.95, "posterior mass > 0.95");
  o.require(std::fabs(pa - pb) < 1e-9, "quadrature routes agree");
  o.require(s < 30.0, "runtime < 30 s");
}

void stationary_shape(Outcome& o) {
  RngStream rng(5000);
  const auto k0 = kappas(forward_simulate(DspParams{0.0, 0.0}, 100000, rng));
  const double p = ks_one_sample(k0, beta_half_cdf).p_value;
  const auto a = kappas(forward_simulate(DspParams{0.0, 0.0}, 1000000, rng));
  const auto b = kappas(forward_simulate(DspParams{0.0, 0.95}, 1000000, rng));
  const double ta = tail_mass(a), tb = tail_mass(b);
  o.detail << "phi = 0 vs Beta(1/2,1/2) KS p = " << p << "; mass in kappa <= 0.05 or >= 0.95: " << ta
           << " (phi = 0), " << tb << " (phi = 0.95)";
  o.require(p > 0.01, "KS p > 0.01");
  o.require(tb > ta, "tail-mass dominance");
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd factor_dense(const BandedCholesky& l) {
  const auto n = static_cast<Eigen::Index>(l.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = l.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return m;
}

double vec_rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

void banded_oracles(Outcome& o) {
  RngStream rng(6000);
  double worst = 0.0;
  std::size_t cases = 0;
  auto rnd = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  auto check_factor = [&](const BandedPrecision& q) {
    const Eigen::MatrixXd dq = to_dense(q);
    const Eigen::MatrixXd ref = Eigen::LLT<Eigen::MatrixXd>(dq).matrixL();
    const auto l = cholesky_banded(q);
    worst = std::max(worst, max_rel_diff(factor_dense(l), ref));
    const auto ell = rnd(q.dim());
    const auto e = rnd(q.dim());
    const Eigen::VectorXd mean = dq.llt().solve(to_eigen(ell));
    worst = std::max(worst, vec_rel_diff(to_eigen(solve_banded(l, ell)), mean));
    // x = Q^{-1} ell + L^{-T} e
    const Eigen::VectorXd draw = mean + ref.transpose().triangularView<Eigen::Upper>().solve(to_eigen(e));
    worst = std::max(worst, vec_rel_diff(to_eigen(sample_from_factor(l, ell, e)), draw));
    ++cases;
  };

  // random SPD band matrices
  for (std::size_t n = 2; n <= 10; ++n) {
    for (std::size_t k = 0; k < n && k <= 6; ++k) {
      BandedPrecision q(n, k);
      for (std::size_t j = 1; j <= k; ++j) {
        for (auto& v : q.band(j)) v = 2.0 * rng.uniform() - 1.0;
      }
      for (auto& v : q.diagonal()) v = 2.0 * static_cast<double>(k) + 0.5 + rng.uniform();
      check_factor(q);
    }
  }
  // difference and autoregressive builders
  for (std::size_t T = 3; T <= 10; ++T) {
    std::vector<double> obs(T), w(T);
    for (auto& v : obs) v = 0.2 + 2.0 * rng.uniform();
    for (auto& v : w) v = 0.05 + 5.0 * rng.uniform();
    obs[T / 2] = 0.0;
    for (int order : {1, 2}) {
      const auto q = build_difference_precision(order, obs, w);
      const Eigen::MatrixXd d = dsp::testing::difference_matrix(order, T);
      const Eigen::MatrixXd ref = Eigen::MatrixXd(to_eigen(obs).asDiagonal()) + d.transpose() * to_eigen(w).asDiagonal() * d;
      worst = std::max(worst, max_rel_diff(to_dense(q), ref));
      check_factor(q);
    }
    const double phi = 0.9 * (2.0 * rng.uniform() - 1.0);
    const auto q = build_difference_precision(1, obs, w, phi);
    const Eigen::MatrixXd a = dsp::testing::ar_matrix(phi, T);
    const Eigen::MatrixXd ref = Eigen::MatrixXd(to_eigen(obs).asDiagonal()) + a.transpose() * to_eigen(w).asDiagonal() * a;
    worst = std::max(worst, max_rel_diff(to_dense(q), ref));
    check_factor(q);
  }
  // stacked regression precision: X' S X + (Dop kron I_p)' W (Dop kron I_p)
  for (std::size_t T = 3; T <= 10; ++T) {
    for (std::size_t p = 1; p <= 3; ++p) {
      for (int order : {1, 2}) {
        std::vector<double> x(T * p), obs(T), w(T * p), y(T);
        for (auto& v : x) v = rng.normal();
        for (auto& v : obs) v = 0.5 + rng.uniform();
        for (auto& v : w) v = 0.1 + 3.0 * rng.uniform();
        for (auto& v : y) v = rng.normal();
        const auto q = build_regression_precision(order, p, x, obs, w);
        const auto n = static_cast<Eigen::Index>(T * p);
        const auto pi = static_cast<Eigen::Index>(p);
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), n);
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t * p + j)) = x[t * p + j];
        }
        const Eigen::MatrixXd dt = dsp::testing::difference_matrix(order, T);
        Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index a = 0; a < dt.rows(); ++a) {
          for (Eigen::Index b = 0; b < dt.cols(); ++b) {
            for (Eigen::Index j = 0; j < pi; ++j) dk(a * pi + j, b * pi + j) = dt(a, b);
          }
        }
        Eigen::VectorXd ws(n);
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t j = 0; j < p; ++j) ws(static_cast<Eigen::Index>(t * p + j)) = w[j * T + t];
        }
        const Eigen::MatrixXd ref = X.transpose() * to_eigen(obs).asDiagonal() * X + dk.transpose() * ws.asDiagonal() * dk;
        worst = std::max(worst, max_rel_diff(to_dense(q), ref));
        const Eigen::VectorXd lref = X.transpose() * to_eigen(obs).asDiagonal() * to_eigen(y);
        worst = std::max(worst, vec_rel_diff(to_eigen(regression_linear_term(p, x, obs, y)), lref));
        check_factor(q);
      }
    }
  }
  o.detail << cases << " factorisations plus builders, worst relative error " << worst;
  o.require(worst < 1e-9, "relative error < 1e-9");
}

// ---------------------------------------------------------------------------

FitRequest study_request(PriorFamily prior, std::uint64_t seed) {
  FitRequest req;
  req.prior = prior;
  req.config.n_iter = 10000;
  req.config.burn = 5000;
  req.config.thin = 5;
  req.config.seed = seed;
  return req;
}

void trend_study(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 20;
  const PriorFamily priors[] = {PriorFamily::dhs, PriorFamily::hs, PriorFamily::nig};
  for (const std::string fn : {"bumps", "blocks"}) {
    std::vector<double> rmse[3], width[3], cover[3];
    for (int r = 0; r < reps; ++r) {
      const auto data = simulate_donoho(fn, 128, 7.0, 7000 + static_cast<std::uint64_t>(r));
      for (int k = 0; k < 3; ++k) {
        const auto req = study_request(priors[k], 7100 + static_cast<std::uint64_t>(r));
        const auto chains = fit_dataset(data, req);
        const auto m = *summarize_fit(chains.front(), data, 0.95).metrics;
        rmse[k].push_back(m.rmse);
        width[k].push_back(m.mciw);
        cover[k].push_back(m.coverage);
      }
    }
    int dhs_beats_nig = 0, narrower = 0;
    for (int r = 0; r < reps; ++r) {
      dhs_beats_nig += rmse[0][r] < rmse[2][r];
      narrower += width[0][r] <= width[1][r];
    }
    const double cov = dsp::testing::mean(cover[0]);
    o.detail << fn << ": median RMSE dhs/hs/nig " << median(rmse[0]) << "/" << median(rmse[1]) << "/"
             << median(rmse[2]) << ", dhs < nig in " << dhs_beats_nig << "/" << reps << ", MCIW dhs <= hs in "
             << narrower << "/" << reps << ", dhs coverage " << cov << "; ";
    if (fn == "bumps") {
      o.require(median(rmse[0]) < median(rmse[1]) && median(rmse[1]) < median(rmse[2]),
                "bumps median RMSE dhs < hs < nig");
    } else {
      o.require(dhs_beats_nig >= 16, "blocks RMSE dhs < nig in >= 80%");
    }
    o.require(narrower >= 15, fn + " MCIW dhs <= hs in >= 75%");
    o.require(cov >= 0.85, fn + " coverage >= 0.85");
  }
  o.detail << seconds_since(t0) << " s";
}

void regression_study(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 20;
  const PriorFamily priors[] = {PriorFamily::dhs, PriorFamily::hs, PriorFamily::nig};
  std::vector<double> rb[3], ry[3];
  double per_fit = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto data = simulate_tvp(200, 20, 3.0, PredictorMode::iid, 8000 + static_cast<std::uint64_t>(r));
    for (int k = 0; k < 3; ++k) {
      auto req = study_request(priors[k], 8100 + static_cast<std::uint64_t>(r));
      req.model = ModelKind::tvp;
      req.D = 1;
      const auto chains = fit_dataset(data, req);
      if (k == 0) per_fit += chains.front().seconds;
      const auto m = *summarize_fit(chains.front(), data, 0.95).metrics;
      rb[k].push_back(m.rmse_beta);
      ry[k].push_back(m.rmse);
    }
  }
  o.detail << "median RMSE(beta) dhs/hs/nig " << median(rb[0]) << "/" << median(rb[1]) << "/" << median(rb[2])
           << ", median RMSE(y) " << median(ry[0]) << "/" << median(ry[1]) << "/" << median(ry[2])
           << ", dhs " << per_fit / reps << " s per 10^4-iteration fit, " << seconds_since(t0) << " s";
  o.require(median(rb[0]) < median(rb[1]) && median(rb[0]) < median(rb[2]), "RMSE(beta) ordering");
  o.require(median(ry[0]) < median(ry[1]) && median(ry[0]) < median(ry[2]), "RMSE(y) ordering");
}

void linear_scaling(Outcome& o) {
  const std::vector<std::size_t> Ts{1000, 10000, 100000};
  std::vector<double> xs, ys;
  for (std::size_t T : Ts) {
    double best = 1e300;
    for (int r = 0; r < 3; ++r) best = std::min(best, bench_once(T, 50, 9000).seconds);
    xs.push_back(static_cast<double>(T));
    ys.push_back(best);
  }
  const double slope = loglog_slope(xs, ys);
  o.detail << "seconds per 1000 iterations at T = 1e3/1e4/1e5: " << 20.0 * ys[0] << "/" << 20.0 * ys[1] << "/"
           << 20.0 * ys[2] << ", log-log slope " << slope;
  o.require(slope >= 0.8 && slope <= 1.3, "slope in [0.8, 1.3]");
}

std::uint8_t draw_component(RngStream& rng, const OmoriTable& tab) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < OmoriTable::size; ++i) {
    if (u < tab.prob[i]) return static_cast<std::uint8_t>(i);
    u -= tab.prob[i];
  }
  return OmoriTable::size - 1;
}

void gibbs_invariance(Outcome& o) {
  const std::size_t T = 50;
  const int sweeps = 20000;
  const DspParams par{-1.0, 0.7};
  const auto& tab = omori_table();
  RngStream rng(10000);
  std::vector<double> prior(20000);
  for (auto& v : prior) v = dsp::testing::mean(kappas(forward_simulate(par, T, rng)));
  const double prior_mean = dsp::testing::mean(prior);
  const double prior_se = std::sqrt(dsp::testing::variance(prior) / static_cast<double>(prior.size()));

  DspState st;
  st.mu = par.mu;
  st.phi = par.phi;
  st.h = forward_simulate(par, T, rng);
  st.xi.resize(T);
  st.s.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    st.xi[t] = sample_pg(1.0, innovation(st, t), rng);
    st.s[t] = draw_component(rng, tab);
  }
  std::vector<double> y(T), kbar(sweeps);
  for (int i = 0; i < sweeps; ++i) {
    for (std::size_t t = 0; t < T; ++t) y[t] = st.h[t] + tab.mean[st.s[t]] + std::sqrt(tab.var[st.s[t]]) * rng.normal();
    update_s(st, y, tab, rng);
    update_h(st, y, tab, rng);
    for (std::size_t t = 0; t < T; ++t) st.xi[t] = sample_pg(1.0, innovation(st, t), rng);
    kbar[i] = dsp::testing::mean(kappas(st.h));
  }
  const std::span<const double> all(kbar);
  const auto first = all.subspan(0, sweeps / 2), last = all.subspan(sweeps / 2);
  const double d_halves = std::fabs(dsp::testing::mean(first) - dsp::testing::mean(last));
  const double se_halves = std::hypot(dsp::testing::batch_means_se(first), dsp::testing::batch_means_se(last));
  const double d_prior = std::fabs(dsp::testing::mean(all) - prior_mean);
  const double se_prior = std::hypot(dsp::testing::batch_means_se(all), prior_se);
  o.detail << "mean kappa: chain " << dsp::testing::mean(all) << ", prior " << prior_mean << " (" << d_prior / se_prior
           << " SE); halves differ by " << d_halves / se_halves << " SE";
  o.require(d_prior < 3.0 * se_prior, "chain vs prior within 3 SE");
  o.require(d_halves < 3.0 * se_halves, "halves within 3 SE");
}

void reductions(Outcome& o) {
  RngStream data(11000);
  std::vector<double> y(50);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = (t < 25 ? 0.0 : 3.0) + 0.3 * data.normal();
  const std::vector<double> ones(y.size(), 1.0);
  McmcConfig cfg;
  cfg.n_iter = 600;
  cfg.burn = 100;
  cfg.thin = 2;
  cfg.seed = 11001;
  bool identical = true;
  for (int D : {1, 2}) {
    for (auto prior : {PriorFamily::dhs, PriorFamily::hs, PriorFamily::nig}) {
      for (auto obs : {ObsError::constant, ObsError::stochastic_volatility}) {
        BtfModelSpec b;
        b.D = D;
        b.prior = prior;
        b.obs_error = obs;
        TvpModelSpec v;
        v.D = D;
        v.prior = prior;
        v.obs_error = obs;
        // automatic resolves to unit for trend-filtering HS; match it explicitly
        v.tau_scale = prior == PriorFamily::hs ? TauScale::unit : TauScale::automatic;
        const auto a = fit_btf(y, {}, b, cfg);
        const auto c = fit_tvp(y, ones, {}, v, cfg);
        identical = identical && a.beta == c.beta && a.h == c.h && a.sigma == c.sigma && a.phi == c.phi &&
                    a.mu == c.mu && a.mu0 == c.mu0;
      }
    }
  }

  // DHS with phi pinned at 0 against an independent inverse-Gamma horseshoe sampler
  RngStream d2(11002);
  std::vector<double> z(16);
  for (std::size_t t = 0; t < z.size(); ++t) z[t] = (t < 8 ? 0.0 : 3.0) + 0.4 * d2.normal();
  BtfModelSpec spec;
  spec.fixed_phi = 0.0;
  spec.tau_scale = TauScale::scaled;
  McmcConfig long_cfg;
  long_cfg.n_iter = 202000;
  long_cfg.burn = 2000;
  long_cfg.thin = 200;
  long_cfg.seed = 11003;
  const auto d = fit_btf(z, {}, spec, long_cfg);
  RngStream orng(11004);
  const auto ref = dsp::testing::horseshoe_oracle(z, 2, 202000, 2000, 200, orng, true);
  const std::size_t T = z.size();
  double min_p = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> a(d.retained), b(ref.sigma.size());
    for (std::size_t i = 0; i < d.retained; ++i) a[i] = std::exp(0.5 * d.h_at(i, 0, t));
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::exp(ref.log_scale[i * T + t]);
    min_p = std::min(min_p, ks_two_sample(a, b).p_value);
  }
  o.detail << "TVP(p = 1, x = 1) vs BTF over 12 configurations: " << (identical ? "bit-identical" : "DIFFERENT")
           << "; DHS(phi = 0) vs horseshoe reference, tau lambda_t at all " << T << " points: min KS p = " << min_p;
  o.require(identical, "bit-identical reduction");
  o.require(min_p > 0.01, "KS p > 0.01");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "three-route Z / inverted-Beta / Beta equivalence", three_routes},
      {2, "Polya-Gamma mixture for Z and PG moments", pg_mixture},
      {3, "one-step conditional law is TPB", tpb_conditional},
      {4, "concentration and robustness probabilities", concentration},
      {5, "stationary shrinkage shape", stationary_shape},
      {6, "banded solvers and precision builders vs dense", banded_oracles},
      {7, "trend filtering study (blocks, bumps)", trend_study},
      {8, "time-varying regression study", regression_study},
      {9, "linear runtime scaling", linear_scaling},
      {10, "Gibbs invariance", gibbs_invariance},
      {11, "reduction checks", reductions},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
