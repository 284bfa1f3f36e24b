#include "dsp/special_dists.hpp"
#include "support/stat_tests.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace dsp;
using dsp::testing::ks_one_sample;
using dsp::testing::ks_two_sample;

namespace {

std::vector<double> pg_draws(double b, double c, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sample_pg(b, c, rng);
  return x;
}

}  // namespace

TEST(PolyaGamma, SeriesMeanAtZeroIsQuarter) {
  // E = sum_k 1 / (2 pi^2 (k - 1/2)^2), summed directly.
  double s = 0.0;
  for (int k = 1; k <= 2000000; ++k) s += 1.0 / (2.0 * std::numbers::pi * std::numbers::pi * (k - 0.5) * (k - 0.5));
  EXPECT_NEAR(s, 0.25, 1e-7);
  EXPECT_DOUBLE_EQ(pg_mean(1.0, 0.0), 0.25);
}

TEST(PolyaGamma, MeanAtZero) {
  const auto x = pg_draws(1.0, 0.0, 1000000, 11);
  EXPECT_NEAR(dsp::testing::mean(x), 0.25, 0.002);
}

TEST(PolyaGamma, MeanAtTwoMatchesTiltedOracle) {
  const auto x = pg_draws(1.0, 2.0, 1000000, 12);
  EXPECT_NEAR(dsp::testing::mean(x), std::tanh(1.0) / 4.0, 0.002);
  // importance-weighted PG(1, 0) draws: E[w exp(-c^2 w / 2)] / E[exp(-c^2 w / 2)]
  const auto base = pg_draws(1.0, 0.0, 1000000, 13);
  double num = 0.0, den = 0.0;
  for (double w : base) {
    const double k = std::exp(-2.0 * w);
    num += w * k;
    den += k;
  }
  EXPECT_NEAR(num / den, std::tanh(1.0) / 4.0, 0.002);
}

TEST(PolyaGamma, SymmetricInC) {
  const auto a = pg_draws(1.0, 2.0, 100000, 21);
  const auto b = pg_draws(1.0, -2.0, 100000, 22);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(PolyaGamma, TiltedMeanIdentity) {
  for (double c : {0.5, 1.0, 2.0, 5.0}) {
    const auto x = pg_draws(1.0, c, 200000, 30 + static_cast<std::uint64_t>(10 * c));
    const double se = std::sqrt(dsp::testing::variance(x) / static_cast<double>(x.size()));
    EXPECT_NEAR(dsp::testing::mean(x), std::tanh(c / 2.0) / (2.0 * c), 4.0 * se) << "c = " << c;
  }
}

TEST(PolyaGamma, GeneralShapeMoments) {
  // PG(b, 0): mean b/4, variance b/24.
  for (double b : {2.0, 2.5, 0.7}) {
    const auto x = pg_draws(b, 0.0, 200000, 40 + static_cast<std::uint64_t>(10 * b));
    EXPECT_NEAR(dsp::testing::mean(x), b / 4.0, 0.005 * b) << "b = " << b;
    EXPECT_NEAR(dsp::testing::variance(x), b / 24.0, 0.03 * b / 24.0 + 1e-3) << "b = " << b;
  }
  const auto x = pg_draws(1.5, 3.0, 200000, 49);
  EXPECT_NEAR(dsp::testing::mean(x), pg_mean(1.5, 3.0), 0.003);
}

TEST(PolyaGamma, IntegerShapeIsSumOfUnitDraws) {
  // PG(2, c) against the sum of two independent PG(1, c) populations.
  const auto a = pg_draws(2.0, 1.3, 50000, 51);
  auto b1 = pg_draws(1.0, 1.3, 50000, 52);
  const auto b2 = pg_draws(1.0, 1.3, 50000, 53);
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += b2[i];
  EXPECT_GT(ks_two_sample(a, b1).p_value, 0.01);
}

TEST(PolyaGamma, RejectsBadShape) {
  RngStream rng(1);
  EXPECT_THROW(sample_pg(0.0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_pg(-1.0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_pg(1.0, std::nan(""), rng), DomainError);
}

TEST(PolyaGamma, DrawsArePositive) {
  for (double x : pg_draws(1.0, 7.0, 10000, 3)) EXPECT_GT(x, 0.0);
}

TEST(ZDistribution, HorseshoeMedianIsZero) {
  RngStream rng(61);
  std::vector<double> z(1000000);
  for (auto& v : z) v = sample_z(ZParams{}, rng);
  EXPECT_NEAR(dsp::testing::median(z), 0.0, 0.01);
}

TEST(ZDistribution, MixtureMatchesDirectRoute) {
  for (auto [al, be] : {std::pair{0.5, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 1.0}, std::pair{1.0, 2.0}}) {
    RngStream rng(65 + static_cast<std::uint64_t>(10 * (al + be)));
    const ZParams p{al, be, 0.3, 1.5};
    std::vector<double> a(100000), b(100000);
    for (auto& v : a) v = sample_z_mixture(p, rng);
    for (auto& v : b) {
      const double k = rng.beta(be, al);  // kappa ~ Beta(beta, alpha), lambda^2 = (1 - kappa) / kappa
      v = p.mu_z + p.sigma_z * std::log((1.0 - k) / k);
    }
    EXPECT_GT(ks_two_sample(a, b).p_value, 0.01) << al << "," << be;
  }
}

TEST(ZDistribution, UnconditionalPgMixingIsNotZ) {
  // xi ~ PG(1, 0), eta | xi ~ N(0, 1/xi) has variance E[1/xi] = 7.36..., not pi^2.
  RngStream rng(66);
  std::vector<double> eta(200000);
  for (auto& v : eta) v = rng.normal() / std::sqrt(sample_pg(1.0, 0.0, rng));
  EXPECT_LT(dsp::testing::variance(eta), 8.0);
}

TEST(ZDistribution, ExpMatchesInvertedBetaFromBeta) {
  RngStream rng(62);
  std::vector<double> a(100000), b(100000);
  for (auto& v : a) v = std::exp(sample_z(ZParams{}, rng));
  for (auto& v : b) {
    const double k = rng.beta(0.5, 0.5);
    v = (1.0 - k) / k;
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(ZDistribution, AsymmetricMeanMatchesQuadrature) {
  const ZParams p{1.0, 2.0, 0.0, 1.0};
  boost::math::quadrature::sinh_sinh<double> integrator;
  const double mass = integrator.integrate([&](double z) { return z_density(z, p); });
  const double m = integrator.integrate([&](double z) { return z * z_density(z, p); });
  EXPECT_NEAR(mass, 1.0, 1e-10);
  EXPECT_NEAR(m, -1.0, 1e-8);  // digamma(1) - digamma(2)
  RngStream rng(63);
  double s = 0.0;
  for (int i = 0; i < 1000000; ++i) s += sample_z(p, rng);
  EXPECT_NEAR(s / 1e6, m, 0.01);
}

TEST(ZDistribution, LocationScale) {
  const ZParams p{0.5, 0.5, 2.0, 3.0};
  RngStream rng(64);
  std::vector<double> z(100000);
  for (auto& v : z) v = sample_z(p, rng);
  const auto r = ks_one_sample(z, [&](double v) {
    // Z(1/2, 1/2): logistic-type CDF through the Beta(1/2, 1/2) law of 1 / (1 + e^{-u})
    const double u = (v - p.mu_z) / p.sigma_z;
    const double k = 1.0 / (1.0 + std::exp(-u));
    return 2.0 / std::numbers::pi * std::asin(std::sqrt(k));
  });
  EXPECT_GT(r.p_value, 0.01);
}

TEST(ZDistribution, PgConditionalsLeaveMarginalInvariant) {
  for (auto [al, be] : {std::pair{0.5, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 1.0}}) {
    RngStream rng(70 + static_cast<std::uint64_t>(10 * (al + be)));
    const ZParams p{al, be, 0.0, 1.0};
    std::vector<double> eta(100000), eta2(100000);
    for (std::size_t i = 0; i < eta.size(); ++i) {
      eta[i] = sample_z(p, rng);
      const double xi = sample_pg(al + be, eta[i], rng);
      eta2[i] = 0.5 * (al - be) / xi + rng.normal() / std::sqrt(xi);
    }
    std::vector<double> fresh(100000);
    for (auto& v : fresh) v = sample_z(p, rng);
    EXPECT_GT(ks_two_sample(eta2, fresh).p_value, 0.01) << al << "," << be;
  }
}

TEST(ZDistribution, InvalidParams) {
  RngStream rng(1);
  EXPECT_THROW(sample_z(ZParams{0.0, 0.5, 0.0, 1.0}, rng), DomainError);
  EXPECT_THROW(sample_z(ZParams{0.5, 0.5, 0.0, -1.0}, rng), DomainError);
}

TEST(InvertedBeta, MatchesBetaTransform) {
  RngStream rng(81);
  std::vector<double> a(100000), b(100000);
  for (auto& v : a) v = sample_inverted_beta(1.0, 0.5, rng);
  for (auto& v : b) {
    const double k = rng.beta(1.0, 0.5);
    v = (1.0 - k) / k;
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(Tpb, UnitGammaIsBeta) {
  boost::math::beta_distribution<double> beta(0.5, 0.5);
  for (double k : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.999}) {
    const double ref = boost::math::pdf(beta, k);
    EXPECT_NEAR(tpb_density(k, TpbParams{0.5, 0.5, 1.0}) / ref, 1.0, 1e-12) << k;
  }
  boost::math::beta_distribution<double> beta2(2.0, 0.7);
  EXPECT_NEAR(tpb_density(0.3, TpbParams{2.0, 0.7, 1.0}) / boost::math::pdf(beta2, 0.3), 1.0, 1e-12);
}

TEST(Tpb, Normalised) {
  for (double g : {0.1, 1.0, 10.0}) {
    const TpbParams p{0.5, 0.5, g};
    // kappa = sin^2(theta) on the left half, cos^2(theta) on the right, so
    // neither endpoint singularity is evaluated near a rounded 0 or 1
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double th) {
          const double s = std::sin(th), c = std::cos(th);
          // Jacobian 2 sqrt(k (1 - k)) taken at the rounded k so the singular factor cancels
          auto term = [&](double k) { return k > 0.0 && k < 1.0 ? tpb_density(k, p) * 2.0 * std::sqrt(k * (1.0 - k)) : 0.0; };
          return term(s * s) + term(c * c);
        },
        0.0, std::numbers::pi / 4.0, 15, 1e-12);
    EXPECT_NEAR(mass, 1.0, 1e-8) << "gamma = " << g;
  }
}

TEST(Tpb, MatchesShrinkageOfShiftedZ) {
  const double gamma = 4.0;
  const TpbParams p{0.5, 0.5, gamma};
  RngStream rng(91);
  const std::size_t n = 100000;
  const int bins = 40;
  std::vector<double> obs(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = sample_z(ZParams{0.5, 0.5, std::log(gamma), 1.0}, rng);
    const double k = 1.0 / (1.0 + std::exp(eta));
    obs[std::min(bins - 1, static_cast<int>(k * bins))] += 1.0;
  }
  boost::math::quadrature::tanh_sinh<double> integrator;
  std::vector<double> expected(bins);
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins;
    const double hi = static_cast<double>(b + 1) / bins;
    expected[b] = n * integrator.integrate([&](double k) { return tpb_density(k, p); }, lo, hi);
  }
  EXPECT_GT(dsp::testing::chi_square(obs, expected).p_value, 0.01);
}

TEST(Tpb, RejectsOutsideUnitInterval) {
  EXPECT_THROW(tpb_density(0.0, TpbParams{}), DomainError);
  EXPECT_THROW(tpb_density(1.0, TpbParams{}), DomainError);
  EXPECT_THROW(tpb_density(0.5, TpbParams{0.5, 0.5, 0.0}), DomainError);
}

TEST(Slice, StandardNormalMoments) {
  RngStream rng(101);
  double x = 0.0;
  std::vector<double> draws(100000);
  for (auto& d : draws) {
    x = slice_sample([](double v) { return -0.5 * v * v; }, x, rng);
    d = x;
  }
  EXPECT_NEAR(dsp::testing::mean(draws), 0.0, 0.02);
  EXPECT_NEAR(dsp::testing::variance(draws), 1.0, 0.05);
}

TEST(Slice, RespectsBounds) {
  RngStream rng(102);
  SliceOptions opt;
  opt.lower = -1.0;
  opt.upper = 1.0;
  double x = 0.9;
  for (int i = 0; i < 20000; ++i) {
    x = slice_sample([](double v) { return 5.0 * v; }, x, rng, opt);
    ASSERT_GT(x, -1.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(Slice, FlatTargetIsUniform) {
  RngStream rng(103);
  SliceOptions opt;
  opt.lower = 0.0;
  opt.upper = 1.0;
  double x = 0.5;
  std::vector<double> draws;
  for (int i = 0; i < 100000; ++i) {
    x = slice_sample([](double) { return 0.0; }, x, rng, opt);
    if (i % 10 == 0) draws.push_back(x);
  }
  EXPECT_GT(ks_one_sample(draws, [](double v) { return std::clamp(v, 0.0, 1.0); }).p_value, 0.01);
}

TEST(Slice, Preconditions) {
  RngStream rng(1);
  SliceOptions opt;
  opt.lower = 0.0;
  opt.upper = 1.0;
  EXPECT_THROW(slice_sample([](double) { return 0.0; }, 2.0, rng, opt), PreconditionError);
  EXPECT_THROW(slice_sample([](double) { return -INFINITY; }, 0.5, rng, opt), PreconditionError);
}

TEST(Rng, SameSeedSameSequence) {
  RngStream a(5, 3), b(5, 3), c(5, 4);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_pg(1.0, 0.3, a);
    EXPECT_EQ(x, sample_pg(1.0, 0.3, b));
    differs = differs || x != sample_pg(1.0, 0.3, c);
  }
  EXPECT_TRUE(differs);
  RngStream z1(9), z2(9);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_z(ZParams{1.0, 2.0, 0.0, 1.0}, z1), sample_z(ZParams{1.0, 2.0, 0.0, 1.0}, z2));
}
