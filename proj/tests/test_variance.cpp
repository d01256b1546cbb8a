// Limiting variance of Markov additive walks
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "persist/presets.hpp"
#include "persist/rng.hpp"
#include "persist/variance.hpp"
#include "persist/verify.hpp"

using namespace persist;

namespace {

// Cov_k for k = 0..K by propagating h_k = P^k g with plain loops.
std::vector<double> covariances(const WalkModel& m, std::size_t K) {
  std::size_t n = m.size();
  std::vector<double> g(n), h(n);
  double mean = 0;
  for (std::size_t x = 0; x < n; ++x) mean += m.pi.pi(Eigen::Index(x)) * m.g(Eigen::Index(x));
  for (std::size_t x = 0; x < n; ++x) g[x] = h[x] = m.g(Eigen::Index(x)) - mean;
  std::vector<double> c;
  for (std::size_t k = 0; k <= K; ++k) {
    double s = 0;
    for (std::size_t x = 0; x < n; ++x) s += m.pi.pi(Eigen::Index(x)) * g[x] * h[x];
    c.push_back(s);
    std::vector<double> nh(n, 0.0);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) nh[x] += m.P()(Eigen::Index(x), Eigen::Index(y)) * h[y];
    h = nh;
  }
  return c;
}

double series_oracle(const WalkModel& m, std::size_t K = 3000) {
  auto c = covariances(m, K);
  double s = c[0];
  for (std::size_t k = 1; k <= K; ++k) s += 2 * c[k];
  return s;
}

double finite_variance(const WalkModel& m, std::size_t T) {
  auto c = covariances(m, T);
  double v = double(T) * c[0];
  for (std::size_t k = 1; k < T; ++k) v += 2 * double(T - k) * c[k];
  return v;
}

}  // namespace

// =============================================================================
// Exact values
// =============================================================================

TEST(Gamma2, Persistent) {
  for (double a : {0.5, 0.75, 0.9}) {
    auto m = persistent_model(a);
    EXPECT_NEAR(gamma2_exact(m).gamma2, a / (1 - a), 1e-10);
    EXPECT_NEAR(gamma2_series(m).gamma2, a / (1 - a), 1e-8);
    EXPECT_NEAR(gamma2_spectral(m).gamma2, a / (1 - a), 1e-6);
  }
}

TEST(Gamma2, AutomatonChains) {
  EXPECT_NEAR(gamma2_exact(cca_model()).gamma2, 2.0 / 3, 1e-10);
  EXPECT_NEAR(gamma2_exact(ghm_pair_model()).gamma2, 2.0 / 27, 1e-10);
  EXPECT_NEAR(gamma2_exact(fca_quad_model()).gamma2, 8.0 / 27, 1e-10);
  EXPECT_NEAR(gamma2_series(fca_quad_model()).gamma2, 8.0 / 27, 1e-8);
}

TEST(Gamma2, Example32) {
  auto m = example32_model();
  EXPECT_NEAR(gamma2_exact(m).gamma2, 8.0 / 5, 1e-10);
  EXPECT_NEAR(gamma2_series(m).gamma2, 8.0 / 5, 1e-8);
  EXPECT_NEAR(gamma2_spectral(m).gamma2, 8.0 / 5, 1e-6);
}

TEST(Gamma2, TripleWindow) {
  auto m = triple_ex35_model();
  EXPECT_NEAR(gamma2_exact(m).gamma2, 8.0 / 27, 1e-10);
  EXPECT_NEAR(gamma2_series(m).gamma2, gamma2_exact(m).gamma2, 1e-8);
}

TEST(Gamma2, MatchesCovarianceSeriesOracle) {
  for (const auto& nm : preset_catalog())
    EXPECT_NEAR(gamma2_exact(nm.model).gamma2, series_oracle(nm.model), 1e-10) << nm.name;
}

TEST(Gamma2, SeriesReportsLags) {
  auto r = gamma2_series(ghm_pair_model());
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.lags, 10u);
  EXPECT_EQ(r.method, VarianceMethod::series);
}

// =============================================================================
// Spectral method
// =============================================================================

TEST(Spectral, Example32Eigenvalues) {
  auto r = gamma2_spectral(example32_model());
  std::vector<double> ev;
  for (auto l : r.eigenvalues) ev.push_back(l.real());
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], 1.0 / 6, 1e-10);
  EXPECT_NEAR(ev[1], 0.5, 1e-10);
  EXPECT_NEAR(ev[2], 1.0, 1e-10);
}

TEST(Spectral, DefectiveMatrix) {
  try {
    gamma2_spectral(defective_model());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::defective_matrix);
    EXPECT_TRUE(is_numerical(e.code()));
  }
  EXPECT_NEAR(gamma2_exact(defective_model()).gamma2, series_oracle(defective_model()), 1e-10);
}

TEST(Spectral, WindowChainsAreDefective) {
  EXPECT_THROW(gamma2_spectral(ghm_pair_model()), Error);
  EXPECT_THROW(gamma2_spectral(triple_ex35_model()), Error);
}

TEST(Spectral, PeriodicChain) {
  auto m = persistent_model(0.0);
  EXPECT_NEAR(gamma2_exact(m).gamma2, 0.0, 1e-12);
  EXPECT_NEAR(gamma2_spectral(m).gamma2, 0.0, 1e-10);
  EXPECT_FALSE(gamma2_series(m, 1000).converged);
}

// =============================================================================
// Invariances
// =============================================================================

TEST(Gamma2, ScaleEquivariance) {
  for (const auto& nm : preset_catalog())
    for (double c : {2.0, 1.0 / 3}) {
      double g0 = gamma2_exact(nm.model).gamma2;
      EXPECT_NEAR(gamma2_exact(scaled_model(nm.model, c)).gamma2, c * c * g0, 1e-10) << nm.name;
    }
}

TEST(Gamma2, NonNegativeOnRandomChains) {
  Stream rng(SeedSpec{17}, 0);
  for (int i = 0; i < 200; ++i) {
    auto m = random_model(rng, 2 + rng.below(6));
    double ex = gamma2_exact(m).gamma2;
    EXPECT_GE(ex, -1e-10);
    EXPECT_NEAR(ex, gamma2_series(m).gamma2, 1e-8);
    EXPECT_NEAR(ex, series_oracle(m, 400), 1e-9);
  }
}

// =============================================================================
// Central limit scaling
// =============================================================================

TEST(Gamma2, FiniteTimeVarianceConverges) {
  auto m = example32_model();
  double g = gamma2_exact(m).gamma2;
  double e1 = std::abs(finite_variance(m, 100) / 100 - g);
  double e2 = std::abs(finite_variance(m, 1000) / 1000 - g);
  EXPECT_LT(e2, e1);
  EXPECT_LT(e2, 5e-3);
}

TEST(Gamma2, SampledVarianceOfSum) {
  auto m = persistent_model(0.75);
  const std::size_t T = 1024, N = 20000;
  auto mom = sum_moments(m, T, N, SeedSpec{23}, 1);
  double exact = finite_variance(m, T);
  double se = exact * std::sqrt(2.0 / N);
  EXPECT_NEAR(mom.variance(), exact, 5 * se);
}
