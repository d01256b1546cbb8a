// Markov chain construction, stationarity, reversal, autocovariance, sampling
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "persist/chain.hpp"
#include "persist/chain_io.hpp"
#include "persist/presets.hpp"

using namespace persist;

namespace {

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::invalid_argument;
}

// P^k by repeated multiplication with plain loops.
std::vector<std::vector<double>> matrix_power(const Eigen::MatrixXd& P, std::size_t k) {
  std::size_t n = static_cast<std::size_t>(P.rows());
  std::vector<std::vector<double>> R(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) R[i][i] = 1;
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<std::vector<double>> T(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) T[i][j] += R[i][m] * P(Eigen::Index(m), Eigen::Index(j));
    R = T;
  }
  return R;
}

double autocov_oracle(const WalkModel& m, std::size_t k) {
  auto Pk = matrix_power(m.P(), k);
  double s = 0;
  for (std::size_t x = 0; x < m.size(); ++x)
    for (std::size_t y = 0; y < m.size(); ++y) s += m.pi.pi(Eigen::Index(x)) * m.g(Eigen::Index(x)) * Pk[x][y] * m.g(Eigen::Index(y));
  return s;
}

}  // namespace

// =============================================================================
// Validation
// =============================================================================

TEST(Validate, AcceptsPersistent) { EXPECT_NO_THROW(validate(persistent_model(0.3).spec)); }

TEST(Validate, NegativeEntry) {
  Eigen::MatrixXd P(3, 3);
  P << 0.6, -0.1, 0.5, 0.3, 0.3, 0.4, 0.2, 0.2, 0.6;
  EXPECT_EQ(error_code([&] { validate(make_spec(P)); }), Errc::negative_entry);
}

TEST(Validate, RowSum) {
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0.5, 0.4;
  try {
    validate(make_spec(P));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_stochastic);
    EXPECT_EQ(e.where(), 1);
  }
}

TEST(Validate, IdentityIsReducible) {
  EXPECT_EQ(error_code([] { validate(make_spec(Eigen::MatrixXd::Identity(3, 3))); }), Errc::reducible);
}

TEST(Validate, AbsorbingStateIsReducible) {
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0.0, 1.0;
  EXPECT_EQ(error_code([&] { validate(make_spec(P)); }), Errc::reducible);
}

TEST(Validate, PersistentAlphaOneIsReducible) {
  EXPECT_EQ(error_code([] { persistent_model(1.0); }), Errc::reducible);
}

TEST(Validate, MeanNotZero) {
  EXPECT_EQ(error_code([] { iid_model({0, 2}, {0.5, 0.5}); }), Errc::mean_not_zero);
}

TEST(Presets, UnknownName) { EXPECT_EQ(error_code([] { build_preset("missing"); }), Errc::unknown_preset); }

TEST(Presets, AllNamesBuild) {
  PresetParams pp;
  pp.values = {-1, 2};
  pp.probs = {2.0 / 3, 1.0 / 3};
  for (const auto& name : preset_names()) EXPECT_NO_THROW(build_preset(name, pp)) << name;
}

TEST(Presets, DefaultLabels) {
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0.5, 0.5;
  auto s = make_spec(P);
  ASSERT_EQ(s.labels.size(), 2u);
  EXPECT_EQ(s.labels[0], "0");
  EXPECT_EQ(s.labels[1], "1");
}

TEST(Presets, WindowIndexing) {
  auto m = triple_ex35_model();
  ASSERT_EQ(m.size(), 27u);
  // (1,2,0) carries the -2 step and (0,2,1) the +2 step
  EXPECT_EQ(m.g(m.state_index("120")), -2);
  EXPECT_EQ(m.g(m.state_index("021")), 2);
  EXPECT_EQ(m.g(m.state_index("011")), 0);
  EXPECT_EQ(m.g(m.state_index("001")), 1);
  EXPECT_EQ(m.g(m.state_index("010")), -1);
  EXPECT_DOUBLE_EQ(m.P()(m.state_index("012"), m.state_index("120")), 1.0 / 3);
  EXPECT_DOUBLE_EQ(m.P()(m.state_index("012"), m.state_index("012")), 0.0);
}

// =============================================================================
// Stationary distribution
// =============================================================================

TEST(Stationary, PersistentIsUniform) {
  for (double a : {0.0, 0.25, 0.75, 0.99}) {
    auto m = persistent_model(a);
    EXPECT_NEAR(m.pi.pi(0), 0.5, 1e-12);
    EXPECT_NEAR(m.pi.pi(1), 0.5, 1e-12);
  }
}

TEST(Stationary, Example32) {
  // pi P = pi solved by hand: pi = (2/5, 1/5, 2/5)
  auto m = example32_model();
  EXPECT_NEAR(m.pi.pi(0), 0.4, 1e-12);
  EXPECT_NEAR(m.pi.pi(1), 0.2, 1e-12);
  EXPECT_NEAR(m.pi.pi(2), 0.4, 1e-12);
}

TEST(Stationary, WindowChainsAreUniform) {
  for (auto m : {ghm_pair_model(), fca_quad_model(), triple_ex35_model()})
    for (Eigen::Index i = 0; i < m.pi.pi.size(); ++i) EXPECT_NEAR(m.pi.pi(i), 1.0 / double(m.size()), 1e-12);
}

TEST(Stationary, MatchesPowerIteration) {
  Eigen::MatrixXd P(4, 4);
  P << 0.1, 0.2, 0.3, 0.4,
       0.5, 0.0, 0.5, 0.0,
       0.0, 0.9, 0.0, 0.1,
       0.25, 0.25, 0.25, 0.25;
  auto pi = stationary(make_spec(P));
  auto Pk = matrix_power(P, 400);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(pi.pi(Eigen::Index(j)), Pk[0][j], 1e-12);
}

// =============================================================================
// Time reversal
// =============================================================================

TEST(Reverse, MatchesFormula) {
  auto m = example32_model();
  auto R = reverse(m).P;
  for (Eigen::Index x = 0; x < 3; ++x)
    for (Eigen::Index y = 0; y < 3; ++y)
      EXPECT_NEAR(R(x, y), m.pi.pi(y) * m.P()(y, x) / m.pi.pi(x), 1e-14);
}

TEST(Reverse, Involution) {
  for (auto m : {example32_model(), triple_ex35_model(), persistent_model(0.8)}) {
    auto twice = reverse(reverse(m), m.pi);
    EXPECT_LE((twice.P - m.P()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reverse, ReversibleChainIsFixed) {
  auto m = persistent_model(0.8);
  EXPECT_LE((reverse(m).P - m.P()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Reverse, ZeroMassState) {
  auto m = example32_model();
  StationaryDist pi;
  pi.pi = Eigen::Vector3d(0.5, 0.0, 0.5);
  EXPECT_EQ(error_code([&] { reverse(m.spec, pi); }), Errc::zero_mass_state);
}

TEST(Reverse, WindowReadBackwards) {
  auto m = ghm_pair_model();
  auto R = reverse(m).P;
  // The window (a,b) is preceded by (c,a) for each color c.
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(R(3 * a + b, 3 * c + a), 1.0 / 3, 1e-14);
}

// =============================================================================
// Autocovariance
// =============================================================================

TEST(Autocovariance, PersistentClosedForm) {
  auto m = persistent_model(0.75);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(autocovariance_exact(m, k), std::pow(0.5, double(k)), 1e-14);
}

TEST(Autocovariance, Example32) {
  auto m = example32_model();
  EXPECT_NEAR(autocovariance_exact(m, 0), 0.8, 1e-14);
  EXPECT_NEAR(autocovariance_exact(m, 1), 7.0 / 30, 1e-14);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(autocovariance_exact(m, k), autocov_oracle(m, k), 1e-14);
}

TEST(Autocovariance, WindowChainsDecorrelate) {
  auto ghm = ghm_pair_model();
  EXPECT_NEAR(autocovariance_exact(ghm, 0), 2.0 / 9, 1e-14);
  EXPECT_NEAR(autocovariance_exact(ghm, 1), -2.0 / 27, 1e-14);
  for (std::size_t k = 2; k < 8; ++k) EXPECT_NEAR(autocovariance_exact(ghm, k), 0.0, 1e-14);
  auto ex = triple_ex35_model();
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(autocovariance_exact(ex, k), autocov_oracle(ex, k), 1e-14);
  for (std::size_t k = 3; k < 8; ++k) EXPECT_NEAR(autocovariance_exact(ex, k), 0.0, 1e-14);
}

// =============================================================================
// Sampling
// =============================================================================

TEST(Sampling, KernelFrequencies) {
  auto m = example32_model();
  SparseKernel k(m.P());
  Stream rng(SeedSpec{5}, 0);
  const int N = 300000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < N; ++i) ++counts[static_cast<std::size_t>(k.sample(0, rng.uniform()))];
  for (int y = 0; y < 3; ++y) {
    double p = m.P()(0, y);
    EXPECT_NEAR(counts[std::size_t(y)] / double(N), p, 5 * std::sqrt(p * (1 - p) / N) + 1e-12);
  }
}

TEST(Sampling, PathShapeAndDeterminism) {
  auto m = triple_ex35_model();
  auto a = sample_stationary_path(m, 50, SeedSpec{9}, Direction::forward, 3);
  auto b = sample_stationary_path(m, 50, SeedSpec{9}, Direction::forward, 3);
  ASSERT_EQ(a.states.size(), 51u);
  ASSERT_EQ(a.increments.size(), 50u);
  EXPECT_EQ(a.states, b.states);
  for (std::size_t k = 1; k <= 50; ++k) {
    EXPECT_GT(m.P()(a.states[k - 1], a.states[k]), 0.0);
    EXPECT_EQ(a.increments[k - 1], m.g(a.states[k]));
  }
}

TEST(Sampling, BackwardPathFollowsReversedKernel) {
  auto m = example32_model();
  auto R = reverse(m).P;
  auto p = sample_stationary_path(m, 200000, SeedSpec{4}, Direction::backward);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t k = 1; k < p.states.size(); ++k) counts(p.states[k - 1], p.states[k]) += 1;
  for (Eigen::Index x = 0; x < 3; ++x) {
    double row = counts.row(x).sum();
    for (Eigen::Index y = 0; y < 3; ++y) EXPECT_NEAR(counts(x, y) / row, R(x, y), 0.01);
  }
}

// =============================================================================
// Chain-spec files
// =============================================================================

TEST(ChainIO, PersistentFile) {
  auto m = parse_chain_text(
      "# persistent walk\n"
      "states 2\n"
      "labels down up\n"
      "P\n"
      "0.75 0.25\n"
      "1/4  3/4\n"
      "g -1 1\n");
  EXPECT_NEAR(m.pi.pi(0), 0.5, 1e-12);
  EXPECT_NEAR(m.pi.pi(1), 0.5, 1e-12);
  EXPECT_EQ(m.state_index("up"), 1);
  EXPECT_TRUE(m.integer_valued);
}

TEST(ChainIO, RowSumReportsLine) {
  try {
    parse_chain_text("states 2\nP\n0.5 0.5\n0.5 0.4\ng -1 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_stochastic);
    EXPECT_EQ(e.where(), 4);
  }
}

TEST(ChainIO, MeanNotZero) {
  EXPECT_EQ(error_code([] { parse_chain_text("states 2\nP\n0.5 0.5\n0.5 0.5\ng\n0\n1\n"); }), Errc::mean_not_zero);
}

TEST(ChainIO, BadToken) {
  try {
    parse_chain_text("states 2\nP\n0.5 x\n0.5 0.5\ng -1 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_EQ(e.where(), 3);
  }
}

TEST(ChainIO, MissingRows) {
  EXPECT_EQ(error_code([] { parse_chain_text("states 3\nP\n1 0 0\ng 0 0 0\n"); }), Errc::parse_error);
}

TEST(ChainIO, MissingFile) {
  EXPECT_EQ(error_code([] { parse_chain_file("/nonexistent/chain.txt"); }), Errc::parse_error);
}
