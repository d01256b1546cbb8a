// First-entrance kernels and asymptotic relations among survival probabilities
#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "persist/genfun.hpp"
#include "persist/presets.hpp"
#include "persist/survival.hpp"
#include "persist/variance.hpp"

using namespace persist;

namespace {

// P(tau = 2n - 1) = Catalan(n-1) / 2^(2n-1) for the walk from 1 to 0.
double srw_first_passage_cdf(std::size_t H) {
  double acc = 0;
  for (std::size_t n = 1; 2 * n - 1 <= H; ++n) {
    double m = double(n - 1);
    double logc = std::lgamma(2 * m + 1) - std::lgamma(m + 1) - std::lgamma(m + 2);
    acc += std::exp(logc - double(2 * n - 1) * std::log(2.0));
  }
  return acc;
}

std::vector<int> states_matching(const WalkModel& m, const std::string& pat) {
  std::vector<int> v;
  for (std::size_t s = 0; s < m.size(); ++s) {
    bool ok = true;
    for (std::size_t i = 0; i < pat.size(); ++i) ok = ok && (pat[i] == '*' || pat[i] == m.spec.labels[s][i]);
    if (ok) v.push_back(int(s));
  }
  return v;
}

}  // namespace

// =============================================================================
// Kernel
// =============================================================================

TEST(Kernel, PointMassAtStart) {
  auto m = example32_model();
  auto k = hitting_kernel(m, 2, 3, 5);
  EXPECT_EQ(k.p(3)(2), 1.0);
  EXPECT_EQ(k.p(3).sum(), 1.0);
}

TEST(Kernel, SrwCatalan) {
  auto m = srw_model();
  auto up = std::size_t(m.state_index("1"));
  int down = m.state_index("-1");
  for (std::size_t H : {1, 2, 7, 40, 301}) {
    auto k = hitting_kernel(m, up, 1, H);
    EXPECT_NEAR(k.p(0)(down), srw_first_passage_cdf(H), 1e-14);
    EXPECT_EQ(k.p(0)(m.state_index("1")), 0.0);
    EXPECT_NEAR(k.tail[0], 1 - srw_first_passage_cdf(H), 1e-14);
    EXPECT_EQ(k.overshoot[0], 0.0);
  }
}

TEST(Kernel, MatchesEnumeration) {
  for (auto m : {persistent_model(0.75), example32_model(), iid_model({-2, 1}, {1.0 / 3, 2.0 / 3}), triple_ex35_model()}) {
    for (std::size_t x = 0; x < m.size(); x += 5) {
      auto a = hitting_kernel(m, x, 2, 10);
      auto b = hitting_kernel_bruteforce(m, x, 2, 10);
      for (int i = 0; i <= 2; ++i) {
        EXPECT_LE((a.p(i) - b.p(i)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(a.overshoot[i], b.overshoot[i], 1e-12);
        EXPECT_NEAR(a.tail[i], b.tail[i], 1e-12);
      }
    }
  }
}

TEST(Kernel, MassBalance) {
  auto m = triple_ex35_model();
  auto k = hitting_kernel(m, 4, 3, 200);
  for (int i = 0; i <= 3; ++i) EXPECT_NEAR(k.p(i).sum() + k.overshoot[i] + k.tail[i], 1.0, 1e-12);
}

TEST(Kernel, PersistentEndsOnDownStep) {
  auto m = persistent_model(0.75);
  auto up = std::size_t(m.state_index("1"));
  auto k = hitting_kernel(m, up, 1, 18);
  EXPECT_EQ(k.p(0)(m.state_index("1")), 0.0);
  EXPECT_GT(k.p(0)(m.state_index("-1")), 0.6);
}

TEST(Kernel, TailDecaysLikeInverseRoot) {
  auto m = srw_model();
  auto up = std::size_t(m.state_index("1"));
  KernelOptions ko;
  ko.level_cap = 12 * 100 + 2;
  auto k = hitting_kernel(m, up, 1, 10000, ko);
  EXPECT_NEAR(k.tail[0] * 100, std::sqrt(2 / M_PI), 0.01);
}

TEST(Kernel, RecordsEntranceTimes) {
  auto m = srw_model();
  KernelOptions ko;
  ko.record_times = true;
  auto k = hitting_kernel(m, std::size_t(m.state_index("1")), 1, 9, ko);
  const auto& rec = k.absorbed[0];
  double total = 0;
  for (double v : rec) total += v;
  EXPECT_NEAR(total, k.p(0).sum(), 1e-15);
}

// =============================================================================
// Relations
// =============================================================================

TEST(Relations, ExactPartsAtFiniteTime) {
  for (auto m : {srw_model(), example32_model(), triple_ex35_model()}) {
    auto r = kernel_relation_check(m, 0, 2, 300);
    EXPECT_LE(r.recursion_residual, 1e-12);
    EXPECT_LE(r.decomposition_residual, 1e-12);
  }
}

TEST(Relations, KernelRatioApproachesOne) {
  auto m = triple_ex35_model();
  auto x = std::size_t(m.state_index("001"));
  double e1 = std::abs(kernel_relation_check(m, x, 1, 100).kernel_ratio - 1);
  double e2 = std::abs(kernel_relation_check(m, x, 1, 1000).kernel_ratio - 1);
  EXPECT_LT(e2, e1);
  EXPECT_LT(e2, 0.02);
}

TEST(Relations, TripleWindowClassRatios) {
  auto m = triple_ex35_model();
  const std::size_t T = 4000;
  auto tab = survival_dp(m, 0, 1, T);
  auto s1 = states_matching(m, "**1"), s0 = states_matching(m, "**0"), s12 = states_matching(m, "*12");
  double a = tab.average(s1, 1, T), b = tab.average(s1, 0, T), c = tab.average(s0, 0, T), d = tab.average(s12, 0, T);
  EXPECT_NEAR(a / (b + c), 1.0, 0.02);
  EXPECT_NEAR(b / c, 1.0, 0.02);
  // From (1,2) the walk reaches (1,2,0), whose -2 step overshoots level 0.
  EXPECT_NEAR(d / c, 4.0 / 3, 0.03);
}
