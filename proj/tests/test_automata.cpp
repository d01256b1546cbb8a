// Three-color cellular automata and their edge particle systems
#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "persist/automata.hpp"
#include "persist/presets.hpp"
#include "persist/survival.hpp"

using namespace persist;

namespace {

int oracle_update(Rule rule, int l, int c, int r) {
  int next = (c + 1) % 3;
  switch (rule) {
    case Rule::cca: return (l == next || r == next) ? next : c;
    case Rule::ghm:
      if (c == 0) return (l == 1 || r == 1) ? 1 : 0;
      return next;
    case Rule::fca: return (c == 2 && (l == 1 || r == 1)) ? 2 : next;
  }
  return c;
}

RingConfig config(Rule rule, Topology topo, std::vector<std::uint8_t> c) {
  RingConfig x;
  x.rule = rule;
  x.topology = topo;
  x.colors = std::move(c);
  return x;
}

}  // namespace

// =============================================================================
// Local rules
// =============================================================================

TEST(Rules, MatchDefinitions) {
  for (Rule rule : {Rule::cca, Rule::ghm, Rule::fca})
    for (int l = 0; l < 3; ++l)
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r)
          EXPECT_EQ(local_update(rule, std::uint8_t(l), std::uint8_t(c), std::uint8_t(r)), oracle_update(rule, l, c, r));
}

TEST(Rules, Differentials) {
  EXPECT_EQ(mod3_differential(0, 1), 1);
  EXPECT_EQ(mod3_differential(0, 2), -1);
  EXPECT_EQ(mod3_differential(2, 0), 1);
  EXPECT_EQ(mod3_differential(1, 1), 0);
  EXPECT_EQ(ghm_differential(0, 1), 1);
  EXPECT_EQ(ghm_differential(1, 0), -1);
  EXPECT_EQ(ghm_differential(2, 0), 0);
  EXPECT_EQ(ghm_differential(1, 2), 0);
}

// =============================================================================
// Stepping
// =============================================================================

TEST(Step, Examples) {
  using V = std::vector<std::uint8_t>;
  EXPECT_EQ(step(config(Rule::cca, Topology::ring, {0, 1, 2})).colors, (V{1, 2, 0}));
  EXPECT_EQ(step(config(Rule::ghm, Topology::ring, {0, 1, 2})).colors, (V{1, 2, 0}));
  EXPECT_EQ(step(config(Rule::fca, Topology::ring, {1, 2, 0})).colors, (V{2, 2, 1}));
  EXPECT_EQ(step(config(Rule::cca, Topology::ring, {0, 0, 0})).colors, (V{0, 0, 0}));
}

TEST(Step, MatchesOracleOnRandomRings) {
  for (Rule rule : {Rule::cca, Rule::ghm, Rule::fca})
    for (Topology topo : {Topology::ring, Topology::segment}) {
      auto c = random_init(257, SeedSpec{3}, rule, topo, 0);
      auto d = step(c);
      EXPECT_EQ(d.time, 1);
      std::size_t n = c.n();
      for (std::size_t x = 0; x < n; ++x) {
        int l, r;
        if (topo == Topology::ring) {
          l = c.colors[(x + n - 1) % n];
          r = c.colors[(x + 1) % n];
        } else {
          l = x == 0 ? c.colors[1] : c.colors[x - 1];
          r = x == n - 1 ? c.colors[n - 2] : c.colors[x + 1];
        }
        EXPECT_EQ(d.colors[x], oracle_update(rule, l, c.colors[x], r));
      }
    }
}

TEST(Step, RandomInitDeterministic) {
  auto a = random_init(1000, SeedSpec{1}, Rule::cca, Topology::ring, 4);
  auto b = random_init(1000, SeedSpec{1}, Rule::cca, Topology::ring, 4);
  auto c = random_init(1000, SeedSpec{1}, Rule::cca, Topology::ring, 5);
  EXPECT_EQ(a.colors, b.colors);
  EXPECT_NE(a.colors, c.colors);
  EXPECT_THROW(random_init(2, SeedSpec{1}), Error);
}

TEST(Step, Locality) {
  auto a = random_init(101, SeedSpec{2}, Rule::ghm, Topology::ring, 0);
  auto b = a;
  b.colors[50] = std::uint8_t((b.colors[50] + 1) % 3);
  for (std::size_t t = 1; t <= 30; ++t) {
    a = step(a);
    b = step(b);
    for (std::size_t x = 0; x < 101; ++x)
      if (x + t < 50 || x > 50 + t) EXPECT_EQ(a.colors[x], b.colors[x]);
  }
}

// =============================================================================
// Differential field and particles
// =============================================================================

TEST(Particles, DifferentialExamples) {
  auto d = differential(config(Rule::cca, Topology::segment, {0, 1, 0, 2}));
  EXPECT_EQ(d.values, (std::vector<std::int8_t>{1, -1, -1}));
  auto g = differential(config(Rule::ghm, Topology::ring, {0, 1, 2}));
  EXPECT_EQ(g.values, (std::vector<std::int8_t>{1, 0, 0}));
}

TEST(Particles, CountsAndDisagreements) {
  auto c = config(Rule::ghm, Topology::ring, {0, 1, 2, 2, 0});
  EXPECT_EQ(disagreements(c), 3u);
  EXPECT_EQ(particle_count(c), 1u);
  auto k = config(Rule::cca, Topology::ring, {0, 1, 2, 2, 0});
  EXPECT_EQ(particle_count(k), disagreements(k));
}

TEST(Particles, NoFlipAfterFirstStep) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto tr = simulate(random_init(500, SeedSpec{7}, Rule::fca, Topology::ring, s), 40);
    EXPECT_TRUE(no_flip_check(tr).empty());
  }
}

TEST(Particles, FcaLaws) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto rep = particle_law_check(simulate(random_init(600, SeedSpec{8}, Rule::fca, Topology::ring, s), 90));
    EXPECT_TRUE(rep.ok());
    EXPECT_EQ(rep.count_increases, 0u);
    EXPECT_EQ(rep.odd_changes, 0u);
    EXPECT_GT(rep.jumps, 0u);
  }
}

TEST(Particles, FcaSingleParticleSpeed) {
  std::vector<std::uint8_t> c(200, 0);
  std::fill(c.begin() + 50, c.end(), 1);
  auto tr = simulate(config(Rule::fca, Topology::segment, c), 91);
  auto where = [](const RingConfig& f) {
    auto d = differential(f).values;
    return std::find_if(d.begin(), d.end(), [](int v) { return v != 0; }) - d.begin();
  };
  auto last = differential(tr.frames[91]).values;
  EXPECT_EQ(std::count_if(last.begin(), last.end(), [](int v) { return v != 0; }), 1);
  EXPECT_NEAR(double(where(tr.frames[91]) - where(tr.frames[1])), 30.0, 1.0);
}

TEST(Particles, CountNonIncreasing) {
  for (Rule rule : {Rule::cca, Rule::ghm}) {
    auto tr = simulate(random_init(800, SeedSpec{9}, rule, Topology::ring, 0), 80);
    for (std::size_t t = 1; t < tr.frames.size(); ++t)
      EXPECT_LE(particle_count(tr.frames[t]), particle_count(tr.frames[t - 1]));
  }
}

// =============================================================================
// Density curves
// =============================================================================

TEST(Density, InitialDensity) {
  auto s = density_curve(Rule::cca, 1 << 16, 10, 4, SeedSpec{1});
  EXPECT_NEAR(s.points[0].density, 2.0 / 3, 0.01);
  EXPECT_EQ(s.points.size(), 11u);
}

TEST(Density, IndependentOfWorkers) {
  auto a = density_curve(Rule::fca, 4096, 50, 5, SeedSpec{6}, 1);
  auto b = density_curve(Rule::fca, 4096, 50, 5, SeedSpec{6}, 3);
  for (std::size_t t = 0; t <= 50; ++t) {
    EXPECT_EQ(a.points[t].density, b.points[t].density);
    EXPECT_EQ(a.points[t].stderr_, b.points[t].stderr_);
  }
}

TEST(Density, RingTooSmall) {
  try {
    density_curve(Rule::cca, 50, 30, 1, SeedSpec{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ring_too_small);
  }
}

TEST(Density, MatchesSurvival) {
  auto tab = survival_dp(cca_model(), -1, 101);
  auto s = density_curve(Rule::cca, 1 << 16, 50, 16, SeedSpec{2});
  EXPECT_NEAR(s.points[50].particles, 2 * tab.marginal(-1, 101), 4 * s.points[50].particles_stderr);
}

// =============================================================================
// Event equivalences
// =============================================================================

TEST(Equivalence, ExhaustiveShortTimes) {
  EXPECT_EQ(event_equivalence_check(Rule::cca, 2, CheckMode::exhaustive).mismatches, 0u);
  EXPECT_EQ(event_equivalence_check(Rule::ghm, 2, CheckMode::exhaustive).mismatches, 0u);
  EXPECT_EQ(event_equivalence_check(Rule::fca, 1, CheckMode::exhaustive).mismatches, 0u);
}

TEST(Equivalence, FcaSampled) {
  auto r = event_equivalence_check(Rule::fca, 2, CheckMode::sampled, 20000, SeedSpec{4});
  EXPECT_EQ(r.mismatches, 0u);
  EXPECT_EQ(r.configs, 20000u);
}

TEST(Equivalence, Excitation) {
  EXPECT_EQ(excitation_identity_check(4, CheckMode::exhaustive).mismatches, 0u);
  EXPECT_EQ(excitation_identity_check(30, CheckMode::sampled, 100, SeedSpec{5}).mismatches, 0u);
}
