#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/parallel.hpp"
#include "persist/rng.hpp"
#include "persist/rules.hpp"

namespace persist {

enum class Topology { ring, segment };

struct RingConfig {
  Rule rule = Rule::cca;
  Topology topology = Topology::ring;
  std::vector<std::uint8_t> colors;
  std::int64_t time = 0;

  std::size_t n() const { return colors.size(); }
};

// Ring: edge x joins sites x and x+1 mod n. Segment: edges 0..n-2.
struct DifferentialField {
  Rule rule = Rule::cca;
  Topology topology = Topology::ring;
  std::vector<std::int8_t> values;
};

inline std::size_t edge_count(std::size_t n, Topology topo) {
  return topo == Topology::ring ? n : (n == 0 ? 0 : n - 1);
}

// ============================================================================
// Update kernels
// ============================================================================

namespace detail {

template <Rule R>
inline std::uint8_t update(std::uint8_t l, std::uint8_t c, std::uint8_t r) {
  const std::uint8_t nx = static_cast<std::uint8_t>(c + 1 - 3 * (c == 2));
  if constexpr (R == Rule::cca) {
    return (l == nx) | (r == nx) ? nx : c;
  } else if constexpr (R == Rule::ghm) {
    return (c != 0) | (l == 1) | (r == 1) ? nx : c;
  } else {
    return (c == 2) & ((l == 1) | (r == 1)) ? c : nx;
  }
}

template <Rule R>
inline void sweep(const std::uint8_t* __restrict in, std::uint8_t* __restrict out, std::size_t n,
                  Topology topo) {
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = update<R>(in[i - 1], in[i], in[i + 1]);
  if (topo == Topology::ring) {
    out[0] = update<R>(in[n - 1], in[0], in[1]);
    out[n - 1] = update<R>(in[n - 2], in[n - 1], in[0]);
  } else {
    out[0] = update<R>(in[1], in[0], in[1]);
    out[n - 1] = update<R>(in[n - 2], in[n - 1], in[n - 2]);
  }
}

}  // namespace detail

inline void step_into(const RingConfig& in, RingConfig& out) {
  const std::size_t n = in.n();
  out.rule = in.rule;
  out.topology = in.topology;
  out.colors.resize(n);
  out.time = in.time + 1;
  if (n == 1) {
    out.colors[0] = in.colors[0];
    return;
  }
  switch (in.rule) {
    case Rule::cca: detail::sweep<Rule::cca>(in.colors.data(), out.colors.data(), n, in.topology); break;
    case Rule::ghm: detail::sweep<Rule::ghm>(in.colors.data(), out.colors.data(), n, in.topology); break;
    case Rule::fca: detail::sweep<Rule::fca>(in.colors.data(), out.colors.data(), n, in.topology); break;
  }
}

inline RingConfig step(const RingConfig& config) {
  RingConfig out;
  step_into(config, out);
  return out;
}

inline RingConfig random_init(std::size_t n, SeedSpec seed, Rule rule = Rule::cca,
                              Topology topo = Topology::ring, std::uint64_t stream = 0) {
  if (n < 3) throw Error(Errc::ring_too_small, "at least 3 sites required");
  RingConfig c;
  c.rule = rule;
  c.topology = topo;
  c.colors.resize(n);
  Stream rng(seed, stream);
  for (auto& v : c.colors) v = static_cast<std::uint8_t>(rng.below(3));
  return c;
}

inline DifferentialField differential(const RingConfig& config) {
  DifferentialField f;
  f.rule = config.rule;
  f.topology = config.topology;
  const std::size_t n = config.n();
  const std::size_t m = edge_count(n, config.topology);
  f.values.resize(m);
  for (std::size_t e = 0; e < m; ++e)
    f.values[e] = static_cast<std::int8_t>(
        edge_differential(config.rule, config.colors[e], config.colors[(e + 1) % n]));
  return f;
}

inline std::size_t disagreements(const RingConfig& c) {
  const std::size_t n = c.n();
  const std::uint8_t* a = c.colors.data();
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) k += a[i] != a[i + 1];
  if (c.topology == Topology::ring && n > 1) k += a[n - 1] != a[0];
  return k;
}

// Edges carrying a nonzero differential.
inline std::size_t particle_count(const RingConfig& c) {
  if (c.rule != Rule::ghm) return disagreements(c);
  const std::size_t n = c.n();
  const std::uint8_t* a = c.colors.data();
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) k += (a[i] + a[i + 1] == 1);
  if (c.topology == Topology::ring && n > 1) k += (a[n - 1] + a[0] == 1);
  return k;
}

struct Trajectory {
  std::vector<RingConfig> frames;
};

inline Trajectory simulate(const RingConfig& start, std::size_t steps) {
  Trajectory tr;
  tr.frames.reserve(steps + 1);
  tr.frames.push_back(start);
  for (std::size_t s = 0; s < steps; ++s) tr.frames.push_back(step(tr.frames.back()));
  return tr;
}

// ============================================================================
// Density measurement
// ============================================================================

struct DensityPoint {
  std::size_t t = 0;
  double density = 0;
  double stderr_ = 0;
  double particles = 0;
  double particles_stderr = 0;
};

struct DensitySeries {
  Rule rule = Rule::cca;
  std::size_t n = 0;
  std::size_t replicas = 0;
  std::vector<DensityPoint> points;
};

inline DensitySeries density_curve(Rule rule, std::size_t n, std::size_t t_max,
                                   std::size_t replicas, SeedSpec seed, unsigned workers = 1) {
  if (n < 2 * t_max + 8)
    throw Error(Errc::ring_too_small, "ring of " + std::to_string(n) + " sites is too small for " +
                                          std::to_string(t_max) + " steps");
  if (replicas < 1) throw Error(Errc::invalid_argument, "at least one replica required");
  std::vector<std::vector<std::uint32_t>> dis(replicas), par(replicas);
  for_each_block(replicas, workers, [&](std::size_t r) {
    RingConfig a = random_init(n, seed, rule, Topology::ring, r), b;
    std::vector<std::uint32_t> d(t_max + 1), p(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t) {
      d[t] = static_cast<std::uint32_t>(disagreements(a));
      p[t] = rule == Rule::ghm ? static_cast<std::uint32_t>(particle_count(a)) : d[t];
      if (t < t_max) {
        step_into(a, b);
        std::swap(a, b);
      }
    }
    dis[r] = std::move(d);
    par[r] = std::move(p);
  });
  DensitySeries s;
  s.rule = rule;
  s.n = n;
  s.replicas = replicas;
  s.points.resize(t_max + 1);
  const double N = static_cast<double>(n);
  for (std::size_t t = 0; t <= t_max; ++t) {
    Moments md, mp;
    for (std::size_t r = 0; r < replicas; ++r) {
      md.add(dis[r][t] / N);
      mp.add(par[r][t] / N);
    }
    s.points[t] = {t, md.mean(), md.stderr_of_mean(), mp.mean(), mp.stderr_of_mean()};
  }
  return s;
}

// ============================================================================
// FCA diagnostics
// ============================================================================

struct SiteEvent {
  std::int64_t t = 0;
  std::size_t x = 0;
  std::string what;
};

// Triples (X(x), X(x+1), X(x+2)) equal to (1,2,0) or (0,2,1) at times >= 1.
inline std::vector<SiteEvent> no_flip_check(const Trajectory& tr) {
  std::vector<SiteEvent> out;
  for (const auto& f : tr.frames) {
    if (f.rule != Rule::fca) throw Error(Errc::invalid_argument, "no-flip check applies to FCA");
    if (f.time < 1) continue;
    const std::size_t n = f.n();
    const std::size_t last = f.topology == Topology::ring ? n : (n >= 2 ? n - 2 : 0);
    for (std::size_t x = 0; x < last; ++x) {
      int a = f.colors[x], b = f.colors[(x + 1) % n], c = f.colors[(x + 2) % n];
      if (b == 2 && ((a == 1 && c == 0) || (a == 0 && c == 1)))
        out.push_back({f.time, x, a == 1 ? "120" : "021"});
    }
  }
  return out;
}

struct ParticleLawReport {
  std::size_t steps_checked = 0;
  std::vector<SiteEvent> violations;
  std::size_t count_increases = 0;
  std::size_t odd_changes = 0;
  std::size_t jump_gap_violations = 0;
  std::size_t jumps = 0;
  std::size_t annihilations = 0;
  std::vector<std::size_t> counts;

  bool ok() const {
    return violations.empty() && count_increases == 0 && odd_changes == 0 &&
           jump_gap_violations == 0;
  }
};

// Laws for FCA particles at times >= 1. An r particle (+1) on edge (x,x+1)
// has tail x; an l particle (-1) has tail x+1. A particle whose tail is not 1
// stays put. Otherwise it annihilates with the nearest opposing particle
// ahead of it within two edges, or moves one edge forward. On segments only
// edges at distance >= 3 from either end are compared.
inline ParticleLawReport particle_law_check(const Trajectory& tr) {
  ParticleLawReport rep;
  if (tr.frames.empty()) return rep;
  const RingConfig& f0 = tr.frames.front();
  if (f0.rule != Rule::fca) throw Error(Errc::invalid_argument, "particle laws apply to FCA");
  const std::size_t n = f0.n();
  const bool ring = f0.topology == Topology::ring;
  const std::size_t m = edge_count(n, f0.topology);
  const long M = static_cast<long>(m);
  auto wrap = [&](long e) -> long {
    if (ring) return ((e % M) + M) % M;
    return e;
  };
  auto inside = [&](long e) { return ring || (e >= 3 && e + 3 < M); };
  std::vector<std::int64_t> last_jump(m, -1), next_jump(m, -1);
  std::vector<std::int8_t> pred(m);

  for (std::size_t k = 0; k < tr.frames.size(); ++k) {
    const auto& f = tr.frames[k];
    auto field = differential(f).values;
    std::size_t cnt = 0;
    for (auto v : field) cnt += v != 0;
    rep.counts.push_back(cnt);
    if (k + 1 >= tr.frames.size() || f.time < 1) continue;
    const auto& g = tr.frames[k + 1];
    auto actual = differential(g).values;
    auto d = [&](long e) -> int {
      e = wrap(e);
      return (e < 0 || e >= M) ? 0 : field[static_cast<std::size_t>(e)];
    };
    std::fill(pred.begin(), pred.end(), 0);
    std::fill(next_jump.begin(), next_jump.end(), -1);
    std::vector<long> partner(m, -2);
    for (long e = 0; e < M; ++e) {
      int v = field[static_cast<std::size_t>(e)];
      if (v == 0) continue;
      const long dir = v > 0 ? 1 : -1;
      const std::size_t tail = static_cast<std::size_t>(v > 0 ? e : e + 1) % n;
      if (f.colors[tail] != 1) {
        partner[static_cast<std::size_t>(e)] = -1;
        continue;
      }
      if (d(e + dir) == -v)
        partner[static_cast<std::size_t>(e)] = wrap(e + dir);
      else if (d(e + dir) == 0 && d(e + 2 * dir) == -v)
        partner[static_cast<std::size_t>(e)] = wrap(e + 2 * dir);
      else
        partner[static_cast<std::size_t>(e)] = -3;
    }
    for (long e = 0; e < M; ++e) {
      int v = field[static_cast<std::size_t>(e)];
      if (v == 0) continue;
      long p = partner[static_cast<std::size_t>(e)];
      const std::size_t ei = static_cast<std::size_t>(e);
      if (p >= 0) {
        if (partner[static_cast<std::size_t>(p)] != e && inside(e))
          rep.violations.push_back({f.time, ei, "unpaired annihilation"});
        if (v > 0) ++rep.annihilations;
        continue;
      }
      long target = p == -1 ? e : wrap(e + v);
      if (target < 0 || target >= M) continue;
      const std::size_t ti = static_cast<std::size_t>(target);
      if (pred[ti] != 0 && inside(target))
        rep.violations.push_back({f.time, ti, "two particles predicted on one edge"});
      pred[ti] = static_cast<std::int8_t>(v);
      if (p == -1) {
        next_jump[ti] = last_jump[ei];
      } else {
        ++rep.jumps;
        if (last_jump[ei] >= 0 && g.time - last_jump[ei] != 3 && inside(target))
          ++rep.jump_gap_violations;
        next_jump[ti] = g.time;
      }
    }
    for (long e = 0; e < M; ++e) {
      const std::size_t ei = static_cast<std::size_t>(e);
      if (pred[ei] != actual[ei] && inside(e))
        rep.violations.push_back({g.time, ei, "particle field differs from prediction"});
    }
    last_jump.swap(next_jump);
    ++rep.steps_checked;
  }
  for (std::size_t k = 1; k < rep.counts.size(); ++k) {
    if (tr.frames[k - 1].time < 1 || !ring) continue;
    if (rep.counts[k] > rep.counts[k - 1]) ++rep.count_increases;
    if ((rep.counts[k - 1] - rep.counts[k]) % 2 != 0) ++rep.odd_changes;
  }
  return rep;
}

// ============================================================================
// Event equivalences
// ============================================================================

enum class CheckMode { exhaustive, sampled };

struct EquivalenceReport {
  Rule rule = Rule::cca;
  std::size_t t = 0;
  std::size_t sites = 0;
  std::size_t configs = 0;
  std::size_t mismatches = 0;
  std::size_t events = 0;
};

inline constexpr double kExhaustiveLimit = 1e8;

namespace detail {

inline bool next_coloring(std::vector<std::uint8_t>& c) {
  for (auto& v : c) {
    if (++v < 3) return true;
    v = 0;
  }
  return false;
}

inline double pow3(std::size_t k) { return std::pow(3.0, static_cast<double>(k)); }

}  // namespace detail

// CCA/GHM: {dX_t(0,1) = -1} against {sum_{x=-t}^{s} dX_0(x,x+1) <= -1 for all s in [-t,t]},
// on sites [-t-1, t+2].
// FCA: {dX_{3t+1}(0,1) = +1} against {sum_{x=-t}^{s} dX_1(x,x+1) >= 1 for all s in [-t,t]},
// on sites [-3t-1, 3t+2].
inline EquivalenceReport event_equivalence_check(Rule rule, std::size_t t, CheckMode mode,
                                                 std::size_t samples = 1000000,
                                                 SeedSpec seed = {}) {
  EquivalenceReport rep;
  rep.rule = rule;
  rep.t = t;
  const long T = static_cast<long>(t);
  const bool fca = rule == Rule::fca;
  const long left = fca ? 3 * T + 1 : T + 1;
  const std::size_t sites = static_cast<std::size_t>(fca ? 6 * T + 4 : 2 * T + 4);
  rep.sites = sites;
  const std::size_t target_time = fca ? 3 * t + 1 : t;
  const std::size_t ref_time = fca ? 1 : 0;
  if (mode == CheckMode::exhaustive && detail::pow3(sites) > kExhaustiveLimit)
    throw Error(Errc::too_large, std::to_string(sites) + " sites exceed the exhaustive limit");

  RingConfig cfg;
  cfg.rule = rule;
  cfg.topology = Topology::segment;
  cfg.colors.assign(sites, 0);
  RingConfig a, b;
  auto at = [&](const RingConfig& c, long x) { return c.colors[static_cast<std::size_t>(x + left)]; };
  auto check = [&] {
    a = cfg;
    bool rhs = true;
    long sum = 0;
    for (std::size_t s = 0; s <= target_time; ++s) {
      if (s == ref_time) {
        for (long x = -T; x <= T; ++x) {
          sum += edge_differential(rule, at(a, x), at(a, x + 1));
          if (fca ? sum < 1 : sum > -1) rhs = false;
        }
      }
      if (s < target_time) {
        step_into(a, b);
        std::swap(a, b);
      }
    }
    int d = edge_differential(rule, at(a, 0), at(a, 1));
    bool lhs = fca ? d == 1 : d == -1;
    ++rep.configs;
    rep.events += lhs;
    rep.mismatches += lhs != rhs;
  };
  if (mode == CheckMode::exhaustive) {
    do check();
    while (detail::next_coloring(cfg.colors));
  } else {
    Stream rng(seed, 0);
    for (std::size_t k = 0; k < samples; ++k) {
      for (auto& v : cfg.colors) v = static_cast<std::uint8_t>(rng.below(3));
      check();
    }
  }
  return rep;
}

struct ExcitationReport {
  std::size_t t_max = 0;
  std::size_t configs = 0;
  std::size_t comparisons = 0;
  std::size_t mismatches = 0;
};

// CCA on the segment [0, L]: the number of color changes of site 0 up to
// time t equals max(0, max_{0<=s<=t-1} sum_{x=0}^{s} dX_0(x,x+1)).
inline void excitation_compare(const RingConfig& start, std::size_t t_max, ExcitationReport& rep) {
  std::vector<long> prefix_max(t_max + 1, 0);
  long sum = 0, best = 0;
  for (std::size_t s = 0; s < t_max; ++s) {
    sum += mod3_differential(start.colors[s], start.colors[s + 1]);
    best = std::max(best, sum);
    prefix_max[s + 1] = best;
  }
  RingConfig a = start, b;
  long ne = 0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    step_into(a, b);
    ne += b.colors[0] != a.colors[0];
    std::swap(a, b);
    ++rep.comparisons;
    rep.mismatches += ne != prefix_max[t];
  }
  ++rep.configs;
}

inline ExcitationReport excitation_identity_check(std::size_t t_max, CheckMode mode,
                                                  std::size_t samples = 1000,
                                                  SeedSpec seed = {}) {
  ExcitationReport rep;
  rep.t_max = t_max;
  if (mode == CheckMode::exhaustive) {
    for (std::size_t t = 1; t <= t_max; ++t) {
      const std::size_t sites = t + 3;
      if (detail::pow3(sites) > kExhaustiveLimit)
        throw Error(Errc::too_large, "exhaustive excitation check too large");
      RingConfig c;
      c.rule = Rule::cca;
      c.topology = Topology::segment;
      c.colors.assign(sites, 0);
      do excitation_compare(c, t, rep);
      while (detail::next_coloring(c.colors));
    }
  } else {
    for (std::size_t k = 0; k < samples; ++k)
      excitation_compare(random_init(t_max + 3, seed, Rule::cca, Topology::segment, k), t_max, rep);
  }
  return rep;
}

}  // namespace persist
