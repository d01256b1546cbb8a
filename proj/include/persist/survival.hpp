#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "persist/chain.hpp"
#include "persist/error.hpp"
#include "persist/parallel.hpp"
#include "persist/paths.hpp"
#include "persist/rng.hpp"

namespace persist {

struct SeriesPoint {
  double t = 0;
  double value = 0;
  double stderr_ = 0;
};

// ============================================================================
// Exact survival table
// ============================================================================

// Q^x(j,t) = P(j + S_1 >= 0, ..., j + S_t >= 0 | X_0 = x) for levels
// level_lo..level_hi and times 0..t_max.
struct SurvivalTable {
  int level_lo = 0;
  int level_hi = 0;
  std::size_t t_max = 0;
  std::size_t n = 0;
  std::optional<int> cap;
  bool truncated = false;
  Eigen::VectorXd pi;
  std::vector<double> q;

  std::size_t levels() const { return static_cast<std::size_t>(level_hi - level_lo + 1); }
  double at(std::size_t x, int j, std::size_t t) const {
    return q[(t * levels() + static_cast<std::size_t>(j - level_lo)) * n + x];
  }
  double marginal(int j, std::size_t t) const {
    double s = 0;
    for (std::size_t x = 0; x < n; ++x) s += pi(static_cast<Eigen::Index>(x)) * at(x, j, t);
    return s;
  }
  // pi-weighted average over a set of start states.
  double average(const std::vector<int>& states, int j, std::size_t t) const {
    double s = 0, w = 0;
    for (int x : states) {
      double p = pi(x);
      s += p * at(static_cast<std::size_t>(x), j, t);
      w += p;
    }
    return s / w;
  }
};

namespace detail {

struct Step {
  int to;
  int g;
  double p;
};

inline std::vector<std::vector<Step>> integer_rows(const WalkModel& model) {
  const std::size_t n = model.size();
  std::vector<std::vector<Step>> rows(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      double p = model.P()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
      if (p > 0) rows[x].push_back({static_cast<int>(y), model.gi(y), p});
    }
  return rows;
}

}  // namespace detail

// Rolling two-slice recursion
//   Q^x(l,s) = sum_y 1{l+g(y) >= 0} P(x,y) Q^y(l+g(y), s-1).
// Slice s stores levels 0..width(s); higher levels are exactly 1 (a walk
// that cannot fall below 0 in s steps) or assumed 1 above the cap.
inline SurvivalTable survival_dp(const WalkModel& model, int level_lo, int level_hi,
                                 std::size_t t_max, std::optional<int> cap = std::nullopt) {
  require_integer(model);
  if (level_lo > level_hi) throw Error(Errc::invalid_argument, "empty level range");
  if (cap && *cap < level_hi)
    throw Error(Errc::cap_too_low, "cap " + std::to_string(*cap) + " is below level " +
                                       std::to_string(level_hi));
  const std::size_t n = model.size();
  const long gmax = std::max(0L, static_cast<long>(model.g_max));
  const long gneg = std::max(0L, -static_cast<long>(model.g_min));
  const long hi = std::max(level_hi, 0);
  const auto T = static_cast<long>(t_max);

  auto width = [&](long s) -> long {
    long w = hi + (T - s) * gmax;
    w = std::min(w, s * gneg - 1);
    if (cap) w = std::min(w, static_cast<long>(*cap));
    return w;
  };
  long wmax = -1;
  for (long s = 0; s <= T; ++s) wmax = std::max(wmax, width(s));

  SurvivalTable tab;
  tab.level_lo = level_lo;
  tab.level_hi = level_hi;
  tab.t_max = t_max;
  tab.n = n;
  tab.cap = cap;
  tab.truncated = cap && static_cast<long>(*cap) < hi + T * gmax && T * gneg - 1 > *cap;
  tab.pi = model.pi.pi;
  const std::size_t L = tab.levels();
  tab.q.assign((t_max + 1) * L * n, 1.0);

  auto rows = detail::integer_rows(model);
  std::vector<double> prev(static_cast<std::size_t>(wmax + 1) * n, 1.0);
  std::vector<double> cur(prev.size(), 1.0);
  long wprev = width(0);

  auto read = [&](const std::vector<double>& buf, long w, long l, int y) {
    if (l < 0) return 0.0;
    if (l > w) return 1.0;
    return buf[static_cast<std::size_t>(l) * n + static_cast<std::size_t>(y)];
  };

  for (long s = 1; s <= T; ++s) {
    const long w = width(s);
    for (long l = 0; l <= w; ++l) {
      double* out = cur.data() + static_cast<std::size_t>(l) * n;
      for (std::size_t x = 0; x < n; ++x) {
        double acc = 0;
        for (const auto& st : rows[x]) acc += st.p * read(prev, wprev, l + st.g, st.to);
        out[x] = acc;
      }
    }
    double* row = tab.q.data() + static_cast<std::size_t>(s) * L * n;
    for (int j = level_lo; j <= level_hi; ++j) {
      double* out = row + static_cast<std::size_t>(j - level_lo) * n;
      for (std::size_t x = 0; x < n; ++x) {
        if (j < 0) {
          double acc = 0;
          for (const auto& st : rows[x]) acc += st.p * read(prev, wprev, j + st.g, st.to);
          out[x] = acc;
        } else {
          out[x] = read(cur, w, j, static_cast<int>(x));
        }
      }
    }
    std::swap(prev, cur);
    wprev = w;
  }
  return tab;
}

inline SurvivalTable survival_dp(const WalkModel& model, int j, std::size_t t_max,
                                 std::optional<int> cap = std::nullopt) {
  return survival_dp(model, j, j, t_max, cap);
}

// ============================================================================
// Brute-force oracle
// ============================================================================

// Stationary (or fixed-start) probability that level + S_k >= 0 for k = 1..t.
inline double survival_bruteforce(const WalkModel& model, double level, std::size_t t,
                                  std::optional<int> start = std::nullopt) {
  Eigen::VectorXd init = model.pi.pi;
  if (start) {
    init.setZero();
    init(*start) = 1.0;
  }
  long double total = 0;
  for_each_path(model.P(), init, t, [&](const std::vector<int>& states, long double p) {
    double s = level;
    for (std::size_t k = 1; k <= t; ++k) {
      s += model.g(states[k]);
      if (s < 0) return;
    }
    total += p;
  });
  return static_cast<double>(total);
}

// ============================================================================
// Integrated survival
// ============================================================================

// Integer g: the integrand r -> Q(-r,t) is constant on (m-1, m], so the
// integral is sum_{m=1}^{g_max} Q(-m,t). Returns entries for t = 1..t_max.
inline std::vector<double> integrated_survival_dp(const WalkModel& model, std::size_t t_max,
                                                  std::optional<int> cap = std::nullopt) {
  require_integer(model);
  const int gmax = static_cast<int>(model.g_max);
  std::vector<double> out(t_max, 0.0);
  if (gmax <= 0 || t_max == 0) return out;
  auto tab = survival_dp(model, -gmax, -1, t_max, cap);
  for (std::size_t t = 1; t <= t_max; ++t) {
    double s = 0;
    for (int m = 1; m <= gmax; ++m) s += tab.marginal(-m, t);
    out[t - 1] = s;
  }
  return out;
}

struct McOptions {
  std::size_t samples = 100000;
  SeedSpec seed{};
  unsigned workers = 1;
  std::size_t block = 8192;
};

// Estimates E[(min_{1<=k<=t} W_k)^+] for t = 1..t_max from one set of
// stationary forward paths; a path stops once its minimum is <= 0.
inline std::vector<SeriesPoint> integrated_survival_mc(const WalkModel& model, std::size_t t_max,
                                                       const McOptions& opt) {
  if (t_max < 1) throw Error(Errc::invalid_argument, "t must be at least 1");
  SparseKernel kernel(model.P());
  InitialSampler init(model.pi.pi);
  const std::size_t blocks = (opt.samples + opt.block - 1) / opt.block;
  std::vector<std::vector<double>> sums(blocks), sq(blocks);
  for_each_block(blocks, opt.workers, [&](std::size_t b) {
    std::vector<double> s(t_max, 0.0), s2(t_max, 0.0);
    Stream rng(opt.seed, b);
    std::size_t count = std::min(opt.block, opt.samples - b * opt.block);
    for (std::size_t i = 0; i < count; ++i) {
      int x = init.sample(rng.uniform());
      double w = 0, m = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < t_max; ++k) {
        x = kernel.sample(static_cast<std::size_t>(x), rng.uniform());
        w += model.g(x);
        m = std::min(m, w);
        if (m <= 0) break;
        s[k] += m;
        s2[k] += m * m;
      }
    }
    sums[b] = std::move(s);
    sq[b] = std::move(s2);
  });
  std::vector<SeriesPoint> out(t_max);
  const double N = static_cast<double>(opt.samples);
  for (std::size_t k = 0; k < t_max; ++k) {
    double s = 0, s2 = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      s += sums[b][k];
      s2 += sq[b][k];
    }
    double mean = s / N;
    double var = N > 1 ? std::max(0.0, (s2 - N * mean * mean) / (N - 1)) : 0.0;
    out[k] = {static_cast<double>(k + 1), mean, std::sqrt(var / N)};
  }
  return out;
}

// ============================================================================
// Backward running maximum
// ============================================================================

struct MaxStats {
  std::size_t t = 0;
  double estimate = 0;
  double stderr_ = 0;
  std::size_t samples = 0;
};

// Entries t = 0..t_max of E[max_{0<=k<=t} S<-_k], driven by the reversed chain.
inline std::vector<MaxStats> backward_max_mc(const WalkModel& model, std::size_t t_max,
                                             const McOptions& opt) {
  SparseKernel kernel(reverse(model).P);
  InitialSampler init(model.pi.pi);
  const std::size_t blocks = (opt.samples + opt.block - 1) / opt.block;
  std::vector<std::vector<double>> sums(blocks), sq(blocks);
  for_each_block(blocks, opt.workers, [&](std::size_t b) {
    std::vector<double> s(t_max + 1, 0.0), s2(t_max + 1, 0.0);
    Stream rng(opt.seed, b);
    std::size_t count = std::min(opt.block, opt.samples - b * opt.block);
    for (std::size_t i = 0; i < count; ++i) {
      double w = 0, m = 0;
      int x = -1;
      for (std::size_t k = 1; k <= t_max; ++k) {
        x = k == 1 ? init.sample(rng.uniform())
                   : kernel.sample(static_cast<std::size_t>(x), rng.uniform());
        w += model.g(x);
        m = std::max(m, w);
        s[k] += m;
        s2[k] += m * m;
      }
    }
    sums[b] = std::move(s);
    sq[b] = std::move(s2);
  });
  std::vector<MaxStats> out(t_max + 1);
  const double N = static_cast<double>(opt.samples);
  for (std::size_t k = 0; k <= t_max; ++k) {
    double s = 0, s2 = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      s += sums[b][k];
      s2 += sq[b][k];
    }
    double mean = s / N;
    double var = N > 1 ? std::max(0.0, (s2 - N * mean * mean) / (N - 1)) : 0.0;
    out[k] = {k, mean, std::sqrt(var / N), opt.samples};
  }
  return out;
}

// Exact E[M<-(t)] for integer g via the law of (X_{-k}, M<-(k) - S<-(k)).
inline std::vector<double> backward_max_exact(const WalkModel& model, std::size_t t_max) {
  require_integer(model);
  const std::size_t n = model.size();
  WalkModel rev = reversed_model(model);
  auto rows = detail::integer_rows(rev);
  const long gneg = std::max(0L, -static_cast<long>(model.g_min));
  const std::size_t D = static_cast<std::size_t>(gneg) * t_max + 1;
  std::vector<double> cur(D * n, 0.0), nxt(D * n, 0.0);
  std::vector<double> out(t_max + 1, 0.0);
  if (t_max == 0) return out;
  double em = 0;
  for (std::size_t x = 0; x < n; ++x) {
    int g = model.gi(x);
    double p = model.pi.pi(static_cast<Eigen::Index>(x));
    em += p * std::max(g, 0);
    cur[static_cast<std::size_t>(std::max(-g, 0)) * n + x] += p;
  }
  out[1] = em;
  std::size_t dtop = static_cast<std::size_t>(gneg);
  for (std::size_t k = 2; k <= t_max; ++k) {
    std::fill(nxt.begin(), nxt.begin() + static_cast<long>(std::min(D, dtop + gneg + 1) * n), 0.0);
    double gain = 0;
    for (std::size_t d = 0; d <= dtop; ++d)
      for (std::size_t x = 0; x < n; ++x) {
        double mass = cur[d * n + x];
        if (mass == 0) continue;
        for (const auto& st : rows[x]) {
          long dd = static_cast<long>(d) - st.g;
          double pm = mass * st.p;
          if (dd < 0) {
            gain += pm * static_cast<double>(-dd);
            dd = 0;
          }
          nxt[static_cast<std::size_t>(dd) * n + static_cast<std::size_t>(st.to)] += pm;
        }
      }
    em += gain;
    out[k] = em;
    dtop = std::min(D - 1, dtop + static_cast<std::size_t>(gneg));
    std::swap(cur, nxt);
  }
  return out;
}

// ============================================================================
// Duality
// ============================================================================

enum class DualityMode { automatic, exact, mc };

struct DualityReport {
  double r = 0;
  std::size_t t = 0;
  double lhs = 0;
  double lhs_stderr = 0;
  double rhs_t = 0;
  double rhs_t_minus_1 = 0;
  bool exact = true;
};

inline int ceil_level(double r) { return static_cast<int>(std::ceil(r - 1e-12)); }

inline double survival_marginal(const WalkModel& model, double level, std::size_t t) {
  if (model.integer_valued) {
    // Integer walks only see the integer part of a real start level.
    int j = static_cast<int>(std::floor(level + 1e-12));
    return survival_dp(model, j, t).marginal(j, t);
  }
  return survival_bruteforce(model, level, t);
}

// P(M<-(t) - M<-(t-1) >= r) next to Q(-r,t) and Q(-r,t-1).
inline DualityReport duality_gap(const WalkModel& model, double r, std::size_t t,
                                 DualityMode mode = DualityMode::automatic,
                                 const McOptions& opt = {}) {
  if (t < 1) throw Error(Errc::invalid_argument, "t must be at least 1");
  if (!(r > 0)) throw Error(Errc::invalid_argument, "r must be positive");
  DualityReport rep;
  rep.r = r;
  rep.t = t;
  bool exact = mode == DualityMode::exact ||
               (mode == DualityMode::automatic &&
                count_paths(model.P(), model.pi.pi, t - 1) <= kEnumerationLimit);
  if (exact) {
    // Forward path Y_0..Y_{t-1} read backwards is X_{-1}, ..., X_{-t}.
    long double lhs = 0;
    for_each_path(model.P(), model.pi.pi, t - 1, [&](const std::vector<int>& y, long double p) {
      double s = 0, m_prev = 0, m = 0;
      for (std::size_t k = 1; k <= t; ++k) {
        s += model.g(y[t - k]);
        if (k <= t - 1) m_prev = std::max(m_prev, s);
        m = std::max(m, s);
      }
      if (m - m_prev >= r) lhs += p;
    });
    rep.lhs = static_cast<double>(lhs);
    rep.exact = true;
  } else {
    SparseKernel kernel(reverse(model).P);
    InitialSampler init(model.pi.pi);
    const std::size_t blocks = (opt.samples + opt.block - 1) / opt.block;
    std::vector<double> hits(blocks, 0.0);
    for_each_block(blocks, opt.workers, [&](std::size_t b) {
      Stream rng(opt.seed, b);
      std::size_t count = std::min(opt.block, opt.samples - b * opt.block);
      double h = 0;
      for (std::size_t i = 0; i < count; ++i) {
        double s = 0, m_prev = 0, m = 0;
        int x = -1;
        for (std::size_t k = 1; k <= t; ++k) {
          x = k == 1 ? init.sample(rng.uniform())
                     : kernel.sample(static_cast<std::size_t>(x), rng.uniform());
          s += model.g(x);
          if (k <= t - 1) m_prev = std::max(m_prev, s);
          m = std::max(m, s);
        }
        if (m - m_prev >= r) h += 1;
      }
      hits[b] = h;
    });
    double h = 0;
    for (double v : hits) h += v;
    const double N = static_cast<double>(opt.samples);
    rep.lhs = h / N;
    rep.lhs_stderr = N > 1 ? std::sqrt(rep.lhs * (1 - rep.lhs) / (N - 1)) : 0.0;
    rep.exact = false;
  }
  rep.rhs_t = survival_marginal(model, -r, t);
  rep.rhs_t_minus_1 = survival_marginal(model, -r, t - 1);
  return rep;
}

// ============================================================================
// Square-root fits
// ============================================================================

enum class FitMode { fixed_half, free_exponent };

struct SqrtFit {
  double C = 0;
  std::optional<double> rho;
  double window_lo = 0;
  double window_hi = 0;
  double residual = 0;
  std::size_t points = 0;
  FitMode mode = FitMode::fixed_half;
};

// fixed_half: C = mean of value*sqrt(t), residual = sample std dev of value*sqrt(t).
// free_exponent: log value = log C - rho log t by least squares, residual = RMS.
inline SqrtFit sqrt_fit(const std::vector<SeriesPoint>& series, double lo, double hi,
                        FitMode mode = FitMode::fixed_half) {
  std::vector<SeriesPoint> pts;
  for (const auto& p : series)
    if (p.t >= lo && p.t <= hi) pts.push_back(p);
  if (pts.empty() || (mode == FitMode::free_exponent && pts.size() < 2))
    throw Error(Errc::empty_window, "no usable points in the fit window");
  for (const auto& p : pts)
    if (!(p.value > 0) || !(p.t > 0))
      throw Error(Errc::nonpositive_value, "non-positive entry at t=" + std::to_string(p.t));
  SqrtFit fit;
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.points = pts.size();
  fit.mode = mode;
  const double N = static_cast<double>(pts.size());
  if (mode == FitMode::fixed_half) {
    double s = 0, s2 = 0;
    for (const auto& p : pts) s += p.value * std::sqrt(p.t);
    fit.C = s / N;
    for (const auto& p : pts) {
      double d = p.value * std::sqrt(p.t) - fit.C;
      s2 += d * d;
    }
    fit.residual = N > 1 ? std::sqrt(s2 / (N - 1)) : 0.0;
  } else {
    double sx = 0, sy = 0;
    for (const auto& p : pts) {
      sx += std::log(p.t);
      sy += std::log(p.value);
    }
    double mx = sx / N, my = sy / N, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      double dx = std::log(p.t) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(p.value) - my);
    }
    if (!(sxx > 0)) throw Error(Errc::empty_window, "fit window spans a single time");
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    fit.rho = -slope;
    fit.C = std::exp(intercept);
    double rss = 0;
    for (const auto& p : pts) {
      double e = std::log(p.value) - (intercept + slope * std::log(p.t));
      rss += e * e;
    }
    fit.residual = std::sqrt(rss / N);
  }
  return fit;
}

// ============================================================================
// Skip-free identities
// ============================================================================

struct CollapseReport {
  std::size_t t_max = 0;
  // |sum_m Q(-m,t) - Q(-1,t)| and |E M<-(t) - E M<-(t-1) - Q(-1,t)| maxima.
  double max_integral_error = 0;
  double max_max_increment_error = 0;
};

inline CollapseReport skipfree_collapse(const WalkModel& model, std::size_t t_max) {
  require_integer(model);
  if (model.g_max != 1) throw Error(Errc::not_skip_free, "largest step must be +1");
  auto integral = integrated_survival_dp(model, t_max);
  auto tab = survival_dp(model, -1, t_max);
  auto em = backward_max_exact(model, t_max);
  CollapseReport rep;
  rep.t_max = t_max;
  for (std::size_t t = 1; t <= t_max; ++t) {
    double q = tab.marginal(-1, t);
    rep.max_integral_error = std::max(rep.max_integral_error, std::abs(integral[t - 1] - q));
    rep.max_max_increment_error =
        std::max(rep.max_max_increment_error, std::abs(em[t] - em[t - 1] - q));
  }
  return rep;
}

inline bool is_iid(const WalkModel& model) {
  const auto& P = model.P();
  for (Eigen::Index x = 1; x < P.rows(); ++x)
    if ((P.row(x) - P.row(0)).cwiseAbs().maxCoeff() > 1e-15) return false;
  return true;
}

struct HittingTimeReport {
  int k = 0;
  std::size_t t_max = 0;
  // first passage to -(k+1) at t, against ((k+1)/t) P(S_t = -(k+1)).
  std::vector<double> first_passage;
  std::vector<double> ballot;
  double max_error = 0;
  // Q(k,t) against ((k+1)/t) P(S_t = k+1), for the record.
  double max_verbatim_gap = 0;
};

inline HittingTimeReport hitting_time_check(const WalkModel& model, int k, std::size_t t_max) {
  require_integer(model);
  if (!is_iid(model)) throw Error(Errc::not_iid, "increments must be independent");
  if (model.g_min != -1) throw Error(Errc::not_skip_free, "smallest step must be -1");
  if (k < 0) throw Error(Errc::invalid_argument, "k must be non-negative");
  // Marginal step law.
  std::vector<std::pair<int, double>> law;
  for (std::size_t y = 0; y < model.size(); ++y) {
    double p = model.P()(0, static_cast<Eigen::Index>(y));
    if (p > 0) law.emplace_back(model.gi(y), p);
  }
  const long gmax = static_cast<long>(model.g_max);
  const long target = -(k + 1);
  const long lo = std::min(-static_cast<long>(t_max), target);
  const long hi = std::max(gmax * static_cast<long>(t_max), static_cast<long>(k + 1));
  const std::size_t W = static_cast<std::size_t>(hi - lo + 1);
  auto idx = [&](long l) { return static_cast<std::size_t>(l - lo); };

  HittingTimeReport rep;
  rep.k = k;
  rep.t_max = t_max;
  rep.first_passage.assign(t_max + 1, 0.0);
  rep.ballot.assign(t_max + 1, 0.0);

  std::vector<double> alive(W, 0.0), free(W, 0.0), a2(W), f2(W);
  alive[idx(0)] = 1.0;
  free[idx(0)] = 1.0;
  auto survival = survival_dp(model, k, t_max);
  for (std::size_t t = 1; t <= t_max; ++t) {
    std::fill(a2.begin(), a2.end(), 0.0);
    std::fill(f2.begin(), f2.end(), 0.0);
    double absorbed = 0;
    for (long l = lo; l <= hi; ++l) {
      double fa = free[idx(l)], aa = alive[idx(l)];
      if (fa == 0 && aa == 0) continue;
      for (auto [v, p] : law) {
        long m = l + v;
        if (m < lo || m > hi) continue;
        f2[idx(m)] += fa * p;
        if (aa == 0) continue;
        if (m == target)
          absorbed += aa * p;
        else
          a2[idx(m)] += aa * p;
      }
    }
    std::swap(alive, a2);
    std::swap(free, f2);
    rep.first_passage[t] = absorbed;
    rep.ballot[t] = static_cast<double>(k + 1) / static_cast<double>(t) * free[idx(target)];
    rep.max_error = std::max(rep.max_error, std::abs(rep.first_passage[t] - rep.ballot[t]));
    double verbatim = static_cast<double>(k + 1) / static_cast<double>(t) * free[idx(k + 1)];
    rep.max_verbatim_gap =
        std::max(rep.max_verbatim_gap, std::abs(survival.marginal(k, t) - verbatim));
  }
  return rep;
}

}  // namespace persist
