#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "persist/chain.hpp"
#include "persist/error.hpp"
#include "persist/paths.hpp"
#include "persist/survival.hpp"

namespace persist {

// For targets i = i_lo..j: p^x_{j,i}(y) is the probability that the first
// entrance of j + S into (-inf, i] happens at level i with X = y, within the
// horizon. Walks that enter strictly below i are counted in overshoot; walks
// that have not entered by the horizon (or left the level cap) in tail.
struct HittingKernel {
  std::size_t x = 0;
  int j = 0;
  int i_lo = 0;
  std::size_t horizon = 0;
  std::size_t n = 0;
  std::vector<Eigen::VectorXd> at_level;
  std::vector<double> overshoot;
  std::vector<double> tail;
  std::vector<std::size_t> steps_used;
  // absorbed[i - i_lo][s * n + y]: mass entering at level i at time s, when recorded.
  std::vector<std::vector<double>> absorbed;

  const Eigen::VectorXd& p(int i) const { return at_level[static_cast<std::size_t>(i - i_lo)]; }
  Eigen::VectorXd total() const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& v : at_level) s += v;
    return s;
  }
};

struct KernelOptions {
  std::optional<int> i_lo;
  std::optional<int> level_cap;
  double tail_tol = 0;
  bool record_times = false;
};

inline HittingKernel hitting_kernel(const WalkModel& model, std::size_t x, int j,
                                    std::size_t horizon, const KernelOptions& opt = {}) {
  require_integer(model);
  if (horizon < 1) throw Error(Errc::invalid_argument, "horizon must be at least 1");
  const std::size_t n = model.size();
  const int i_lo = opt.i_lo.value_or(0);
  if (i_lo > j) throw Error(Errc::invalid_argument, "lowest target exceeds start level");
  const long gmax = std::max(0L, static_cast<long>(model.g_max));
  const long gneg = std::max(0L, -static_cast<long>(model.g_min));
  auto rows = detail::integer_rows(model);

  HittingKernel k;
  k.x = x;
  k.j = j;
  k.i_lo = i_lo;
  k.horizon = horizon;
  k.n = n;
  const std::size_t targets = static_cast<std::size_t>(j - i_lo + 1);
  k.at_level.assign(targets, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  k.overshoot.assign(targets, 0.0);
  k.tail.assign(targets, 0.0);
  k.steps_used.assign(targets, 0);
  k.absorbed.resize(targets);

  long top = j + static_cast<long>(horizon) * gmax;
  if (opt.level_cap) top = std::min(top, static_cast<long>(*opt.level_cap));
  if (top < j) throw Error(Errc::cap_too_low, "level cap below start level");

  for (int i = i_lo; i <= j; ++i) {
    const std::size_t ti = static_cast<std::size_t>(i - i_lo);
    if (opt.record_times) k.absorbed[ti].assign((horizon + 1) * n, 0.0);
    if (i == j) {
      k.at_level[ti](static_cast<Eigen::Index>(x)) = 1.0;
      if (opt.record_times) k.absorbed[ti][x] = 1.0;
      continue;
    }
    const long width = top - i;
    std::vector<double> alive(static_cast<std::size_t>(width) * n, 0.0), next(alive.size(), 0.0);
    alive[static_cast<std::size_t>(j - i - 1) * n + x] = 1.0;
    double escaped = 0, over = 0, tail = 1;
    Eigen::VectorXd& hit = k.at_level[ti];
    std::size_t s = 0;
    for (s = 1; s <= horizon; ++s) {
      const long d_lo = std::max(0L, j - static_cast<long>(s - 1) * gneg - i - 1);
      const long d_hi = std::min(width - 1, j + static_cast<long>(s - 1) * gmax - i - 1);
      const long n_lo = std::max(0L, d_lo - gneg), n_hi = std::min(width - 1, d_hi + gmax);
      std::fill(next.begin() + n_lo * static_cast<long>(n),
                next.begin() + (n_hi + 1) * static_cast<long>(n), 0.0);
      double* rec = opt.record_times ? k.absorbed[ti].data() + s * n : nullptr;
      for (long d = d_lo; d <= d_hi; ++d) {
        const double* a = alive.data() + static_cast<std::size_t>(d) * n;
        for (std::size_t u = 0; u < n; ++u) {
          double mass = a[u];
          if (mass == 0) continue;
          for (const auto& st : rows[u]) {
            long dd = d + st.g;
            double pm = mass * st.p;
            if (dd >= width) {
              escaped += pm;
            } else if (dd >= 0) {
              next[static_cast<std::size_t>(dd) * n + static_cast<std::size_t>(st.to)] += pm;
            } else if (dd == -1) {
              hit(st.to) += pm;
              if (rec) rec[st.to] += pm;
            } else {
              over += pm;
            }
          }
        }
      }
      std::swap(alive, next);
      double alive_mass = 0;
      for (long d = n_lo; d <= n_hi; ++d)
        for (std::size_t u = 0; u < n; ++u) alive_mass += alive[static_cast<std::size_t>(d) * n + u];
      tail = alive_mass + escaped;
      if (opt.tail_tol > 0 && tail < opt.tail_tol) break;
    }
    k.overshoot[ti] = over;
    k.tail[ti] = tail;
    k.steps_used[ti] = std::min(s, horizon);
  }
  return k;
}

// Path-enumeration oracle with the same semantics (no level cap).
inline HittingKernel hitting_kernel_bruteforce(const WalkModel& model, std::size_t x, int j,
                                               std::size_t horizon, int i_lo = 0) {
  const std::size_t n = model.size();
  HittingKernel k;
  k.x = x;
  k.j = j;
  k.i_lo = i_lo;
  k.horizon = horizon;
  k.n = n;
  const std::size_t targets = static_cast<std::size_t>(j - i_lo + 1);
  k.at_level.assign(targets, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  k.overshoot.assign(targets, 0.0);
  k.tail.assign(targets, 0.0);
  k.steps_used.assign(targets, horizon);
  k.absorbed.resize(targets);
  std::vector<long double> hit(targets * n, 0), over(targets, 0), tail(targets, 0);
  Eigen::VectorXd init = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  init(static_cast<Eigen::Index>(x)) = 1.0;
  for_each_path(model.P(), init, horizon, [&](const std::vector<int>& st, long double p) {
    for (int i = i_lo; i <= j; ++i) {
      const std::size_t ti = static_cast<std::size_t>(i - i_lo);
      double level = j;
      bool done = false;
      for (std::size_t s = 0; s <= horizon && !done; ++s) {
        if (s > 0) level += model.g(st[s]);
        if (level <= i) {
          if (level == i)
            hit[ti * n + static_cast<std::size_t>(st[s])] += p;
          else
            over[ti] += p;
          done = true;
        }
      }
      if (!done) tail[ti] += p;
    }
  });
  for (std::size_t ti = 0; ti < targets; ++ti) {
    for (std::size_t y = 0; y < n; ++y)
      k.at_level[ti](static_cast<Eigen::Index>(y)) = static_cast<double>(hit[ti * n + y]);
    k.overshoot[ti] = static_cast<double>(over[ti]);
    k.tail[ti] = static_cast<double>(tail[ti]);
  }
  return k;
}

// ============================================================================
// Asymptotic relations among survival probabilities
// ============================================================================

struct KernelRelationReport {
  std::size_t x = 0;
  int j = 0;
  std::size_t t = 0;
  std::size_t horizon = 0;
  // One-step recursion, max residual over times 1..t.
  double recursion_residual = 0;
  // Kernel relation: Q^x(j,t) against sum_y p^x_j(y) Q^y(0,t).
  double kernel_lhs = 0;
  double kernel_rhs = 0;
  double kernel_ratio = 0;
  double kernel_tail = 0;
  // Exact finite-time decomposition of Q^x(j,t) by the running minimum.
  double decomposition_residual = 0;
  // Recursion composed with the kernel relation: Q^x(j,t) against sum_z A(x,z) Q^z(0,t-1).
  double composed_rhs = 0;
  double composed_ratio = 0;
};

struct KernelRelationOptions {
  std::optional<std::size_t> horizon;
  std::optional<int> level_cap;
};

inline KernelRelationReport kernel_relation_check(const WalkModel& model, std::size_t x, int j, std::size_t t,
                                 const KernelRelationOptions& opt = {}) {
  require_integer(model);
  if (j < 0) throw Error(Errc::invalid_argument, "start level must be non-negative");
  if (t < 1) throw Error(Errc::invalid_argument, "t must be at least 1");
  const std::size_t n = model.size();
  const int gmax = static_cast<int>(model.g_max), gmin = static_cast<int>(model.g_min);
  const std::size_t H = opt.horizon.value_or(t);
  const int lo = std::min(0, j + gmin), hi = std::max(0, j + gmax);
  std::optional<int> cap;
  if (opt.level_cap) cap = std::max(*opt.level_cap, hi + 1);
  auto tab = survival_dp(model, lo, hi, t, cap);

  KernelRelationReport rep;
  rep.x = x;
  rep.j = j;
  rep.t = t;
  rep.horizon = H;
  const auto X = static_cast<Eigen::Index>(x);
  for (std::size_t s = 1; s <= t; ++s) {
    double rhs = 0;
    for (std::size_t y = 0; y < n; ++y) {
      double p = model.P()(X, static_cast<Eigen::Index>(y));
      int l = j + model.gi(y);
      if (p > 0 && l >= 0) rhs += p * tab.at(y, l, s - 1);
    }
    rep.recursion_residual = std::max(rep.recursion_residual, std::abs(tab.at(x, j, s) - rhs));
  }

  KernelOptions kopt;
  kopt.level_cap = opt.level_cap;
  kopt.record_times = true;
  auto kern = hitting_kernel(model, x, j, H, kopt);
  Eigen::VectorXd pj = kern.total();
  rep.kernel_lhs = tab.at(x, j, t);
  for (std::size_t y = 0; y < n; ++y)
    rep.kernel_rhs += pj(static_cast<Eigen::Index>(y)) * tab.at(y, 0, t);
  rep.kernel_ratio = rep.kernel_lhs / rep.kernel_rhs;
  for (double v : kern.tail) rep.kernel_tail = std::max(rep.kernel_tail, v);

  if (H >= t) {
    double acc = 0;
    for (int i = 0; i <= j; ++i) {
      const auto& rec = kern.absorbed[static_cast<std::size_t>(i)];
      for (std::size_t s = 0; s <= t; ++s)
        for (std::size_t y = 0; y < n; ++y) acc += rec[s * n + y] * tab.at(y, 0, t - s);
    }
    rep.decomposition_residual = std::abs(acc - rep.kernel_lhs);
  } else {
    rep.decomposition_residual = std::numeric_limits<double>::quiet_NaN();
  }

  Eigen::VectorXd A = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  KernelOptions kopt3;
  kopt3.level_cap = opt.level_cap;
  for (std::size_t y = 0; y < n; ++y) {
    double p = model.P()(X, static_cast<Eigen::Index>(y));
    int l = j + model.gi(y);
    if (!(p > 0) || l < 0) continue;
    A += p * hitting_kernel(model, y, l, H, kopt3).total();
  }
  for (std::size_t z = 0; z < n; ++z) rep.composed_rhs += A(static_cast<Eigen::Index>(z)) * tab.at(z, 0, t - 1);
  rep.composed_ratio = rep.kernel_lhs / rep.composed_rhs;
  return rep;
}

}  // namespace persist
