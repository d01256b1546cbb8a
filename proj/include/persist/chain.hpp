#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "persist/error.hpp"
#include "persist/rng.hpp"

namespace persist {

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kMeanZeroTol = 1e-10;
inline constexpr double kStationaryTol = 1e-10;

struct MarkovSpec {
  std::vector<std::string> labels;
  Eigen::MatrixXd P;

  std::size_t size() const { return static_cast<std::size_t>(P.rows()); }
};

struct StationaryDist {
  Eigen::VectorXd pi;
};

struct WalkModel {
  MarkovSpec spec;
  StationaryDist pi;
  Eigen::VectorXd g;
  bool integer_valued = false;
  double g_max = 0;
  double g_min = 0;

  std::size_t size() const { return spec.size(); }
  const Eigen::MatrixXd& P() const { return spec.P; }

  int state_index(std::string_view label) const {
    for (std::size_t i = 0; i < spec.labels.size(); ++i)
      if (spec.labels[i] == label) return static_cast<int>(i);
    return -1;
  }
  int gi(std::size_t x) const { return static_cast<int>(g[static_cast<Eigen::Index>(x)]); }
};

inline MarkovSpec make_spec(Eigen::MatrixXd P, std::vector<std::string> labels = {}) {
  if (labels.empty())
    for (Eigen::Index i = 0; i < P.rows(); ++i) labels.push_back(std::to_string(i));
  return MarkovSpec{std::move(labels), std::move(P)};
}

// ============================================================================
// Validation
// ============================================================================

inline void validate(const MarkovSpec& spec) {
  const auto& P = spec.P;
  const Eigen::Index n = P.rows();
  if (n < 1 || P.cols() != n)
    throw Error(Errc::not_stochastic, "transition matrix must be square and non-empty");
  if (spec.labels.size() != static_cast<std::size_t>(n))
    throw Error(Errc::invalid_argument, "label count does not match state count");
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double p = P(i, j);
      if (!std::isfinite(p) || p < 0)
        throw Error(Errc::negative_entry,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is negative",
                    static_cast<long>(i));
      if (p > 1)
        throw Error(Errc::not_stochastic,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ") exceeds 1",
                    static_cast<long>(i));
      s += p;
    }
    if (std::abs(s - 1.0) > kRowSumTol)
      throw Error(Errc::not_stochastic,
                  "row " + std::to_string(i) + " sums to " + std::to_string(s),
                  static_cast<long>(i));
  }
  // Strong connectivity: everything reachable from state 0 both along the
  // positive entries and along their reversal.
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        double p = dir == 0 ? P(u, v) : P(v, u);
        if (p > 0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    for (Eigen::Index v = 0; v < n; ++v)
      if (!seen[static_cast<std::size_t>(v)])
        throw Error(Errc::reducible, "state " + std::to_string(v) + " is not " +
                                         (dir == 0 ? "reachable from" : "able to reach") +
                                         " state 0",
                    static_cast<long>(v));
  }
}

// ============================================================================
// Stationary law and reversal
// ============================================================================

inline StationaryDist stationary(const MarkovSpec& spec) {
  const Eigen::Index n = spec.P.rows();
  Eigen::MatrixXd A = spec.P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw Error(Errc::singular, "stationary system is singular");
  Eigen::VectorXd pi = lu.solve(b);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < -kStationaryTol) throw Error(Errc::singular, "stationary solve produced a negative mass");
    pi(i) = std::max(pi(i), 0.0);
  }
  pi /= pi.sum();
  double resid = (pi.transpose() * spec.P - pi.transpose()).cwiseAbs().maxCoeff();
  if (resid > kStationaryTol)
    throw Error(Errc::singular, "stationary residual " + std::to_string(resid));
  return StationaryDist{pi};
}

inline MarkovSpec reverse(const MarkovSpec& spec, const StationaryDist& pi) {
  const Eigen::Index n = spec.P.rows();
  for (Eigen::Index y = 0; y < n; ++y)
    if (!(pi.pi(y) > 0))
      throw Error(Errc::zero_mass_state, "state " + std::to_string(y) + " has zero mass",
                  static_cast<long>(y));
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index y = 0; y < n; ++y)
    for (Eigen::Index x = 0; x < n; ++x) R(y, x) = pi.pi(x) * spec.P(x, y) / pi.pi(y);
  for (Eigen::Index y = 0; y < n; ++y) R.row(y) /= R.row(y).sum();
  return MarkovSpec{spec.labels, R};
}

inline MarkovSpec reverse(const WalkModel& model) { return reverse(model.spec, model.pi); }

// ============================================================================
// Walk models
// ============================================================================

inline WalkModel make_walk_model(MarkovSpec spec, const Eigen::VectorXd& g) {
  validate(spec);
  if (g.size() != spec.P.rows())
    throw Error(Errc::invalid_argument, "functional length does not match state count");
  WalkModel m;
  m.pi = stationary(spec);
  m.spec = std::move(spec);
  m.g = g;
  double mean = m.pi.pi.dot(g);
  if (std::abs(mean) > kMeanZeroTol)
    throw Error(Errc::mean_not_zero, "stationary mean of g is " + std::to_string(mean));
  m.integer_valued = true;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g(i))) throw Error(Errc::invalid_argument, "g is not finite");
    if (g(i) != std::round(g(i)) || std::abs(g(i)) > 1e9) m.integer_valued = false;
  }
  m.g_max = g.maxCoeff();
  m.g_min = g.minCoeff();
  return m;
}

inline WalkModel reversed_model(const WalkModel& model) {
  WalkModel r = model;
  r.spec = reverse(model);
  return r;
}

inline WalkModel scaled_model(const WalkModel& model, double c) {
  return make_walk_model(model.spec, c * model.g);
}

inline void require_integer(const WalkModel& model) {
  if (!model.integer_valued) throw Error(Errc::non_integer_g, "g must be integer valued");
}

// Cov[g(X_0), g(X_k)] by k matrix-vector products.
inline double autocovariance_exact(const WalkModel& model, std::size_t k) {
  const Eigen::VectorXd& pi = model.pi.pi;
  Eigen::VectorXd gc = model.g.array() - pi.dot(model.g);
  Eigen::VectorXd v = gc;
  for (std::size_t i = 0; i < k; ++i) v = model.P() * v;
  return pi.dot(gc.cwiseProduct(v));
}

// ============================================================================
// Sparse kernels and sampling
// ============================================================================

struct Transition {
  int to;
  double p;
  double cum;
};

class SparseKernel {
 public:
  SparseKernel() = default;
  explicit SparseKernel(const Eigen::MatrixXd& P) {
    const Eigen::Index n = P.rows();
    offsets_.push_back(0);
    for (Eigen::Index x = 0; x < n; ++x) {
      double cum = 0;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (P(x, y) > 0) {
          cum += P(x, y);
          entries_.push_back({static_cast<int>(y), P(x, y), cum});
        }
      }
      // Guard the last cumulative bound against rounding in the row sum.
      entries_.back().cum = 2.0;
      offsets_.push_back(entries_.size());
    }
  }

  std::size_t size() const { return offsets_.size() - 1; }
  const Transition* begin(std::size_t x) const { return entries_.data() + offsets_[x]; }
  const Transition* end(std::size_t x) const { return entries_.data() + offsets_[x + 1]; }

  int sample(std::size_t x, double u) const {
    const Transition* t = begin(x);
    while (u >= t->cum) ++t;
    return t->to;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Transition> entries_;
};

class InitialSampler {
 public:
  explicit InitialSampler(const Eigen::VectorXd& pi) {
    double cum = 0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
      cum += pi(i);
      cum_.push_back(cum);
    }
    cum_.back() = 2.0;
  }
  int sample(double u) const {
    return static_cast<int>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

enum class Direction { forward, backward };

struct StationaryPath {
  // states[0] = X_0; states[k] = X_k forward, X_{-k} backward.
  std::vector<int> states;
  // increments[k-1] = g(states[k]).
  std::vector<double> increments;
};

inline StationaryPath sample_stationary_path(const WalkModel& model, std::size_t t,
                                             SeedSpec seed, Direction direction,
                                             std::uint64_t stream = 0) {
  SparseKernel kernel(direction == Direction::forward ? model.P() : reverse(model).P);
  InitialSampler init(model.pi.pi);
  Stream rng(seed, stream);
  StationaryPath path;
  path.states.reserve(t + 1);
  path.increments.reserve(t);
  int x = init.sample(rng.uniform());
  path.states.push_back(x);
  for (std::size_t k = 0; k < t; ++k) {
    x = kernel.sample(static_cast<std::size_t>(x), rng.uniform());
    path.states.push_back(x);
    path.increments.push_back(model.g(x));
  }
  return path;
}

}  // namespace persist
