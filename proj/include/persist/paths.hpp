#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "persist/error.hpp"

namespace persist {

inline constexpr double kEnumerationLimit = 1e7;

// Number of positive-probability sequences (X_0, ..., X_t) with X_0 drawn
// from the support of init.
inline double count_paths(const Eigen::MatrixXd& P, const Eigen::VectorXd& init, std::size_t t) {
  const Eigen::Index n = P.rows();
  Eigen::VectorXd c(n);
  for (Eigen::Index x = 0; x < n; ++x) c(x) = init(x) > 0 ? 1.0 : 0.0;
  Eigen::MatrixXd A = (P.array() > 0).cast<double>();
  for (std::size_t k = 0; k < t; ++k) c = A.transpose() * c;
  return c.sum();
}

// Depth-first enumeration of every positive-probability path of t steps.
// fn(states, prob) receives X_0..X_t and the path probability.
template <class Fn>
void for_each_path(const Eigen::MatrixXd& P, const Eigen::VectorXd& init, std::size_t t, Fn&& fn,
                   double limit = kEnumerationLimit) {
  double count = count_paths(P, init, t);
  if (count > limit)
    throw Error(Errc::too_large, std::to_string(count) + " paths exceed the enumeration limit");
  const Eigen::Index n = P.rows();
  std::vector<int> states(t + 1);
  std::vector<long double> prob(t + 1);
  std::vector<Eigen::Index> next(t + 1);
  for (Eigen::Index x0 = 0; x0 < n; ++x0) {
    if (!(init(x0) > 0)) continue;
    states[0] = static_cast<int>(x0);
    prob[0] = init(x0);
    if (t == 0) {
      fn(states, prob[0]);
      continue;
    }
    std::size_t depth = 1;
    next[1] = 0;
    while (depth > 0) {
      if (next[depth] >= n) {
        --depth;
        if (depth > 0) ++next[depth];
        continue;
      }
      Eigen::Index y = next[depth];
      double p = P(states[depth - 1], y);
      if (!(p > 0)) {
        ++next[depth];
        continue;
      }
      states[depth] = static_cast<int>(y);
      prob[depth] = prob[depth - 1] * p;
      if (depth == t) {
        fn(states, prob[depth]);
        ++next[depth];
      } else {
        ++depth;
        next[depth] = 0;
      }
    }
  }
}

}  // namespace persist
