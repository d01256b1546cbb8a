#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "persist/chain.hpp"
#include "persist/error.hpp"
#include "persist/rules.hpp"

namespace persist {

struct PresetParams {
  double alpha = 0.75;
  std::vector<double> values;
  std::vector<double> probs;
};

inline WalkModel iid_model(const std::vector<double>& values, const std::vector<double>& probs) {
  if (values.empty() || values.size() != probs.size())
    throw Error(Errc::invalid_argument, "iid preset needs matching values and probs");
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd P(n, n);
  std::vector<std::string> labels;
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) P(i, j) = probs[static_cast<std::size_t>(j)];
    g(i) = values[static_cast<std::size_t>(i)];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", g(i));
    labels.emplace_back(buf);
  }
  return make_walk_model(make_spec(P, labels), g);
}

inline WalkModel srw_model() { return iid_model({-1, 1}, {0.5, 0.5}); }

// Keeps the sign of the previous step with probability alpha.
inline WalkModel persistent_model(double alpha) {
  double beta = 1.0 - alpha;
  Eigen::MatrixXd P(2, 2);
  P << alpha, beta, beta, alpha;
  Eigen::VectorXd g(2);
  g << -1, 1;
  return make_walk_model(make_spec(P, {"-1", "1"}), g);
}

inline WalkModel example32_model() {
  Eigen::MatrixXd P(3, 3);
  P << 2.0 / 3, 0, 1.0 / 3,
       1.0 / 6, 1.0 / 2, 1.0 / 3,
       1.0 / 4, 1.0 / 4, 1.0 / 2;
  Eigen::VectorXd g(3);
  g << -1, 0, 1;
  return make_walk_model(make_spec(P, {"-1", "0", "1"}), g);
}

inline WalkModel cca_model() { return iid_model({-1, 0, 1}, {1.0 / 3, 1.0 / 3, 1.0 / 3}); }

// Chain of length-w windows of an iid uniform 3-coloring, shifted one site
// per step. State index = base-3 number with the first color most significant.
inline WalkModel window_model(std::size_t width,
                              const std::function<double(const std::vector<int>&)>& g_of) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < width; ++i) n *= 3;
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd g(N);
  std::vector<std::string> labels;
  std::vector<int> colors(width);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t v = s;
    for (std::size_t i = width; i-- > 0;) {
      colors[i] = static_cast<int>(v % 3);
      v /= 3;
    }
    std::string label;
    for (int c : colors) label += static_cast<char>('0' + c);
    labels.push_back(label);
    g(static_cast<Eigen::Index>(s)) = g_of(colors);
    std::size_t shifted = (s * 3) % n;
    for (std::size_t b = 0; b < 3; ++b)
      P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(shifted + b)) = 1.0 / 3;
  }
  return make_walk_model(make_spec(P, labels), g);
}

inline WalkModel ghm_pair_model() {
  return window_model(2, [](const std::vector<int>& c) {
    if (c[0] == 0 && c[1] == 1) return -1.0;
    if (c[0] == 1 && c[1] == 0) return 1.0;
    return 0.0;
  });
}

inline WalkModel fca_quad_model() {
  return window_model(4, [](const std::vector<int>& c) {
    auto u = [](int v) { return static_cast<std::uint8_t>(v); };
    int left = fca_update(u(c[0]), u(c[1]), u(c[2]));
    int right = fca_update(u(c[1]), u(c[2]), u(c[3]));
    return static_cast<double>(mod3_differential(left, right));
  });
}

inline WalkModel triple_ex35_model() {
  return window_model(3, [](const std::vector<int>& c) {
    if (c[0] == 1 && c[1] == 2 && c[2] == 0) return -2.0;
    if (c[0] == 0 && c[1] == 2 && c[2] == 1) return 2.0;
    return static_cast<double>(mod3_differential(c[1], c[2]));
  });
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"srw",  "persistent", "example32", "iid",
                                              "cca",  "ghm-pair",   "fca-quad",  "triple-ex35"};
  return names;
}

inline WalkModel build_preset(const std::string& name, const PresetParams& params = {}) {
  if (name == "srw") return srw_model();
  if (name == "persistent") {
    if (!(params.alpha >= 0 && params.alpha <= 1))
      throw Error(Errc::invalid_argument, "alpha must lie in [0,1]");
    return persistent_model(params.alpha);
  }
  if (name == "example32") return example32_model();
  if (name == "iid") return iid_model(params.values, params.probs);
  if (name == "cca") return cca_model();
  if (name == "ghm-pair") return ghm_pair_model();
  if (name == "fca-quad") return fca_quad_model();
  if (name == "triple-ex35") return triple_ex35_model();
  throw Error(Errc::unknown_preset, "no preset named '" + name + "'");
}

}  // namespace persist
