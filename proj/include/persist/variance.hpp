#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "persist/chain.hpp"
#include "persist/error.hpp"

namespace persist {

enum class VarianceMethod { series, exact, spectral };

constexpr const char* method_name(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::series: return "series";
    case VarianceMethod::exact: return "exact";
    case VarianceMethod::spectral: return "spectral";
  }
  return "?";
}

struct VarianceReport {
  double gamma2 = 0;
  VarianceMethod method = VarianceMethod::exact;
  // series
  std::size_t lags = 0;
  double tail_bound = 0;
  bool converged = true;
  // spectral
  std::vector<std::complex<double>> eigenvalues;
  double conditioning = 0;
};

// Var + 2 sum_{k<=K} Cov_k, K = first lag closing a run of five sub-tolerance
// covariances. The tail bound extrapolates the last two lags geometrically.
inline VarianceReport gamma2_series(const WalkModel& model, std::size_t k_max = 100000,
                                    double tol = 1e-15) {
  if (k_max < 1) throw Error(Errc::invalid_argument, "k_max must be at least 1");
  const Eigen::VectorXd& pi = model.pi.pi;
  Eigen::VectorXd gc = model.g.array() - pi.dot(model.g);
  Eigen::VectorXd w = pi.cwiseProduct(gc);
  Eigen::VectorXd v = gc;
  VarianceReport rep;
  rep.method = VarianceMethod::series;
  double sum = w.dot(v);
  double prev = 0, last = 0;
  std::size_t quiet = 0;
  rep.converged = false;
  for (std::size_t k = 1; k <= k_max; ++k) {
    v = model.P() * v;
    double c = w.dot(v);
    sum += 2 * c;
    prev = last;
    last = c;
    rep.lags = k;
    quiet = std::abs(c) < tol ? quiet + 1 : 0;
    if (quiet >= 5) {
      rep.converged = true;
      break;
    }
  }
  double ratio = std::abs(prev) > 0 ? std::abs(last / prev) : 0.0;
  rep.tail_bound = ratio < 1 ? 2 * std::abs(last) * ratio / (1 - ratio)
                             : std::numeric_limits<double>::infinity();
  rep.gamma2 = sum;
  return rep;
}

// Fundamental-matrix form: (I - P + 1 pi) h = P g, gamma^2 = <g,g>_pi + 2<g,h>_pi.
inline VarianceReport gamma2_exact(const WalkModel& model) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const Eigen::VectorXd& pi = model.pi.pi;
  Eigen::VectorXd gc = model.g.array() - pi.dot(model.g);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - model.P() +
                      Eigen::VectorXd::Ones(n) * pi.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw Error(Errc::singular_system, "fundamental matrix is singular");
  Eigen::VectorXd h = lu.solve(model.P() * gc);
  VarianceReport rep;
  rep.method = VarianceMethod::exact;
  rep.gamma2 = pi.dot(gc.cwiseProduct(gc)) + 2 * pi.dot(gc.cwiseProduct(h));
  return rep;
}

inline constexpr double kSpectralConditionLimit = 1e8;

// Diagonalizable case: gamma^2 = sum_i p_i g_i^2
//   + 2 Re sum_{lambda_j != 1} lambda_j/(1-lambda_j) (sum_i p_i g_i u_ij)(sum_k v_jk g_k).
inline VarianceReport gamma2_spectral(const WalkModel& model) {
  using cd = std::complex<double>;
  const Eigen::Index n = static_cast<Eigen::Index>(model.size());
  const Eigen::VectorXd& pi = model.pi.pi;
  Eigen::VectorXd gc = model.g.array() - pi.dot(model.g);

  Eigen::EigenSolver<Eigen::MatrixXd> es(model.P());
  if (es.info() != Eigen::Success)
    throw Error(Errc::defective_matrix, "eigendecomposition failed");
  Eigen::VectorXcd lambda = es.eigenvalues();
  Eigen::MatrixXcd U = es.eigenvectors();

  VarianceReport rep;
  rep.method = VarianceMethod::spectral;
  for (Eigen::Index j = 0; j < n; ++j) rep.eigenvalues.push_back(lambda(j));

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(U);
  const auto& sv = svd.singularValues();
  rep.conditioning = sv(n - 1) > 0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (!(rep.conditioning <= kSpectralConditionLimit))
    throw Error(Errc::defective_matrix,
                "eigenvector conditioning " + std::to_string(rep.conditioning));

  // Clusters of nearly equal eigenvalues must have a full eigenspace.
  const double scale = std::max(1.0, model.P().cwiseAbs().maxCoeff());
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (used[static_cast<std::size_t>(j)]) continue;
    std::vector<Eigen::Index> cluster{j};
    used[static_cast<std::size_t>(j)] = 1;
    for (std::size_t c = 0; c < cluster.size(); ++c)
      for (Eigen::Index k = 0; k < n; ++k)
        if (!used[static_cast<std::size_t>(k)] && std::abs(lambda(k) - lambda(cluster[c])) < 1e-6) {
          used[static_cast<std::size_t>(k)] = 1;
          cluster.push_back(k);
        }
    if (cluster.size() < 2) continue;
    cd center = 0;
    for (auto k : cluster) center += lambda(k);
    center /= static_cast<double>(cluster.size());
    Eigen::MatrixXcd A = model.P().cast<cd>() - center * Eigen::MatrixXcd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> s(A);
    std::size_t geometric = 0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (s.singularValues()(k) < 1e-9 * scale) ++geometric;
    if (geometric < cluster.size()) {
      rep.conditioning = std::numeric_limits<double>::infinity();
      throw Error(Errc::defective_matrix,
                  "eigenvalue " + std::to_string(center.real()) + " has algebraic multiplicity " +
                      std::to_string(cluster.size()) + " but geometric multiplicity " +
                      std::to_string(geometric));
    }
  }

  Eigen::MatrixXcd V = U.inverse();
  Eigen::VectorXcd gcc = gc.cast<cd>();
  Eigen::VectorXcd wc = pi.cwiseProduct(gc).cast<cd>();
  Eigen::VectorXcd a = U.transpose() * wc;  // a_j = sum_i p_i g_i u_ij
  Eigen::VectorXcd b = V * gcc;             // b_j = sum_k v_jk g_k
  cd acc = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(lambda(j) - 1.0) < 1e-9) continue;
    acc += lambda(j) / (1.0 - lambda(j)) * a(j) * b(j);
  }
  rep.gamma2 = pi.dot(gc.cwiseProduct(gc)) + 2 * acc.real();
  return rep;
}

}  // namespace persist
