#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/graph.hpp"
#include "peerinf/rng.hpp"

namespace peerinf {

struct SpectralRadiusEstimate {
  double radius = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Spectral radius of (shift * I + scale * A) by power iteration. The
/// estimate is |M x| / |x| for the current normalized iterate, which also
/// settles when the dominant eigenvalues come in +/- pairs.
inline SpectralRadiusEstimate spectral_radius(const AdjacencyMatrix& A, double shift, double scale,
                                              double tol = 1e-12, int max_iter = 20000) {
  const auto n = static_cast<Eigen::Index>(A.size());
  SpectralRadiusEstimate est;
  if (n == 0) {
    est.converged = true;
    return est;
  }
  // Deterministic, strictly positive start so the Perron direction is never orthogonal.
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  x.normalize();
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd y = shift * x + scale * A.multiply(x);
    const double norm = y.norm();
    est.iterations = it;
    est.radius = norm;
    if (norm == 0.0) {
      est.converged = true;
      return est;
    }
    // Two steps of M bring +/- pairs back into phase, so compare every other iterate.
    if (it % 2 == 0) {
      if (std::abs(norm - prev) <= tol * std::max(1.0, norm)) {
        est.converged = true;
        return est;
      }
      prev = norm;
    }
    x = y / norm;
  }
  return est;
}

struct EigenpairsResult {
  Eigen::VectorXd values;   // sorted by decreasing magnitude
  Eigen::MatrixXd vectors;  // columns match values
  int iterations = 0;
  bool converged = false;
};

/// Leading k eigenpairs by magnitude of a symmetric adjacency matrix, by
/// simultaneous (block power) iteration with Rayleigh-Ritz extraction. Ties
/// in magnitude keep the order in which the Ritz pairs settled.
inline EigenpairsResult leading_eigenpairs(const AdjacencyMatrix& A, int k, double tol,
                                           int max_iter, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(A.size());
  const Eigen::Index want = std::min<Eigen::Index>(k, n);
  const Eigen::Index block = std::min<Eigen::Index>(n, want + 4);
  Rng rng(seed);
  Eigen::MatrixXd Q(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < block; ++c) Q(i, c) = standard_normal(rng);
  Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() * Eigen::MatrixXd::Identity(n, block);

  EigenpairsResult out;
  auto ritz = [&](const Eigen::MatrixXd& basis, const Eigen::MatrixXd& image) {
    Eigen::MatrixXd H = basis.transpose() * image;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
    });
    out.values.resize(want);
    out.vectors.resize(n, want);
    for (Eigen::Index c = 0; c < want; ++c) {
      out.values[c] = es.eigenvalues()[order[static_cast<std::size_t>(c)]];
      out.vectors.col(c) = basis * es.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    }
  };

  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd Z = A.multiply(Q);
    out.iterations = it;
    ritz(Q, Z);
    const double scale = std::max(1.0, std::abs(out.values[0]));
    double worst = 0.0;
    for (Eigen::Index c = 0; c < want; ++c) {
      Eigen::VectorXd r = A.multiply(Eigen::VectorXd(out.vectors.col(c))) - out.values[c] * out.vectors.col(c);
      worst = std::max(worst, r.norm());
    }
    if (worst <= tol * scale) {
      out.converged = true;
      break;
    }
    Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Z).householderQ() * Eigen::MatrixXd::Identity(n, block);
  }
  return out;
}

}  // namespace peerinf
