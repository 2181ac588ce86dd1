#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/rng.hpp"
#include "peerinf/spectral.hpp"

namespace peerinf {

struct StructuralCoeffs {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta_influence = 0.0;
  Eigen::VectorXd gamma1;  // loading on the latent location encoding
  Eigen::VectorXd gamma2;  // loading on the network-irrelevant covariates X
  double sigma_eps = 1.0;
};

/// Simulated outcomes: column t of Y holds Y(., t) for t = 0..T.
struct BehaviorPanel {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd X;
  StructuralCoeffs coeffs;
  int T = 0;
  double spectral_radius = 0.0;
  std::vector<std::string> warnings;
};

inline void validate(const StructuralCoeffs& c) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(c.alpha0) || !finite(c.alpha1) || !finite(c.beta_influence) || !finite(c.sigma_eps))
    throw ValidationError("structural coefficients must be finite");
  if (!c.gamma1.allFinite() || !c.gamma2.allFinite()) throw ValidationError("gamma vectors must be finite");
  if (c.sigma_eps < 0.0) throw ValidationError("sigma_eps must be >= 0");
}

/// Spectral radius of alpha1 * I + beta * A, the one-step propagation operator.
inline SpectralRadiusEstimate stability_check(const AdjacencyMatrix& A, double alpha1, double beta) {
  return spectral_radius(A, alpha1, beta);
}

inline constexpr double kOverflowGuard = 1e12;

/// Runs the linear structural equation forward T transitions.
///   Y(i,0)   = g1'C_i + g2'X_i + eps
///   Y(i,t+1) = a0 + a1 Y(i,t) + b sum_j A_ij Y(j,t) + g1'C_i + g2'X_i + eps
/// X is i.i.d. standard normal with p = len(gamma2) columns, drawn before any
/// noise; eps is fresh N(0, sigma_eps^2) for every (i,t).
inline BehaviorPanel simulate_panel(const AdjacencyMatrix& A, const Eigen::MatrixXd& C_encoded,
                                    const StructuralCoeffs& coeffs, int T, std::uint64_t seed) {
  validate(coeffs);
  const auto n = static_cast<Eigen::Index>(A.size());
  if (T < 1) throw DomainError("simulate_panel requires T >= 1");
  if (C_encoded.rows() != n) throw ShapeError("location encoding must have one row per node");
  if (C_encoded.cols() != coeffs.gamma1.size()) {
    std::ostringstream os;
    os << "gamma1 has length " << coeffs.gamma1.size() << " but the location encoding has "
       << C_encoded.cols() << " columns";
    throw ShapeError(os.str());
  }

  BehaviorPanel panel;
  panel.coeffs = coeffs;
  panel.T = T;
  const auto radius = stability_check(A, coeffs.alpha1, coeffs.beta_influence);
  panel.spectral_radius = radius.radius;
  if (radius.radius >= 1.0) {
    std::ostringstream os;
    os << "propagation operator has spectral radius " << radius.radius << " >= 1";
    panel.warnings.push_back(os.str());
  }
  if (!radius.converged) panel.warnings.push_back("spectral radius estimate did not converge");

  Rng rng(seed);
  const auto p = coeffs.gamma2.size();
  panel.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < p; ++c) panel.X(i, c) = standard_normal(rng);

  auto noise = [&]() { return coeffs.sigma_eps == 0.0 ? 0.0 : coeffs.sigma_eps * standard_normal(rng); };

  const Eigen::VectorXd nodal = C_encoded * coeffs.gamma1 + panel.X * coeffs.gamma2;
  panel.Y.resize(n, T + 1);
  for (Eigen::Index i = 0; i < n; ++i) panel.Y(i, 0) = nodal[i] + noise();
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd prev = panel.Y.col(t);
    const Eigen::VectorXd exposure = A.multiply(prev);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = coeffs.alpha0 + coeffs.alpha1 * prev[i] + coeffs.beta_influence * exposure[i] +
                       nodal[i] + noise();
      if (!std::isfinite(y) || std::abs(y) > kOverflowGuard) {
        std::ostringstream os;
        os << "behavior recursion exceeded the overflow guard at t=" << t + 1
           << "; spectral radius of alpha1*I + beta*A is " << radius.radius;
        throw InstabilityError(os.str(), radius.radius);
      }
      panel.Y(i, t + 1) = y;
    }
  }
  return panel;
}

}  // namespace peerinf
