#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/inference.hpp"
#include "peerinf/netgen.hpp"

namespace peerinf {

/// gamma' M gamma.
inline double bias_quadform(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& m) {
  if (m.rows() != gamma.size() || m.cols() != gamma.size()) throw ShapeError("bias_quadform: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index a = 0; a < gamma.size(); ++a)
    for (Eigen::Index b = 0; b < gamma.size(); ++b) s += gamma[a] * m(a, b) * gamma[b];
  return s;
}

/// Algebraic form of the conditional covariance through the recovery event.
enum class BoundForm {
  /// delta * (Cov_{G=0} + (1 - delta)(Ct_i - Ch_i)(Ct_j - Ch_j)'), the law of
  /// total covariance with G; a valid outer bound.
  kTotalCovariance,
  /// delta * (Cov_{G=0} + (1 - delta) Ct_i Ct_j' - Ch_i Ch_j' - Ch_i Ct_j' - Ct_i Ch_j').
  kFourProduct,
};

struct BoundInput {
  double delta = 0.0;
  Eigen::VectorXd gamma1;
  Eigen::VectorXd chat_i;
  Eigen::VectorXd chat_j;
  double cov_g0_cap = 0.25;
  BoundForm form = BoundForm::kTotalCovariance;
};

struct BoundResult {
  double bound_value = 0.0;
  Eigen::VectorXd argmax_i;
  Eigen::VectorXd argmax_j;
  bool per_pair = true;
  double delta = 0.0;
  std::string gamma_source = "supplied";
};

namespace detail {

inline bool is_simplex_vertex(const Eigen::VectorXd& v) {
  int ones = 0;
  for (Eigen::Index a = 0; a < v.size(); ++a) {
    if (v[a] == 1.0) ++ones;
    else if (v[a] != 0.0) return false;
  }
  return ones <= 1;
}

/// Vertices of the (k-1)-simplex of expected dummy vectors: e_1..e_{k-1} and 0.
inline std::vector<Eigen::VectorXd> simplex_vertices(Eigen::Index dim) {
  std::vector<Eigen::VectorXd> out;
  for (Eigen::Index a = 0; a < dim; ++a) out.push_back(Eigen::VectorXd::Unit(dim, a));
  out.push_back(Eigen::VectorXd::Zero(dim));
  return out;
}

}  // namespace detail

/// The covariance matrix whose quadratic form is bounded, for given C-tilde
/// values and a fixed G=0 covariance.
inline Eigen::MatrixXd conditional_covariance_form(const BoundInput& in, const Eigen::MatrixXd& cov_g0,
                                                   const Eigen::VectorXd& ct_i, const Eigen::VectorXd& ct_j) {
  const double d = in.delta;
  if (in.form == BoundForm::kTotalCovariance)
    return d * (cov_g0 + (1.0 - d) * (ct_i - in.chat_i) * (ct_j - in.chat_j).transpose());
  return d * (cov_g0 + (1.0 - d) * ct_i * ct_j.transpose() - in.chat_i * in.chat_j.transpose() -
              in.chat_i * ct_j.transpose() - ct_i * in.chat_j.transpose());
}

inline void validate(const BoundInput& in) {
  if (!(in.delta >= 0.0 && in.delta <= 1.0)) throw ValidationError("delta must lie in [0,1]");
  if (!(in.cov_g0_cap >= 0.0 && in.cov_g0_cap <= 0.25)) throw ValidationError("cov_g0_cap must lie in [0, 1/4]");
  const auto dim = in.gamma1.size();
  if (in.chat_i.size() != dim || in.chat_j.size() != dim) throw ShapeError("bound inputs disagree in dimension");
  if (!in.gamma1.allFinite()) throw ValidationError("gamma must be finite");
  if (!detail::is_simplex_vertex(in.chat_i) || !detail::is_simplex_vertex(in.chat_j))
    throw ValidationError("observed dummy vectors must be simplex vertices");
}

/// Worst case of |gamma' Cov(C_i, C_j | Chat_i, Chat_j) gamma| over C-tilde in
/// the simplex and over G=0 covariances with entries capped at cov_g0_cap.
/// For each sign of the cap term the objective is bilinear in (Ct_i, Ct_j), so
/// enumerating vertex pairs is exact.
inline BoundResult max_bias_bound(const BoundInput& in) {
  validate(in);
  const Eigen::Index dim = in.gamma1.size();
  const auto vertices = detail::simplex_vertices(dim);
  Eigen::VectorXd sign(dim);
  for (Eigen::Index a = 0; a < dim; ++a) sign[a] = in.gamma1[a] >= 0.0 ? 1.0 : -1.0;
  const Eigen::MatrixXd extreme = in.cov_g0_cap * sign * sign.transpose();

  BoundResult best;
  best.delta = in.delta;
  best.bound_value = -1.0;
  for (const auto& ti : vertices)
    for (const auto& tj : vertices)
      for (double s : {1.0, -1.0}) {
        const double v = std::abs(bias_quadform(in.gamma1, conditional_covariance_form(in, s * extreme, ti, tj)));
        if (v > best.bound_value) {
          best.bound_value = v;
          best.argmax_i = ti;
          best.argmax_j = tj;
        }
      }
  return best;
}

/// Plug-in bound using the fitted control coefficients in place of gamma1.
inline BoundResult bound_with_estimated_gamma(const RegressionFit& fit, double delta_hat, const Eigen::VectorXd& chat_i,
                                              const Eigen::VectorXd& chat_j, double cov_g0_cap = 0.25,
                                              BoundForm form = BoundForm::kTotalCovariance) {
  if (fit.control_width == 0) throw ConfigError("fit has no control block to plug in");
  BoundInput in{delta_hat, fit.control_coefficients(), chat_i, chat_j, cov_g0_cap, form};
  auto r = max_bias_bound(in);
  r.gamma_source = "estimated";
  return r;
}

/// Per-dyad bounds for every (estimated label i, estimated label j).
inline Eigen::MatrixXd pair_bound_table(const Eigen::VectorXd& gamma, double delta, int k, double cov_g0_cap = 0.25,
                                        BoundForm form = BoundForm::kTotalCovariance) {
  Eigen::MatrixXd table(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      BoundInput in{delta, gamma, Eigen::VectorXd::Zero(k - 1), Eigen::VectorXd::Zero(k - 1), cov_g0_cap, form};
      if (a < k - 1) in.chat_i[a] = 1.0;
      if (b < k - 1) in.chat_j[b] = 1.0;
      table(a, b) = max_bias_bound(in).bound_value;
    }
  return table;
}

/// Bound translated to the scale of the influence coefficient: the summed
/// covariance bound over linked dyads, sum_i sum_j A_ij B(l_i, l_j), divided by
/// the squared norm of the exposure column residualized on the other regressors.
inline double influence_bias_bound(const AdjacencyMatrix& A, const CommunityAssignment& estimate,
                                   const DesignMatrix& design, const Eigen::MatrixXd& table) {
  if (estimate.size() != A.size()) throw ShapeError("assignment and graph disagree on node count");
  const Eigen::Index p = design.X.cols();
  Eigen::MatrixXd others(design.X.rows(), p - 1);
  others << design.X.leftCols(DesignMatrix::kExposure), design.X.rightCols(p - DesignMatrix::kExposure - 1);
  const Eigen::VectorXd expo = design.X.col(DesignMatrix::kExposure);
  const Eigen::VectorXd resid = expo - others * others.colPivHouseholderQr().solve(expo);
  const double denom = resid.squaredNorm();
  if (!(denom > 0.0)) throw RankDeficiencyError("exposure is collinear with the other regressors");
  double numer = 0.0;
  for (const auto& [i, t] : design.row_index)
    for (std::size_t j : A.neighbors(i)) numer += table(estimate.sigma[i], estimate.sigma[j]);
  return numer / denom;
}

}  // namespace peerinf
