#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/behavior.hpp"
#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/netgen.hpp"

namespace peerinf {

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

enum class ControlKind { kNone, kTrueLocations, kEstimatedLocations, kAdditive };

/// Which location block, if any, enters the regression as controls.
struct ControlSpec {
  ControlKind kind = ControlKind::kNone;
  Eigen::MatrixXd locations;  // n x width; unused for kNone
  int degree = 1;             // polynomial degree for kAdditive

  static ControlSpec none() { return {}; }
  static ControlSpec true_locations(Eigen::MatrixXd c) { return {ControlKind::kTrueLocations, std::move(c), 1}; }
  static ControlSpec estimated_locations(Eigen::MatrixXd c) {
    return {ControlKind::kEstimatedLocations, std::move(c), 1};
  }
  static ControlSpec additive(Eigen::MatrixXd c, int degree) {
    return {ControlKind::kAdditive, std::move(c), degree};
  }
};

struct DesignOptions {
  /// Stack every transition t -> t+1. Rows are not corrected for serial correlation.
  bool pooled = false;
  /// Transition used when not pooled.
  int transition = 0;
};

/// Columns: intercept, lag, exposure, then the control block.
struct DesignMatrix {
  Eigen::VectorXd response;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::vector<std::pair<std::size_t, int>> row_index;  // (node, t) of each row
  /// For each control column kept: (location column, power).
  std::vector<std::pair<int, int>> control_source;
  int control_width = 0;  // control columns requested before dropping
  std::vector<std::string> warnings;

  static constexpr Eigen::Index kIntercept = 0;
  static constexpr Eigen::Index kLag = 1;
  static constexpr Eigen::Index kExposure = 2;
};

/// Per-coordinate polynomial basis c, c^2, ..., c^degree (no interactions).
inline Eigen::MatrixXd polynomial_basis(const Eigen::MatrixXd& c, int degree) {
  if (degree < 1) throw DomainError("polynomial degree must be >= 1");
  Eigen::MatrixXd out(c.rows(), c.cols() * degree);
  for (Eigen::Index a = 0; a < c.cols(); ++a)
    for (int p = 1; p <= degree; ++p) out.col(a * degree + (p - 1)) = c.col(a).array().pow(p).matrix();
  return out;
}

inline DesignMatrix build_design(const BehaviorPanel& panel, const AdjacencyMatrix& A, const ControlSpec& control,
                                 const DesignOptions& opts = {}) {
  const auto n = static_cast<Eigen::Index>(A.size());
  if (panel.Y.rows() != n) throw ShapeError("panel and graph disagree on node count");
  if (panel.T < 1 || panel.Y.cols() != panel.T + 1) throw ShapeError("panel must hold T+1 columns");
  if (!opts.pooled && (opts.transition < 0 || opts.transition >= panel.T))
    throw DomainError("transition index out of range");

  DesignMatrix dm;
  Eigen::MatrixXd ctrl;
  std::vector<std::pair<int, int>> source;
  std::vector<std::string> names;
  if (control.kind != ControlKind::kNone) {
    if (control.locations.rows() != n) throw ShapeError("control locations must have one row per node");
    const char* prefix = control.kind == ControlKind::kTrueLocations ? "c" : "chat";
    if (control.kind == ControlKind::kAdditive) {
      ctrl = polynomial_basis(control.locations, control.degree);
      for (int a = 0; a < control.locations.cols(); ++a)
        for (int p = 1; p <= control.degree; ++p) {
          source.emplace_back(a, p);
          names.push_back("chat" + std::to_string(a + 1) + "^" + std::to_string(p));
        }
    } else {
      ctrl = control.locations;
      for (int a = 0; a < control.locations.cols(); ++a) {
        source.emplace_back(a, 1);
        names.push_back(prefix + std::to_string(a + 1));
      }
    }
  }
  dm.control_width = static_cast<int>(ctrl.cols());

  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < ctrl.cols(); ++c) {
    if (!ctrl.col(c).allFinite()) throw DomainError("control column " + names[static_cast<std::size_t>(c)] + " is not finite");
    if ((ctrl.col(c).array() == ctrl(0, c)).all()) {
      dm.warnings.push_back("control column " + names[static_cast<std::size_t>(c)] + " is constant and was dropped");
      continue;
    }
    keep.push_back(c);
  }

  const int t0 = opts.pooled ? 0 : opts.transition;
  const int t1 = opts.pooled ? panel.T : opts.transition + 1;
  const Eigen::Index m = n * (t1 - t0);
  const auto p = static_cast<Eigen::Index>(3 + keep.size());
  dm.response.resize(m);
  dm.X.resize(m, p);
  dm.row_index.reserve(static_cast<std::size_t>(m));
  Eigen::Index row = 0;
  for (int t = t0; t < t1; ++t) {
    const Eigen::VectorXd y = panel.Y.col(t);
    const Eigen::VectorXd exposure = A.multiply(y);
    for (Eigen::Index i = 0; i < n; ++i, ++row) {
      dm.response[row] = panel.Y(i, t + 1);
      dm.X(row, DesignMatrix::kIntercept) = 1.0;
      dm.X(row, DesignMatrix::kLag) = y[i];
      dm.X(row, DesignMatrix::kExposure) = exposure[i];
      for (std::size_t q = 0; q < keep.size(); ++q) dm.X(row, static_cast<Eigen::Index>(3 + q)) = ctrl(i, keep[q]);
      dm.row_index.emplace_back(static_cast<std::size_t>(i), t);
    }
  }
  dm.column_names = {"intercept", "lag", "exposure"};
  for (Eigen::Index c : keep) {
    dm.column_names.push_back(names[static_cast<std::size_t>(c)]);
    dm.control_source.push_back(source[static_cast<std::size_t>(c)]);
  }
  return dm;
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct RegressionFit {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd std_errors;
  double residual_variance = 0.0;
  bool condition_flag = false;
  std::vector<std::string> column_names;
  Eigen::VectorXd residuals;
  std::string strategy;
  std::vector<std::pair<int, int>> control_source;
  int control_width = 0;

  double beta_hat() const { return coeffs[DesignMatrix::kExposure]; }

  /// Control coefficients at full width; dropped columns read as zero.
  /// Only meaningful for linear (power 1) controls.
  Eigen::VectorXd control_coefficients() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(control_width);
    for (std::size_t q = 0; q < control_source.size(); ++q)
      if (control_source[q].second == 1) g[control_source[q].first] = coeffs[static_cast<Eigen::Index>(3 + q)];
    return g;
  }
};

inline constexpr double kRankTolerance = 1e-12;
inline constexpr double kConditionTolerance = 1e-10;

/// OLS by column-pivoted Householder QR; classical standard errors.
inline RegressionFit fit_ols(const DesignMatrix& design) {
  const Eigen::MatrixXd& X = design.X;
  const Eigen::Index m = X.rows(), p = X.cols();
  if (design.response.size() != m) throw ShapeError("response length differs from design rows");
  if (m <= p) throw DomainError("fit_ols needs more rows than columns");
  if (!X.allFinite() || !design.response.allFinite()) throw DomainError("design contains non-finite entries");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < p) {
    std::ostringstream os;
    os << "design is rank deficient (rank " << qr.rank() << " of " << p << "); dependent columns:";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index c = qr.rank(); c < p; ++c) {
      const auto idx = static_cast<std::size_t>(perm[c]);
      os << ' ' << (idx < design.column_names.size() ? design.column_names[idx] : std::to_string(idx));
    }
    throw RankDeficiencyError(os.str());
  }

  RegressionFit fit;
  fit.column_names = design.column_names;
  fit.control_source = design.control_source;
  fit.control_width = design.control_width;
  fit.coeffs = qr.solve(design.response);
  fit.residuals = design.response - X * fit.coeffs;
  fit.residual_variance = fit.residuals.squaredNorm() / static_cast<double>(m - p);

  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_perm = Rinv * Rinv.transpose();
  const Eigen::MatrixXd P = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = P * cov_perm * P.transpose();
  fit.std_errors = (fit.residual_variance * xtx_inv.diagonal()).cwiseSqrt();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  fit.condition_flag = sv[sv.size() - 1] < kConditionTolerance * sv[0];
  return fit;
}

// ---------------------------------------------------------------------------
// Control strategies
// ---------------------------------------------------------------------------

enum class Strategy { kNaive, kOracle, kProxy, kAdditive };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kNaive: return "naive";
    case Strategy::kOracle: return "oracle";
    case Strategy::kProxy: return "proxy";
    case Strategy::kAdditive: return "additive";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "naive") return Strategy::kNaive;
  if (s == "oracle") return Strategy::kOracle;
  if (s == "proxy") return Strategy::kProxy;
  if (s == "additive") return Strategy::kAdditive;
  throw ConfigError("unknown strategy '" + s + "'");
}

struct InfluenceInputs {
  const Eigen::MatrixXd* true_locations = nullptr;
  const Eigen::MatrixXd* estimated_locations = nullptr;
  int additive_degree = 2;
  DesignOptions design;
};

inline ControlSpec control_for(Strategy s, const InfluenceInputs& in) {
  switch (s) {
    case Strategy::kNaive: return ControlSpec::none();
    case Strategy::kOracle:
      if (!in.true_locations) throw ConfigError("oracle strategy requires true locations");
      return ControlSpec::true_locations(*in.true_locations);
    case Strategy::kProxy:
      if (!in.estimated_locations) throw ConfigError("proxy strategy requires estimated locations");
      return ControlSpec::estimated_locations(*in.estimated_locations);
    case Strategy::kAdditive:
      if (!in.estimated_locations) throw ConfigError("additive strategy requires estimated locations");
      return ControlSpec::additive(*in.estimated_locations, in.additive_degree);
  }
  throw ConfigError("unknown strategy");
}

/// Fits the effective model under one control strategy; beta_hat() is the
/// peer-influence estimate.
inline RegressionFit estimate_influence(const BehaviorPanel& panel, const AdjacencyMatrix& A, Strategy strategy,
                                        const InfluenceInputs& in) {
  auto fit = fit_ols(build_design(panel, A, control_for(strategy, in), in.design));
  fit.strategy = to_string(strategy);
  return fit;
}

// ---------------------------------------------------------------------------
// Covariance diagnostics (community setting)
// ---------------------------------------------------------------------------

/// One replication of a community-setting ensemble. `estimate` must already
/// be aligned to the labels of `truth`.
struct DiagnosticReplication {
  AdjacencyMatrix A;
  CommunityAssignment truth;
  CommunityAssignment estimate;
  Eigen::VectorXd alter_behavior;  // Y(., t)
  bool exact_recovery = false;
};

struct DiagnosticOptions {
  std::size_t min_cell_count = 30;
  int batches = 20;
};

struct CovarianceCell {
  int label_i = 0;
  int label_j = 0;
  std::size_t pairs = 0;
  bool populated = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double diff_se = 0.0;  // batch-means standard error of lhs - rhs
};

struct CovarianceDiagnostic {
  std::vector<CovarianceCell> cells;
  std::vector<std::string> flagged;
};

namespace detail {

/// Sufficient statistics for covariances on one stratum.
struct PairMoments {
  double count = 0.0;
  double su = 0.0, sv = 0.0, suv = 0.0;
  Eigen::VectorXd sci, scj;
  Eigen::MatrixXd scicj;

  explicit PairMoments(Eigen::Index dim = 0)
      : sci(Eigen::VectorXd::Zero(dim)), scj(Eigen::VectorXd::Zero(dim)), scicj(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(double u, double v, const Eigen::VectorXd& ci, const Eigen::VectorXd& cj) {
    count += 1.0;
    su += u;
    sv += v;
    suv += u * v;
    sci += ci;
    scj += cj;
    scicj += ci * cj.transpose();
  }
  void merge(const PairMoments& o) {
    count += o.count;
    su += o.su;
    sv += o.sv;
    suv += o.suv;
    sci += o.sci;
    scj += o.scj;
    scicj += o.scicj;
  }
  double cov_uv() const { return suv / count - (su / count) * (sv / count); }
  Eigen::VectorXd mean_ci() const { return sci / count; }
  Eigen::VectorXd mean_cj() const { return scj / count; }
  Eigen::MatrixXd cov_cicj() const { return scicj / count - mean_ci() * mean_cj().transpose(); }
};

inline double quad(const Eigen::VectorXd& g, const Eigen::MatrixXd& m) { return g.dot(m * g); }

inline std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  const double b = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= b;
  if (xs.size() < 2) return {mean, std::numeric_limits<double>::infinity()};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (b - 1.0) / b)};
}

inline int batch_of(std::size_t r, std::size_t total, int batches) {
  return static_cast<int>((r * static_cast<std::size_t>(batches)) / std::max<std::size_t>(1, total));
}

inline void check_replication(const DiagnosticReplication& rep, int k) {
  const std::size_t n = rep.A.size();
  if (rep.truth.size() != n || rep.estimate.size() != n || static_cast<std::size_t>(rep.alter_behavior.size()) != n)
    throw ShapeError("diagnostic replication has inconsistent sizes");
  if (rep.truth.k != k || rep.estimate.k != k) throw ShapeError("diagnostic replications disagree on k");
}

}  // namespace detail

/// Estimates, per stratum (estimated label of i, estimated label of j) over
/// linked pairs A_ij = 1, both
///   lhs = Cov(Y_j, g1'C_i - g0'Chat_i)  and  rhs = g1' Cov(C_i, C_j) g1.
/// Standard errors come from batch means over replications.
inline CovarianceDiagnostic lemma2_diagnostic(const std::vector<DiagnosticReplication>& reps,
                                              const Eigen::VectorXd& gamma1, const Eigen::VectorXd& gamma0,
                                              const DiagnosticOptions& opts = {}) {
  if (reps.empty()) throw DomainError("diagnostic needs at least one replication");
  const int k = reps.front().truth.k;
  const Eigen::Index dim = k - 1;
  if (gamma1.size() != dim || gamma0.size() != dim) throw ShapeError("gamma vectors must have length k-1");
  const int batches = std::max(1, std::min<int>(opts.batches, static_cast<int>(reps.size())));
  std::vector<detail::PairMoments> acc(static_cast<std::size_t>(k * k * batches), detail::PairMoments(dim));

  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& rep = reps[r];
    detail::check_replication(rep, k);
    const Eigen::MatrixXd C = dummy_encode(rep.truth);
    const Eigen::MatrixXd Chat = dummy_encode(rep.estimate);
    const int b = detail::batch_of(r, reps.size(), batches);
    for (std::size_t i = 0; i < rep.A.size(); ++i) {
      const Eigen::VectorXd ci = C.row(static_cast<Eigen::Index>(i)).transpose();
      const double err = gamma1.dot(ci) - gamma0.dot(Chat.row(static_cast<Eigen::Index>(i)).transpose());
      for (std::size_t j : rep.A.neighbors(i)) {
        const int cell = rep.estimate.sigma[i] * k + rep.estimate.sigma[j];
        acc[static_cast<std::size_t>(cell * batches + b)].add(rep.alter_behavior[static_cast<Eigen::Index>(j)], err, ci,
                                                              C.row(static_cast<Eigen::Index>(j)).transpose());
      }
    }
  }

  CovarianceDiagnostic out;
  for (int cell = 0; cell < k * k; ++cell) {
    CovarianceCell c;
    c.label_i = cell / k;
    c.label_j = cell % k;
    detail::PairMoments pooled(dim);
    std::vector<double> lhs_b, rhs_b, diff_b;
    for (int b = 0; b < batches; ++b) {
      const auto& m = acc[static_cast<std::size_t>(cell * batches + b)];
      pooled.merge(m);
      if (m.count < 2.0) continue;
      const double l = m.cov_uv(), rr = detail::quad(gamma1, m.cov_cicj());
      lhs_b.push_back(l);
      rhs_b.push_back(rr);
      diff_b.push_back(l - rr);
    }
    c.pairs = static_cast<std::size_t>(pooled.count);
    c.populated = c.pairs >= opts.min_cell_count && diff_b.size() >= 2;
    if (pooled.count >= 1.0) {
      c.lhs = pooled.cov_uv();
      c.rhs = detail::quad(gamma1, pooled.cov_cicj());
    }
    if (diff_b.size() >= 2) {
      c.lhs_se = detail::mean_and_se(lhs_b).second;
      c.rhs_se = detail::mean_and_se(rhs_b).second;
      c.diff_se = detail::mean_and_se(diff_b).second;
    }
    if (!c.populated) {
      std::ostringstream os;
      os << "stratum (" << c.label_i + 1 << "," << c.label_j + 1 << ") has " << c.pairs << " pairs; excluded";
      out.flagged.push_back(os.str());
    }
    out.cells.push_back(c);
  }
  return out;
}

struct DecompositionCell {
  int label_i = 0;
  int label_j = 0;
  std::size_t pairs = 0;
  std::size_t failure_pairs = 0;
  bool populated = false;
  Eigen::MatrixXd lhs;  // Cov(C_i, C_j | stratum)
  Eigen::MatrixXd rhs;  // total-covariance decomposition through the recovery event
  double lhs_quad = 0.0;
  double rhs_quad = 0.0;
  double gap = 0.0;     // lhs_quad - rhs_quad
  double gap_se = 0.0;  // batch-means standard error of the gap
};

struct DecompositionReport {
  double delta_hat = 0.0;
  bool trivial = false;  // delta_hat == 0: the decomposition is identically zero
  std::vector<DecompositionCell> cells;
  std::vector<std::string> flagged;
};

namespace detail {

/// delta * Cov(.|G=0) + delta (1 - delta) (Ctilde_i - Chat_i)(Ctilde_j - Chat_j)'
inline Eigen::MatrixXd decomposition_rhs(double delta, const PairMoments& failures, const Eigen::VectorXd& chat_i,
                                         const Eigen::VectorXd& chat_j) {
  const Eigen::Index dim = chat_i.size();
  if (delta == 0.0 || failures.count < 1.0) return Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::VectorXd ti = failures.mean_ci(), tj = failures.mean_cj();
  return delta * failures.cov_cicj() + delta * (1.0 - delta) * (ti - chat_i) * (tj - chat_j).transpose();
}

inline Eigen::VectorXd label_dummy(int label, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k - 1);
  if (label < k - 1) v[label] = 1.0;
  return v;
}

}  // namespace detail

/// Checks the decomposition of Cov(C_i, C_j | Chat_i, Chat_j) through the
/// exact-recovery indicator G, using plug-in moments from the replications
/// with G = 0 and the supplied failure probability.
inline DecompositionReport lemma3_diagnostic(const std::vector<DiagnosticReplication>& reps, double delta_hat,
                                             const Eigen::VectorXd& gamma1, const DiagnosticOptions& opts = {}) {
  if (reps.empty()) throw DomainError("diagnostic needs at least one replication");
  if (!(delta_hat >= 0.0 && delta_hat <= 1.0)) throw DomainError("delta_hat must lie in [0,1]");
  const int k = reps.front().truth.k;
  const Eigen::Index dim = k - 1;
  if (gamma1.size() != dim) throw ShapeError("gamma1 must have length k-1");
  const int batches = std::max(1, std::min<int>(opts.batches, static_cast<int>(reps.size())));
  const auto slots = static_cast<std::size_t>(k * k * batches);
  std::vector<detail::PairMoments> all(slots, detail::PairMoments(dim)), fail(slots, detail::PairMoments(dim));

  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& rep = reps[r];
    detail::check_replication(rep, k);
    const Eigen::MatrixXd C = dummy_encode(rep.truth);
    const int b = detail::batch_of(r, reps.size(), batches);
    for (std::size_t i = 0; i < rep.A.size(); ++i) {
      const Eigen::VectorXd ci = C.row(static_cast<Eigen::Index>(i)).transpose();
      for (std::size_t j : rep.A.neighbors(i)) {
        const auto slot = static_cast<std::size_t>((rep.estimate.sigma[i] * k + rep.estimate.sigma[j]) * batches + b);
        const Eigen::VectorXd cj = C.row(static_cast<Eigen::Index>(j)).transpose();
        all[slot].add(0.0, 0.0, ci, cj);
        if (!rep.exact_recovery) fail[slot].add(0.0, 0.0, ci, cj);
      }
    }
  }

  DecompositionReport out;
  out.delta_hat = delta_hat;
  out.trivial = delta_hat == 0.0;
  for (int cell = 0; cell < k * k; ++cell) {
    DecompositionCell c;
    c.label_i = cell / k;
    c.label_j = cell % k;
    const Eigen::VectorXd chat_i = detail::label_dummy(c.label_i, k), chat_j = detail::label_dummy(c.label_j, k);
    detail::PairMoments pooled(dim), pooled_fail(dim);
    std::vector<double> gaps;
    for (int b = 0; b < batches; ++b) {
      const auto slot = static_cast<std::size_t>(cell * batches + b);
      pooled.merge(all[slot]);
      pooled_fail.merge(fail[slot]);
      if (all[slot].count < 2.0) continue;
      const double l = detail::quad(gamma1, all[slot].cov_cicj());
      const double rr = detail::quad(gamma1, detail::decomposition_rhs(delta_hat, fail[slot], chat_i, chat_j));
      gaps.push_back(l - rr);
    }
    c.pairs = static_cast<std::size_t>(pooled.count);
    c.failure_pairs = static_cast<std::size_t>(pooled_fail.count);
    c.populated = c.pairs >= opts.min_cell_count && gaps.size() >= 2;
    c.lhs = pooled.count >= 1.0 ? pooled.cov_cicj() : Eigen::MatrixXd::Zero(dim, dim);
    c.rhs = detail::decomposition_rhs(delta_hat, pooled_fail, chat_i, chat_j);
    c.lhs_quad = detail::quad(gamma1, c.lhs);
    c.rhs_quad = detail::quad(gamma1, c.rhs);
    c.gap = c.lhs_quad - c.rhs_quad;
    c.gap_se = gaps.size() >= 2 ? detail::mean_and_se(gaps).second : 0.0;
    if (!c.populated) {
      std::ostringstream os;
      os << "stratum (" << c.label_i + 1 << "," << c.label_j + 1 << ") has " << c.pairs << " pairs; excluded";
      out.flagged.push_back(os.str());
    }
    out.cells.push_back(std::move(c));
  }
  return out;
}

}  // namespace peerinf
