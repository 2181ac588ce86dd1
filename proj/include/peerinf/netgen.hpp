#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/rng.hpp"

namespace peerinf {

/// Regularity descriptor for exact-recovery theory (density floor/ceiling,
/// density spread, block balance, singular-value floor).
struct GmzzDescriptor {
  double a_over_n = 0.0;
  double b_over_n = 0.0;
  double alpha_density = 1.0;
  double beta_balance = 1.0;
  double lambda_sv = 0.0;
};

struct SbmParams {
  int k = 2;
  std::vector<double> rho;
  Eigen::MatrixXd W;
  bool directed = false;
  std::optional<GmzzDescriptor> gmzz;
};

enum class CoordinateFamily { kStandardNormal, kUniform };

/// Latent coordinate distribution: independent coordinates from a named family.
struct CoordinateDistribution {
  CoordinateFamily family = CoordinateFamily::kStandardNormal;
  double lower = 0.0;  // uniform only
  double upper = 1.0;  // uniform only

  static CoordinateDistribution parse(const std::string& name, double lower = 0.0,
                                      double upper = 1.0) {
    if (name == "standard_normal" || name == "normal") return {CoordinateFamily::kStandardNormal, 0.0, 1.0};
    if (name == "uniform") {
      if (!(lower < upper)) throw ConfigError("uniform distribution needs lower < upper");
      return {CoordinateFamily::kUniform, lower, upper};
    }
    throw ConfigError("unsupported coordinate distribution '" + name + "'");
  }

  std::string name() const {
    return family == CoordinateFamily::kStandardNormal ? "standard_normal" : "uniform";
  }

  double draw(Rng& rng) const {
    if (family == CoordinateFamily::kStandardNormal) return standard_normal(rng);
    return lower + (upper - lower) * uniform01(rng);
  }
};

/// Continuous latent space model with logistic-of-distance link
/// w(ci, cj) = logistic(intercept - scale * |ci - cj|).
struct LspParams {
  int d = 2;
  CoordinateDistribution dist;
  double link_intercept = 0.0;
  double link_scale = 1.0;
  bool directed = false;
};

/// Block labels, 0-based internally (label k-1 is the reference block whose
/// dummy row is all zeros). File formats use 1-based labels.
struct CommunityAssignment {
  std::vector<int> sigma;
  int k = 0;

  std::size_t size() const noexcept { return sigma.size(); }
  bool operator==(const CommunityAssignment&) const = default;
};

/// n x d matrix of latent coordinates, one row per node.
struct LatentPositions {
  Eigen::MatrixXd coords;
  std::size_t size() const noexcept { return static_cast<std::size_t>(coords.rows()); }
  int dim() const noexcept { return static_cast<int>(coords.cols()); }
};

inline double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct ValidationReport {
  std::vector<std::string> warnings;
  bool identifiable = true;
};

/// k-th largest singular value of the affinity matrix.
inline double kth_singular_value(const Eigen::MatrixXd& W) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
  const auto& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

/// Throws ValidationError on hard violations; returns soft warnings.
inline ValidationReport validate(const SbmParams& p) {
  ValidationReport report;
  if (p.k < 1) throw ValidationError("k must be >= 1");
  const auto k = static_cast<Eigen::Index>(p.k);
  if (static_cast<int>(p.rho.size()) != p.k) throw ValidationError("rho must have length k");
  if (p.W.rows() != k || p.W.cols() != k) throw ValidationError("W must be k x k");
  double total = 0.0;
  for (double r : p.rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("rho entries must be >= 0");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("rho must sum to 1");
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      const double w = p.W(a, b);
      if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("W entries must lie in [0,1]");
      if (!p.directed && w != p.W(b, a)) throw ValidationError("W must be symmetric for undirected graphs");
    }

  const double sv = kth_singular_value(p.W);
  if (p.k >= 2 && sv <= 1e-12) {
    report.identifiable = false;
    report.warnings.push_back("affinity matrix is singular: blocks are not identifiable");
  }

  if (!p.gmzz) return report;
  const auto& g = *p.gmzz;
  if (p.k < 2) throw ValidationError("regularity descriptor requires k >= 2");
  if (!(0.0 < g.b_over_n && g.b_over_n < g.a_over_n && g.a_over_n < 1.0))
    throw ValidationError("regularity descriptor requires 0 < b/n < a/n < 1");
  if (g.alpha_density < 1.0 || g.beta_balance < 1.0)
    throw ValidationError("alpha_density and beta_balance must be >= 1");

  double min_diag = 1.0, max_diag = 0.0, sum_diag = 0.0;
  double max_off = 0.0, sum_off = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    min_diag = std::min(min_diag, p.W(a, a));
    max_diag = std::max(max_diag, p.W(a, a));
    sum_diag += p.W(a, a);
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      max_off = std::max(max_off, p.W(a, b));
      sum_off += p.W(a, b);
    }
  }
  const double mean_diag = sum_diag / static_cast<double>(k);
  const double mean_off = sum_off / static_cast<double>(k * (k - 1));
  const bool strict = min_diag >= g.a_over_n && max_off <= g.b_over_n;
  if (!strict) {
    const bool loose = mean_diag >= g.a_over_n && mean_off <= g.b_over_n;
    if (!loose)
      throw ValidationError("affinity matrix violates the density floor/ceiling even on average");
    report.warnings.push_back(
        "density floor/ceiling hold only on average (min diagonal or max off-diagonal out of bounds)");
  }
  if (max_diag > g.alpha_density * g.a_over_n)
    report.warnings.push_back("within-block densities spread more than alpha_density allows");
  for (double r : p.rho) {
    if (r < 1.0 / (g.beta_balance * p.k) || r > g.beta_balance / p.k) {
      report.warnings.push_back("block proportions violate the beta_balance range");
      break;
    }
  }
  if (sv < g.lambda_sv) {
    std::ostringstream os;
    os << "k-th singular value " << sv << " is below lambda_sv " << g.lambda_sv;
    report.warnings.push_back(os.str());
  }
  return report;
}

inline void validate(const LspParams& p) {
  if (p.d < 1) throw ValidationError("latent dimension must be >= 1");
  if (!(p.link_scale > 0.0) || !std::isfinite(p.link_scale))
    throw ValidationError("link scale must be positive");
  if (!std::isfinite(p.link_intercept)) throw ValidationError("link intercept must be finite");
}

inline double lsp_link(const LspParams& p, double distance) noexcept {
  return logistic(p.link_intercept - p.link_scale * distance);
}

struct SbmSample {
  AdjacencyMatrix A;
  CommunityAssignment assignment;
};

/// Draws block labels i.i.d. from rho, then each dyad independently.
inline SbmSample sample_sbm(const SbmParams& params, std::size_t n, std::uint64_t seed) {
  validate(params);
  if (n < 2) throw DomainError("sample_sbm requires n >= 2");
  Rng rng(seed);
  std::vector<double> cumulative(params.rho.size());
  std::partial_sum(params.rho.begin(), params.rho.end(), cumulative.begin());
  SbmSample out{AdjacencyMatrix(n, params.directed), {std::vector<int>(n), params.k}};
  for (auto& s : out.assignment.sigma) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end() - 1, u);
    s = static_cast<int>(it - cumulative.begin());
  }
  const auto& sig = out.assignment.sigma;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = params.directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      if (bernoulli(rng, params.W(sig[i], sig[j]))) out.A.add_edge(i, j);
    }
  }
  return out;
}

struct LspSample {
  AdjacencyMatrix A;
  LatentPositions positions;
};

inline LspSample sample_lsp(const LspParams& params, std::size_t n, std::uint64_t seed) {
  validate(params);
  if (n < 2) throw DomainError("sample_lsp requires n >= 2");
  Rng rng(seed);
  LspSample out{AdjacencyMatrix(n, params.directed), {Eigen::MatrixXd(static_cast<Eigen::Index>(n), params.d)}};
  auto& c = out.positions.coords;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index a = 0; a < c.cols(); ++a) c(i, a) = params.dist.draw(rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = params.directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const double dist = (c.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(j))).norm();
      if (bernoulli(rng, lsp_link(params, dist))) out.A.add_edge(i, j);
    }
  }
  return out;
}

/// n x (k-1) indicator matrix; the last block is the all-zero reference row.
inline Eigen::MatrixXd dummy_encode(const CommunityAssignment& a) {
  if (a.k < 1) throw DomainError("assignment needs k >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), a.k - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int s = a.sigma[i];
    if (s < 0 || s >= a.k) throw DomainError("block label out of range");
    if (s < a.k - 1) m(static_cast<Eigen::Index>(i), s) = 1.0;
  }
  return m;
}

inline CommunityAssignment dummy_decode(const Eigen::MatrixXd& m) {
  CommunityAssignment a{std::vector<int>(static_cast<std::size_t>(m.rows())), static_cast<int>(m.cols()) + 1};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int label = a.k - 1;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(i, c) == 1.0) {
        if (label != a.k - 1) throw DomainError("dummy row has more than one active column");
        label = static_cast<int>(c);
      } else if (m(i, c) != 0.0) {
        throw DomainError("dummy entries must be 0 or 1");
      }
    }
    a.sigma[static_cast<std::size_t>(i)] = label;
  }
  return a;
}

/// Renyi divergence of order 1/2 between Ber(p) and Ber(q).
inline double renyi_half_bernoulli(double p, double q) {
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
    throw DomainError("renyi_half_bernoulli: probabilities must lie in (0,1)");
  if (p == q) return 0.0;
  const double affinity = std::sqrt(p * q) + std::sqrt((1.0 - p) * (1.0 - q));
  return std::max(0.0, -2.0 * std::log(affinity));
}

/// Leading exponent of the minimax misclassification rate; order of
/// magnitude only (the (1 + o(1)) factor is dropped).
inline double minimax_rate(std::size_t n, int k, double a_over_n, double b_over_n,
                           double beta_balance) {
  if (k < 2) throw DomainError("minimax_rate requires k >= 2");
  if (!(0.0 < b_over_n && b_over_n < a_over_n && a_over_n < 1.0))
    throw DomainError("minimax_rate requires 0 < b/n < a/n < 1");
  if (beta_balance < 1.0) throw DomainError("beta_balance must be >= 1");
  const double I = renyi_half_bernoulli(a_over_n, b_over_n);
  const double nn = static_cast<double>(n);
  if (k == 2) return std::exp(-nn * I / 2.0);
  return std::exp(-nn * I / (beta_balance * k));
}

/// Markov bound n * exp(-c n) on the probability of any misclassification.
inline double any_error_probability_bound(std::size_t n, double c) {
  if (n < 1) throw DomainError("n must be >= 1");
  if (!(c > 0.0)) throw DomainError("exponent constant must be positive");
  return std::exp(std::log(static_cast<double>(n)) - c * static_cast<double>(n));
}

}  // namespace peerinf
