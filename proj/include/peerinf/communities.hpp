#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/hungarian.hpp"
#include "peerinf/netgen.hpp"
#include "peerinf/rng.hpp"
#include "peerinf/spectral.hpp"

namespace peerinf {

// ---------------------------------------------------------------------------
// Label alignment
// ---------------------------------------------------------------------------

struct LabelAlignment {
  std::vector<int> permutation;  // estimated label -> true label
  double misclassification = 0.0;
};

/// k x k table: entry (a, b) counts nodes with estimated label a and true label b.
inline Eigen::MatrixXd confusion_matrix(const CommunityAssignment& hat, const CommunityAssignment& truth) {
  if (hat.size() != truth.size()) throw ShapeError("assignments have different node counts");
  if (hat.k != truth.k) throw ShapeError("assignments have different block counts");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(hat.k, hat.k);
  for (std::size_t i = 0; i < hat.size(); ++i) {
    if (hat.sigma[i] < 0 || hat.sigma[i] >= hat.k || truth.sigma[i] < 0 || truth.sigma[i] >= truth.k)
      throw DomainError("block label out of range");
    m(hat.sigma[i], truth.sigma[i]) += 1.0;
  }
  return m;
}

/// Label permutation maximizing agreement, and the resulting error proportion.
inline LabelAlignment align_labels(const CommunityAssignment& hat, const CommunityAssignment& truth) {
  const Eigen::MatrixXd m = confusion_matrix(hat, truth);
  LabelAlignment out;
  out.permutation = hungarian_min_cost(-m);
  double agree = 0.0;
  for (int a = 0; a < hat.k; ++a) agree += m(a, out.permutation[static_cast<std::size_t>(a)]);
  const auto n = static_cast<double>(hat.size());
  out.misclassification = n == 0.0 ? 0.0 : (n - agree) / n;
  return out;
}

inline CommunityAssignment relabel(const CommunityAssignment& a, const std::vector<int>& permutation) {
  CommunityAssignment out = a;
  for (auto& s : out.sigma) s = permutation[static_cast<std::size_t>(s)];
  return out;
}

// ---------------------------------------------------------------------------
// Profile likelihood
// ---------------------------------------------------------------------------

/// Block sizes and tie counts between blocks. For undirected graphs `ties` is
/// symmetric with within-block ties on the diagonal; for directed graphs
/// ties(a, b) counts arcs from block a to block b.
struct BlockStats {
  std::vector<double> sizes;
  Eigen::MatrixXd ties;
  bool directed = false;

  double pairs(int a, int b) const {
    const double na = sizes[static_cast<std::size_t>(a)];
    if (a != b) return na * sizes[static_cast<std::size_t>(b)];
    return directed ? na * (na - 1.0) : na * (na - 1.0) / 2.0;
  }
};

inline BlockStats block_stats(const AdjacencyMatrix& A, const std::vector<int>& sigma, int k) {
  BlockStats s{std::vector<double>(static_cast<std::size_t>(k), 0.0), Eigen::MatrixXd::Zero(k, k), A.directed()};
  for (int label : sigma) s.sizes[static_cast<std::size_t>(label)] += 1.0;
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j : A.neighbors(i)) {
      if (!A.directed() && j < i) continue;
      const int a = sigma[i], b = sigma[j];
      s.ties(a, b) += 1.0;
      if (!A.directed() && a != b) s.ties(b, a) += 1.0;
    }
  return s;
}

namespace detail {
inline double bernoulli_profile_term(double ties, double pairs) {
  if (pairs <= 0.0 || ties <= 0.0 || ties >= pairs) return 0.0;
  const double p = ties / pairs;
  return ties * std::log(p) + (pairs - ties) * std::log1p(-p);
}
}  // namespace detail

/// Bernoulli log-likelihood maximized over block densities for fixed labels.
inline double profile_log_likelihood(const BlockStats& s) {
  const int k = static_cast<int>(s.sizes.size());
  double ll = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = s.directed ? 0 : a; b < k; ++b) ll += detail::bernoulli_profile_term(s.ties(a, b), s.pairs(a, b));
  return ll;
}

inline double profile_log_likelihood(const AdjacencyMatrix& A, const CommunityAssignment& a) {
  return profile_log_likelihood(block_stats(A, a.sigma, a.k));
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

namespace detail {

/// One seeded k-means run with k-means++ seeding. Empty clusters are reseeded
/// from the point farthest from its centroid; returns nullopt if a cluster
/// stays empty (fewer than k distinct rows).
inline std::optional<KMeansResult> kmeans_once(const Eigen::MatrixXd& X, int k, Rng& rng, int max_iter) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  centers.row(0) = X.row(std::min(first, n - 1));
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (X.row(i) - centers.row(c - 1)).squaredNorm());
    const double total = d2.sum();
    if (!(total > 0.0)) return std::nullopt;
    double target = uniform01(rng) * total;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    centers.row(c) = X.row(pick);
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.labels[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      sums.row(c) += X.row(i);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Reseed from the point farthest from its current centroid.
      Eigen::Index far = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int ci = res.labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(ci)] <= 1) continue;
        const double d = (X.row(i) - centers.row(ci)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) return std::nullopt;
      --counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(far)])];
      res.labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centers.row(c) = X.row(far);
      changed = true;
    }
    if (!changed) break;
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) res.inertia += (X.row(i) - centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return res;
}

}  // namespace detail

/// All successful restarts, in restart order.
inline std::vector<KMeansResult> kmeans_restarts(const Eigen::MatrixXd& X, int k, int restarts,
                                                 std::uint64_t seed, int max_iter = 100) {
  Rng rng(seed);
  std::vector<KMeansResult> out;
  for (int r = 0; r < restarts; ++r) {
    if (auto res = detail::kmeans_once(X, k, rng, max_iter)) out.push_back(std::move(*res));
  }
  if (out.empty()) throw DegenerateClusteringError("k-means left an empty cluster on every restart");
  return out;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

struct DetectionOptions {
  std::uint64_t seed = 0;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;
  int max_sweeps = 50;
  double eig_tol = 1e-8;
  int eig_max_iter = 0;  // 0 selects 10 * n
  /// Refine every k-means restart rather than only the lowest-inertia one.
  bool refine_all_restarts = true;
  /// Finish with single-node moves on the exact profile likelihood.
  bool polish = true;
  /// Extra uniformly random starting labelings refined alongside the
  /// spectral ones. Small graphs get more, up to start_budget / n.
  int random_starts = 10;
  int start_budget = 4000;
};

struct DetectionResult {
  CommunityAssignment sigma_hat;
  double misclassification_rate = std::numeric_limits<double>::quiet_NaN();
  bool exact_recovery = false;
  std::vector<int> permutation;  // estimated -> true; empty without truth
  double profile_log_likelihood = 0.0;
  bool eigen_converged = false;
  int sweeps = 0;
};

namespace detail {

struct NodeCounts {
  std::vector<double> out, in;
};

inline NodeCounts node_counts(const AdjacencyMatrix& A, const std::vector<std::vector<std::size_t>>& in_lists,
                              const std::vector<int>& sigma, int k, std::size_t i) {
  NodeCounts c{std::vector<double>(static_cast<std::size_t>(k), 0.0), {}};
  for (std::size_t j : A.neighbors(i)) c.out[static_cast<std::size_t>(sigma[j])] += 1.0;
  if (A.directed()) {
    c.in.assign(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j : in_lists[i]) c.in[static_cast<std::size_t>(sigma[j])] += 1.0;
  }
  return c;
}

/// Applies the move of a node with counts `c` from block `from` to block `to`.
inline void move_node(BlockStats& s, const NodeCounts& c, int from, int to) {
  const int k = static_cast<int>(s.sizes.size());
  for (int b = 0; b < k; ++b) {
    const double o = c.out[static_cast<std::size_t>(b)];
    if (s.directed) {
      const double in = c.in[static_cast<std::size_t>(b)];
      s.ties(from, b) -= o;
      s.ties(b, from) -= in;
    } else if (b == from) {
      s.ties(from, from) -= o;
    } else {
      s.ties(from, b) -= o;
      s.ties(b, from) -= o;
    }
  }
  s.sizes[static_cast<std::size_t>(from)] -= 1.0;
  for (int b = 0; b < k; ++b) {
    const double o = c.out[static_cast<std::size_t>(b)];
    if (s.directed) {
      const double in = c.in[static_cast<std::size_t>(b)];
      s.ties(to, b) += o;
      s.ties(b, to) += in;
    } else if (b == to) {
      s.ties(to, to) += o;
    } else {
      s.ties(to, b) += o;
      s.ties(b, to) += o;
    }
  }
  s.sizes[static_cast<std::size_t>(to)] += 1.0;
}

inline std::vector<std::vector<std::size_t>> in_neighbor_lists(const AdjacencyMatrix& A) {
  std::vector<std::vector<std::size_t>> in(A.directed() ? A.size() : 0);
  if (A.directed())
    for (std::size_t i = 0; i < A.size(); ++i)
      for (std::size_t j : A.neighbors(i)) in[j].push_back(i);
  return in;
}

/// Node-wise reassignment against Laplace-smoothed plug-in densities.
/// A sweep that lowers the profile likelihood is rolled back and ends the loop.
inline int refine(const AdjacencyMatrix& A, const std::vector<std::vector<std::size_t>>& in_lists,
                  std::vector<int>& sigma, int k, int max_sweeps) {
  int sweeps = 0;
  BlockStats stats = block_stats(A, sigma, k);
  double current = profile_log_likelihood(stats);
  for (; sweeps < max_sweeps; ++sweeps) {
    Eigen::MatrixXd logp(k, k), log1mp(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        const double p = (stats.ties(a, b) + 1.0) / (stats.pairs(a, b) + 2.0);
        logp(a, b) = std::log(p);
        log1mp(a, b) = std::log1p(-p);
      }
    const std::vector<int> before = sigma;
    std::vector<double> sizes = stats.sizes;
    bool moved = false;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      const NodeCounts c = node_counts(A, in_lists, sigma, k, i);
      const int cur = sigma[i];
      int best = cur;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < k; ++a) {
        double score = 0.0;
        for (int b = 0; b < k; ++b) {
          const double others = sizes[static_cast<std::size_t>(b)] - (b == cur ? 1.0 : 0.0);
          const double o = c.out[static_cast<std::size_t>(b)];
          score += o * logp(a, b) + (others - o) * log1mp(a, b);
          if (A.directed()) {
            const double in = c.in[static_cast<std::size_t>(b)];
            score += in * logp(b, a) + (others - in) * log1mp(b, a);
          }
        }
        if (score > best_score + 1e-12) {
          best_score = score;
          best = a;
        }
      }
      if (best != cur) {
        sizes[static_cast<std::size_t>(cur)] -= 1.0;
        sizes[static_cast<std::size_t>(best)] += 1.0;
        sigma[i] = best;
        moved = true;
      }
    }
    if (!moved) break;
    BlockStats next = block_stats(A, sigma, k);
    const double ll = profile_log_likelihood(next);
    if (ll < current) {
      sigma = before;
      break;
    }
    stats = std::move(next);
    current = ll;
  }
  return sweeps;
}

/// Greedy single-node moves that strictly raise the exact profile likelihood.
inline void polish(const AdjacencyMatrix& A, const std::vector<std::vector<std::size_t>>& in_lists,
                   std::vector<int>& sigma, int k, int max_sweeps) {
  BlockStats stats = block_stats(A, sigma, k);
  double current = profile_log_likelihood(stats);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      const NodeCounts c = node_counts(A, in_lists, sigma, k, i);
      const int cur = sigma[i];
      int best = cur;
      double best_ll = current;
      BlockStats best_stats;
      for (int a = 0; a < k; ++a) {
        if (a == cur) continue;
        BlockStats trial = stats;
        move_node(trial, c, cur, a);
        const double ll = profile_log_likelihood(trial);
        if (ll > best_ll + 1e-9 * std::max(1.0, std::abs(best_ll))) {
          best_ll = ll;
          best = a;
          best_stats = std::move(trial);
        }
      }
      if (best != cur) {
        sigma[i] = best;
        stats = std::move(best_stats);
        current = best_ll;
        moved = true;
      }
    }
    if (!moved) break;
  }
}

}  // namespace detail

/// Spectral initialization (leading eigenvectors by magnitude, k-means on the
/// rows) followed by likelihood refinement. Deterministic given opts.seed.
inline DetectionResult detect_communities(const AdjacencyMatrix& A, int k, const DetectionOptions& opts = {}) {
  const std::size_t n = A.size();
  if (n == 0) throw DomainError("detect_communities: empty graph");
  if (k < 2) throw DomainError("detect_communities: k must be >= 2");
  if (static_cast<std::size_t>(k) > n) throw DomainError("detect_communities: k exceeds node count");

  const int cap = opts.eig_max_iter > 0 ? opts.eig_max_iter : static_cast<int>(10 * n);
  const auto eig = leading_eigenpairs(A, k, opts.eig_tol, cap, mix64(opts.seed ^ 0x5eedULL));
  const auto runs = kmeans_restarts(eig.vectors, k, opts.kmeans_restarts, mix64(opts.seed ^ 0xc105ULL),
                                    opts.kmeans_max_iter);

  std::vector<const KMeansResult*> starts;
  if (opts.refine_all_restarts) {
    for (const auto& r : runs) starts.push_back(&r);
  } else {
    starts.push_back(&*std::min_element(runs.begin(), runs.end(),
                                        [](const auto& a, const auto& b) { return a.inertia < b.inertia; }));
  }

  const auto extra = std::max<std::size_t>(static_cast<std::size_t>(std::max(0, opts.random_starts)),
                                          static_cast<std::size_t>(std::max(0, opts.start_budget)) / n);
  std::vector<KMeansResult> random_runs(extra);
  Rng start_rng(mix64(opts.seed ^ 0x7a2dULL));
  for (auto& r : random_runs) {
    r.labels.resize(n);
    for (auto& s : r.labels) s = static_cast<int>(uniform01(start_rng) * k);
    starts.push_back(&r);
  }

  const auto in_lists = detail::in_neighbor_lists(A);
  DetectionResult best;
  best.profile_log_likelihood = -std::numeric_limits<double>::infinity();
  best.eigen_converged = eig.converged;
  std::vector<std::vector<int>> seen;
  for (const KMeansResult* start : starts) {
    if (std::find(seen.begin(), seen.end(), start->labels) != seen.end()) continue;
    seen.push_back(start->labels);
    std::vector<int> sigma = start->labels;
    const int sweeps = detail::refine(A, in_lists, sigma, k, opts.max_sweeps);
    if (opts.polish) detail::polish(A, in_lists, sigma, k, opts.max_sweeps);
    const double ll = profile_log_likelihood(block_stats(A, sigma, k));
    if (ll > best.profile_log_likelihood) {
      best.profile_log_likelihood = ll;
      best.sigma_hat = {std::move(sigma), k};
      best.sweeps = sweeps;
    }
  }
  return best;
}

/// Fills the truth-dependent fields of a detection result.
inline void score_against_truth(DetectionResult& result, const CommunityAssignment& truth) {
  const auto al = align_labels(result.sigma_hat, truth);
  result.permutation = al.permutation;
  result.misclassification_rate = al.misclassification;
  result.exact_recovery = al.misclassification == 0.0;
}

inline DetectionResult detect_communities(const AdjacencyMatrix& A, int k, const DetectionOptions& opts,
                                          const CommunityAssignment& truth) {
  auto r = detect_communities(A, k, opts);
  score_against_truth(r, truth);
  return r;
}

// ---------------------------------------------------------------------------
// Exact-recovery failure probability
// ---------------------------------------------------------------------------

struct DeltaEstimate {
  double delta_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t failures = 0;
  std::size_t replications = 0;
};

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double level) {
  if (trials == 0) throw DomainError("binomial interval needs at least one trial");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  const double r = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / r;
  const double denom = 1.0 + z * z / r;
  const double center = (p + z * z / (2.0 * r)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / r + z * z / (4.0 * r * r));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// delta_hat = share of replications without exact recovery.
inline DeltaEstimate estimate_delta(const std::vector<bool>& exact_recovery, double level = 0.95) {
  if (exact_recovery.empty()) throw DomainError("estimate_delta needs at least one replication");
  DeltaEstimate d;
  d.replications = exact_recovery.size();
  d.failures = static_cast<std::size_t>(std::count(exact_recovery.begin(), exact_recovery.end(), false));
  d.delta_hat = static_cast<double>(d.failures) / static_cast<double>(d.replications);
  std::tie(d.lower, d.upper) = wilson_interval(d.failures, d.replications, level);
  return d;
}

}  // namespace peerinf
