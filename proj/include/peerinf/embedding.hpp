#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/netgen.hpp"
#include "peerinf/rng.hpp"

namespace peerinf {

struct EmbeddingOptions {
  std::uint64_t seed = 0;
  int restarts = 20;
  int max_iters = 5000;
  double grad_tol = 1e-6;
  /// Stop when the log-likelihood gains less than stall_tol * |ll| over
  /// stall_window iterations. Tied nodes with matching neighborhoods collapse
  /// onto a kink of the distance, where the gradient norm cannot vanish.
  double stall_tol = 1e-10;
  int stall_window = 20;
  double initial_step = 1e-2;
  /// Use classical scaling of hop distances as the first restart.
  bool mds_init = true;
};

struct EmbeddingResult {
  LatentPositions coords_hat;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  double aligned_error_sum = std::numeric_limits<double>::quiet_NaN();
  double aligned_error_max = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;  // gradient norm below tolerance
  bool stalled = false;    // stopped on the log-likelihood plateau rule
  int iterations = 0;
  int best_restart = -1;
  std::vector<double> restart_log_likelihoods;
};

namespace detail {

/// Row-major n x d coordinates used inside the optimizer.
struct FlatCoords {
  std::size_t n = 0;
  int d = 0;
  std::vector<double> v;

  double* row(std::size_t i) { return v.data() + i * static_cast<std::size_t>(d); }
  const double* row(std::size_t i) const { return v.data() + i * static_cast<std::size_t>(d); }

  static FlatCoords from(const Eigen::MatrixXd& m) {
    FlatCoords f{static_cast<std::size_t>(m.rows()), static_cast<int>(m.cols()), {}};
    f.v.resize(f.n * static_cast<std::size_t>(f.d));
    for (std::size_t i = 0; i < f.n; ++i)
      for (int a = 0; a < f.d; ++a) f.v[i * static_cast<std::size_t>(f.d) + static_cast<std::size_t>(a)] = m(static_cast<Eigen::Index>(i), a);
    return f;
  }

  Eigen::MatrixXd to_matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) m(static_cast<Eigen::Index>(i), a) = v[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
    return m;
  }
};

inline constexpr double kCoincidentDistance = 1e-9;

/// Log-likelihood and (optionally) its gradient. Pairs closer than the
/// coincidence threshold contribute no gradient; `coincident` reports one.
inline double evaluate(const AdjacencyMatrix& A, const FlatCoords& x, const LspParams& p,
                       std::vector<double>* grad, std::ptrdiff_t* coincident = nullptr) {
  const std::size_t n = x.n;
  const auto d = static_cast<std::size_t>(x.d);
  if (grad) grad->assign(x.v.size(), 0.0);
  if (coincident) *coincident = -1;
  double ll = 0.0;
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ci = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* cj = x.row(j);
      double sq = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        diff[a] = ci[a] - cj[a];
        sq += diff[a] * diff[a];
      }
      const double dist = std::sqrt(sq);
      const double eta = p.link_intercept - p.link_scale * dist;
      // Undirected: one Bernoulli term per pair. Directed: one per ordered pair.
      const double e = std::exp(-std::abs(eta));
      const double sp = std::max(eta, 0.0) + std::log1p(e);  // log(1 + e^eta)
      const double w = eta >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      double resid;  // sum over terms of (A - w)
      if (A.directed()) {
        const double ties = (A(i, j) ? 1.0 : 0.0) + (A(j, i) ? 1.0 : 0.0);
        ll += ties * eta - 2.0 * sp;
        resid = ties - 2.0 * w;
      } else {
        const double aij = A(i, j) ? 1.0 : 0.0;
        ll += aij * eta - sp;
        resid = aij - w;
      }
      if (!grad) continue;
      if (dist < kCoincidentDistance) {
        if (coincident) *coincident = static_cast<std::ptrdiff_t>(j);
        continue;
      }
      // d ll / d c_i = resid * (-s) * (c_i - c_j) / |c_i - c_j|
      const double f = -p.link_scale * resid / dist;
      double* gi = grad->data() + i * d;
      double* gj = grad->data() + j * d;
      for (std::size_t a = 0; a < d; ++a) {
        gi[a] += f * diff[a];
        gj[a] -= f * diff[a];
      }
    }
  }
  return ll;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct AscentResult {
  FlatCoords x;
  double ll = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Gradient ascent; trial steps use the Barzilai-Borwein length and are
/// halved until the Armijo condition holds.
inline AscentResult gradient_ascent(const AdjacencyMatrix& A, FlatCoords x, const LspParams& p,
                                    const EmbeddingOptions& opts, Rng& jitter_rng) {
  std::vector<double> g, g_new;
  std::ptrdiff_t coincident = -1;
  auto eval_with_jitter = [&](FlatCoords& pt, std::vector<double>& grad) {
    double ll = evaluate(A, pt, p, &grad, &coincident);
    for (int guard = 0; coincident >= 0 && guard < 100; ++guard) {
      double* c = pt.row(static_cast<std::size_t>(coincident));
      std::vector<double> dir(static_cast<std::size_t>(pt.d));
      for (auto& v : dir) v = standard_normal(jitter_rng);
      const double len = norm(dir);
      for (int a = 0; a < pt.d; ++a) c[a] += 1e-6 * dir[static_cast<std::size_t>(a)] / len;
      ll = evaluate(A, pt, p, &grad, &coincident);
    }
    return ll;
  };

  AscentResult r;
  double ll = eval_with_jitter(x, g);
  double step = opts.initial_step;
  FlatCoords prev_x;
  std::vector<double> prev_g;
  std::deque<double> history{ll};
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const double gnorm = norm(g);
    if (gnorm < opts.grad_tol) {
      r.converged = true;
      break;
    }
    if (static_cast<int>(history.size()) > opts.stall_window) {
      history.pop_front();
      if (ll - history.front() <= opts.stall_tol * std::abs(ll)) {
        r.stalled = true;
        break;
      }
    }
    if (it > 0) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t q = 0; q < x.v.size(); ++q) {
        const double s = x.v[q] - prev_x.v[q];
        const double y = -(g[q] - prev_g[q]);  // gradient change of -ll
        ss += s * s;
        sy += s * y;
      }
      step = sy > 0.0 ? ss / sy : std::min(2.0 * step, 1.0);
    }
    FlatCoords trial = x;
    double trial_ll = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t q = 0; q < x.v.size(); ++q) trial.v[q] = x.v[q] + step * g[q];
      trial_ll = evaluate(A, trial, p, nullptr);
      if (trial_ll >= ll + 1e-4 * step * gnorm * gnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at machine precision
    prev_x = std::move(x);
    prev_g = g;
    x = std::move(trial);
    ll = eval_with_jitter(x, g);
    history.push_back(ll);
  }
  r.iterations = it;
  if (!r.converged && norm(g) < opts.grad_tol) r.converged = true;
  r.x = std::move(x);
  r.ll = ll;
  return r;
}

/// Hop distances by breadth-first search; unreachable pairs get (max + 1).
inline Eigen::MatrixXd hop_distances(const AdjacencyMatrix& A) {
  const std::size_t n = A.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), -1.0);
  std::deque<std::size_t> queue;
  double longest = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    D(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = 0.0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      const double du = D(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u));
      for (std::size_t v : A.neighbors(u)) {
        auto& dv = D(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(v));
        if (dv < 0.0) {
          dv = du + 1.0;
          longest = std::max(longest, dv);
          queue.push_back(v);
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = 0; j < D.cols(); ++j)
      if (D(i, j) < 0.0) D(i, j) = longest + 1.0;
  return 0.5 * (D + D.transpose());
}

/// Classical scaling of hop distances into d dimensions, rescaled to unit
/// per-coordinate variance.
inline Eigen::MatrixXd classical_scaling(const AdjacencyMatrix& A, int d) {
  const auto n = static_cast<Eigen::Index>(A.size());
  const Eigen::MatrixXd D = hop_distances(A);
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd B = -0.5 * J * D.cwiseProduct(D) * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  Eigen::MatrixXd X(n, d);
  for (int a = 0; a < d; ++a) {
    const Eigen::Index col = n - 1 - a;
    const double lambda = std::max(0.0, es.eigenvalues()[col]);
    X.col(a) = es.eigenvectors().col(col) * std::sqrt(lambda);
  }
  for (int a = 0; a < d; ++a) {
    const double mean = X.col(a).mean();
    X.col(a).array() -= mean;
    const double sd = std::sqrt(X.col(a).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, n - 1)));
    if (sd > 0.0) X.col(a) /= sd;
  }
  return X;
}

}  // namespace detail

/// Bernoulli log-likelihood of the graph under the logistic-of-distance link.
inline double lsp_log_likelihood(const AdjacencyMatrix& A, const Eigen::MatrixXd& coords, const LspParams& p) {
  if (static_cast<std::size_t>(coords.rows()) != A.size()) throw ShapeError("one coordinate row per node required");
  return detail::evaluate(A, detail::FlatCoords::from(coords), p, nullptr);
}

/// Closed-form gradient of lsp_log_likelihood with respect to the coordinates.
inline Eigen::MatrixXd lsp_gradient(const AdjacencyMatrix& A, const Eigen::MatrixXd& coords, const LspParams& p) {
  if (static_cast<std::size_t>(coords.rows()) != A.size()) throw ShapeError("one coordinate row per node required");
  const auto x = detail::FlatCoords::from(coords);
  std::vector<double> g;
  detail::evaluate(A, x, p, &g);
  detail::FlatCoords gf{x.n, x.d, std::move(g)};
  return gf.to_matrix();
}

struct IsometryAlignment {
  Eigen::MatrixXd aligned;   // rows: T(coords_hat_i)
  Eigen::MatrixXd rotation;  // orthogonal d x d, acting on column vectors
  Eigen::VectorXd translation;
  double error_sum = 0.0;
  double error_max = 0.0;
};

/// Rigid motion (rotation, reflection, translation) of coords_hat that best
/// matches coords_true in least squares (orthogonal Procrustes).
inline IsometryAlignment align_isometry(const Eigen::MatrixXd& coords_hat, const Eigen::MatrixXd& coords_true) {
  if (coords_hat.rows() != coords_true.rows() || coords_hat.cols() != coords_true.cols())
    throw ShapeError("align_isometry: configurations differ in shape");
  if (coords_hat.rows() == 0) throw ShapeError("align_isometry: empty configuration");
  const Eigen::RowVectorXd mu_hat = coords_hat.colwise().mean();
  const Eigen::RowVectorXd mu_true = coords_true.colwise().mean();
  const Eigen::MatrixXd X = coords_hat.rowwise() - mu_hat;
  const Eigen::MatrixXd Y = coords_true.rowwise() - mu_true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X.transpose() * Y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = svd.matrixU() * svd.matrixV().transpose();  // acts on row vectors

  IsometryAlignment out;
  out.aligned = (X * Q).rowwise() + mu_true;
  out.rotation = Q.transpose();
  out.translation = mu_true.transpose() - out.rotation * mu_hat.transpose();
  for (Eigen::Index i = 0; i < out.aligned.rows(); ++i) {
    const double e = (out.aligned.row(i) - coords_true.row(i)).norm();
    out.error_sum += e;
    out.error_max = std::max(out.error_max, e);
  }
  return out;
}

/// Multi-restart maximum likelihood positions under a known link.
inline EmbeddingResult embed_mle(const AdjacencyMatrix& A, const LspParams& params, const EmbeddingOptions& opts = {}) {
  validate(params);
  if (A.size() < 2) throw DomainError("embed_mle needs at least two nodes");
  if (opts.restarts < 1) throw ConfigError("embed_mle needs at least one restart");
  const auto n = static_cast<Eigen::Index>(A.size());
  Rng init_rng(mix64(opts.seed ^ 0xe3bedULL));
  Rng jitter_rng(mix64(opts.seed ^ 0x7177e7ULL));

  EmbeddingResult best;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::MatrixXd start(n, params.d);
    if (r == 0 && opts.mds_init) {
      start = detail::classical_scaling(A, params.d);
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        for (int a = 0; a < params.d; ++a) start(i, a) = params.dist.draw(init_rng);
    }
    auto res = detail::gradient_ascent(A, detail::FlatCoords::from(start), params, opts, jitter_rng);
    best.restart_log_likelihoods.push_back(res.ll);
    if (res.ll > best.log_likelihood) {  // strict: ties keep the lower restart index
      best.log_likelihood = res.ll;
      best.coords_hat.coords = res.x.to_matrix();
      best.converged = res.converged;
      best.stalled = res.stalled;
      best.iterations = res.iterations;
      best.best_restart = r;
    }
  }
  return best;
}

inline EmbeddingResult embed_mle(const AdjacencyMatrix& A, const LspParams& params, const EmbeddingOptions& opts,
                                 const LatentPositions& truth) {
  auto r = embed_mle(A, params, opts);
  const auto al = align_isometry(r.coords_hat.coords, truth.coords);
  r.aligned_error_sum = al.error_sum;
  r.aligned_error_max = al.error_max;
  return r;
}

}  // namespace peerinf
