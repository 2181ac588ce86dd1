#include <cmath>

#include <gtest/gtest.h>

#include "peerinf/embedding.hpp"
#include "test_support.hpp"

using namespace peerinf;
using peerinf::testing::from_edges;
using peerinf::testing::random_matrix;

namespace {

LspParams link(int d, double intercept = 1.0, double scale = 1.0) {
  LspParams p;
  p.d = d;
  p.link_intercept = intercept;
  p.link_scale = scale;
  return p;
}

Eigen::MatrixXd rotation2(double theta) {
  Eigen::MatrixXd R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

// Independent closed form for d = 2: best angle for a proper rotation, and
// for the reflected configuration, keeping whichever fits better.
Eigen::MatrixXd procrustes_2d(const Eigen::MatrixXd& hat, const Eigen::MatrixXd& truth) {
  const Eigen::RowVectorXd mt = truth.colwise().mean();
  auto best_for = [&](const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd Xc = X.rowwise() - Eigen::RowVectorXd(X.colwise().mean());
    const Eigen::MatrixXd Yc = truth.rowwise() - mt;
    double cross = 0.0, dot = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      dot += Xc(i, 0) * Yc(i, 0) + Xc(i, 1) * Yc(i, 1);
      cross += Xc(i, 0) * Yc(i, 1) - Xc(i, 1) * Yc(i, 0);
    }
    const Eigen::MatrixXd R = rotation2(std::atan2(cross, dot));
    Eigen::MatrixXd out = (Xc * R.transpose()).rowwise() + mt;
    return std::make_pair(out, (out - truth).squaredNorm());
  };
  Eigen::MatrixXd reflected = hat;
  reflected.col(1) *= -1.0;
  const auto a = best_for(hat);
  const auto b = best_for(reflected);
  return a.second <= b.second ? a.first : b.first;
}

}  // namespace

TEST(LspLikelihood, GradientMatchesFiniteDifferences) {
  for (int d : {1, 2}) {
    const auto s = sample_lsp(link(d), 6, 40 + d);
    const Eigen::MatrixXd x = random_matrix(6, d, 7 + d);
    const Eigen::MatrixXd g = lsp_gradient(s.A, x, link(d));
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index a = 0; a < x.cols(); ++a) {
        Eigen::MatrixXd xp = x, xm = x;
        xp(i, a) += h;
        xm(i, a) -= h;
        const double fd = (lsp_log_likelihood(s.A, xp, link(d)) - lsp_log_likelihood(s.A, xm, link(d))) / (2 * h);
        EXPECT_LE(std::abs(fd - g(i, a)), 1e-5 * std::max(1.0, std::abs(fd))) << "d=" << d << " i=" << i;
      }
  }
}

TEST(LspLikelihood, MatchesDirectSum) {
  const auto s = sample_lsp(link(2, 0.5, 1.3), 12, 5);
  const Eigen::MatrixXd x = random_matrix(12, 2, 6);
  double ll = 0.0;
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j) {
      const double w = 1.0 / (1.0 + std::exp(-(0.5 - 1.3 * (x.row(i) - x.row(j)).norm())));
      ll += s.A(i, j) ? std::log(w) : std::log(1 - w);
    }
  EXPECT_NEAR(lsp_log_likelihood(s.A, x, link(2, 0.5, 1.3)), ll, 1e-10);
}

TEST(LspLikelihood, InvariantUnderRigidMotions) {
  const auto s = sample_lsp(link(2), 30, 9);
  const Eigen::MatrixXd x = random_matrix(30, 2, 10);
  const double base = lsp_log_likelihood(s.A, x, link(2));
  for (double theta : {0.3, 2.0, -1.1}) {
    Eigen::MatrixXd moved = x * rotation2(theta).transpose();
    moved.rowwise() += Eigen::RowVector2d(1.5, -0.7);
    EXPECT_NEAR(lsp_log_likelihood(s.A, moved, link(2)), base, 1e-10);
    moved.col(0) *= -1.0;
    EXPECT_NEAR(lsp_log_likelihood(s.A, moved, link(2)), base, 1e-10);
  }
}

TEST(EmbedMle, SaturatedDyadCollapsesPoints) {
  const auto A = from_edges(2, {{0, 1}});
  EmbeddingOptions opts;
  opts.restarts = 3;
  const auto r = embed_mle(A, link(2, 8.0, 1.0), opts);
  EXPECT_LT((r.coords_hat.coords.row(0) - r.coords_hat.coords.row(1)).norm(), 1e-3);
  EXPECT_GT(r.log_likelihood, -1e-3);
}

TEST(EmbedMle, ReportsBestRestart) {
  const auto s = sample_lsp(link(2), 40, 3);
  EmbeddingOptions opts;
  opts.restarts = 4;
  opts.seed = 5;
  const auto r = embed_mle(s.A, link(2), opts, s.positions);
  ASSERT_EQ(r.restart_log_likelihoods.size(), 4u);
  for (double ll : r.restart_log_likelihoods) EXPECT_GE(r.log_likelihood, ll);
  EXPECT_NEAR(lsp_log_likelihood(s.A, r.coords_hat.coords, link(2)), r.log_likelihood, 1e-8);
  EXPECT_GE(r.aligned_error_sum, r.aligned_error_max);
  EXPECT_GE(r.aligned_error_max, 0.0);
}

TEST(EmbedMle, DeterministicGivenSeed) {
  const auto s = sample_lsp(link(2), 25, 8);
  EmbeddingOptions opts;
  opts.restarts = 2;
  opts.seed = 3;
  EXPECT_TRUE(embed_mle(s.A, link(2), opts).coords_hat.coords == embed_mle(s.A, link(2), opts).coords_hat.coords);
}

TEST(EmbedMle, CoincidentStartIsJittered) {
  // Two structurally identical nodes: the ascent must not produce NaNs.
  const auto A = from_edges(4, {{0, 2}, {1, 2}, {2, 3}});
  EmbeddingOptions opts;
  opts.restarts = 2;
  const auto r = embed_mle(A, link(2), opts);
  EXPECT_TRUE(r.coords_hat.coords.allFinite());
  EXPECT_TRUE(std::isfinite(r.log_likelihood));
}

TEST(EmbedMle, ErrorShrinksWithMoreNodes) {
  EmbeddingOptions opts;
  opts.restarts = 2;
  const auto small = sample_lsp(link(2), 40, 21);
  const auto large = sample_lsp(link(2), 160, 21);
  const auto rs = embed_mle(small.A, link(2), opts, small.positions);
  const auto rl = embed_mle(large.A, link(2), opts, large.positions);
  EXPECT_LT(rl.aligned_error_sum / 160.0, rs.aligned_error_sum / 40.0);
}

TEST(EmbedMle, Errors) {
  EXPECT_THROW(embed_mle(AdjacencyMatrix(1), link(2)), DomainError);
  EmbeddingOptions opts;
  opts.restarts = 0;
  EXPECT_THROW(embed_mle(AdjacencyMatrix(3), link(2), opts), ConfigError);
  EXPECT_THROW(embed_mle(AdjacencyMatrix(3), link(2, 0.0, -1.0)), ValidationError);
}

TEST(AlignIsometry, IdentityAndExactMotion) {
  const Eigen::MatrixXd x = random_matrix(15, 2, 1);
  auto al = align_isometry(x, x);
  EXPECT_LT(al.error_max, 1e-12);
  EXPECT_LT((al.rotation - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
  Eigen::MatrixXd moved = x * rotation2(0.8).transpose();
  moved.col(1) *= -1.0;
  moved.rowwise() += Eigen::RowVector2d(3.0, -2.0);
  al = align_isometry(moved, x);
  EXPECT_LT(al.error_sum, 1e-10);
  EXPECT_LT((al.aligned - x).norm(), 1e-10);
  EXPECT_LT(((al.rotation * moved.transpose()).colwise() + al.translation - x.transpose()).norm(), 1e-10);
}

TEST(AlignIsometry, MatchesClosedFormIn2d) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd hat = random_matrix(5, 2, 100 + seed);
    const Eigen::MatrixXd truth = random_matrix(5, 2, 200 + seed);
    const auto al = align_isometry(hat, truth);
    EXPECT_LT((al.aligned - procrustes_2d(hat, truth)).cwiseAbs().maxCoeff(), 1e-9) << "seed " << seed;
    EXPECT_LT((al.rotation.transpose() * al.rotation - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
  }
}

TEST(AlignIsometry, ShapeMismatch) {
  EXPECT_THROW(align_isometry(Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(4, 3)), ShapeError);
  EXPECT_THROW(align_isometry(Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(5, 2)), ShapeError);
}
