#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "peerinf/behavior.hpp"
#include "peerinf/bias_bound.hpp"
#include "peerinf/communities.hpp"
#include "peerinf/config.hpp"
#include "peerinf/embedding.hpp"
#include "peerinf/inference.hpp"
#include "peerinf/netgen.hpp"
#include "peerinf/rng.hpp"

namespace peerinf {

/// Environment variable capping the worker count.
inline constexpr const char* kWorkerCapEnv = "PEERINF_MAX_WORKERS";

inline int effective_workers(int requested) {
  int w = std::max(1, requested);
  if (const char* cap = std::getenv(kWorkerCapEnv)) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && v >= 1) w = std::min<int>(w, static_cast<int>(v));
  }
  return w;
}

/// Seed streams within one replication.
enum class SeedStream : std::uint64_t { kNetwork = 1, kPanel = 2, kDetection = 3, kEmbedding = 4, kLabelNoise = 5 };

inline std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep, SeedStream s) {
  return derive_seed(master, n, rep, static_cast<std::uint64_t>(s));
}

/// Copy of `truth` with round(rate * n) distinct nodes moved to a different,
/// uniformly chosen block.
inline CommunityAssignment corrupt_labels(const CommunityAssignment& truth, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("label noise rate must lie in [0,1]");
  if (truth.k < 2) throw DomainError("label noise needs k >= 2");
  Rng rng(seed);
  const std::size_t n = truth.size();
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CommunityAssignment out = truth;
  for (std::size_t q = 0; q < flips; ++q) {
    const std::size_t pick = q + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n - q));
    std::swap(order[q], order[std::min(pick, n - 1)]);
    const std::size_t node = order[q];
    const int shift = 1 + static_cast<int>(uniform01(rng) * (truth.k - 1));
    out.sigma[node] = (truth.sigma[node] + std::min(shift, truth.k - 1)) % truth.k;
  }
  return out;
}

/// Everything one replication produces.
struct ReplicationRecord {
  std::size_t n = 0;
  std::size_t replication = 0;
  bool ok = false;
  std::string error;
  double recovery_error = std::numeric_limits<double>::quiet_NaN();
  bool exact_recovery = false;
  std::vector<double> beta_hat;  // aligned with config.strategies
  // Plug-in bound ingredients (community setting, proxy strategy).
  Eigen::VectorXd gamma_hat;
  Eigen::MatrixXd linked_pairs;  // (estimated label i, estimated label j) counts over A_ij = 1
  double exposure_resid_ss = 0.0;
  std::vector<std::string> warnings;
};

/// One output row per (n, replication, strategy).
struct ResultRow {
  std::size_t n = 0;
  std::size_t replication = 0;
  std::string strategy;
  double beta_hat = std::numeric_limits<double>::quiet_NaN();
  double recovery_error = std::numeric_limits<double>::quiet_NaN();
  bool exact_recovery = false;
  double bias_bound = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

struct StrategySummary {
  std::string strategy;
  std::size_t count = 0;
  double mean_beta = std::numeric_limits<double>::quiet_NaN();
  double mean_bias = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  double bias_bound = std::numeric_limits<double>::quiet_NaN();
};

struct GridSummary {
  std::size_t n = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double delta_hat = std::numeric_limits<double>::quiet_NaN();
  double delta_lower = std::numeric_limits<double>::quiet_NaN();
  double delta_upper = std::numeric_limits<double>::quiet_NaN();
  double median_recovery_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<StrategySummary> strategies;

  const StrategySummary& strategy(const std::string& name) const {
    for (const auto& s : strategies)
      if (s.strategy == name) return s;
    throw ConfigError("strategy '" + name + "' not in summary");
  }
};

struct ExperimentMeta {
  Setting setting = Setting::kCommunity;
  double beta_true = 0.0;
  double confidence_level = 0.95;
  std::vector<std::string> strategies;
};

struct ExperimentResult {
  ExperimentMeta meta;
  std::vector<ResultRow> rows;
  std::vector<GridSummary> summaries;
  std::vector<std::string> warnings;
  std::size_t failed_replications = 0;
  std::size_t total_replications = 0;

  /// More than 10% of replications failed.
  bool excessive_failures() const { return failed_replications * 10 > total_replications; }

  const GridSummary& at(std::size_t n) const {
    for (const auto& s : summaries)
      if (s.n == n) return s;
    throw DomainError("grid point not in result");
  }
};

/// Recomputes per-n summaries from rows. Rows are visited in (n, replication)
/// order so the arithmetic does not depend on execution order.
inline std::vector<GridSummary> summarize(std::vector<ResultRow> rows, const ExperimentMeta& meta) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.n != b.n ? a.n < b.n : a.replication < b.replication;
  });
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + meta.confidence_level / 2.0);
  std::vector<GridSummary> out;
  for (std::size_t lo = 0; lo < rows.size();) {
    std::size_t hi = lo;
    while (hi < rows.size() && rows[hi].n == rows[lo].n) ++hi;
    GridSummary g;
    g.n = rows[lo].n;
    // Replication-level fields are repeated on every strategy row; read them once.
    std::map<std::size_t, const ResultRow*> reps;
    for (std::size_t q = lo; q < hi; ++q) reps.emplace(rows[q].replication, &rows[q]);
    std::vector<bool> exact;
    std::vector<double> errors;
    for (const auto& [r, row] : reps) {
      if (row->status != "ok") {
        ++g.failed;
        continue;
      }
      ++g.ok;
      exact.push_back(row->exact_recovery);
      if (std::isfinite(row->recovery_error)) errors.push_back(row->recovery_error);
    }
    if (meta.setting == Setting::kCommunity && !exact.empty()) {
      const auto d = estimate_delta(exact, meta.confidence_level);
      g.delta_hat = d.delta_hat;
      g.delta_lower = d.lower;
      g.delta_upper = d.upper;
    }
    if (!errors.empty()) {
      std::sort(errors.begin(), errors.end());
      const std::size_t m = errors.size();
      g.median_recovery_error = m % 2 ? errors[m / 2] : 0.5 * (errors[m / 2 - 1] + errors[m / 2]);
    }
    for (const auto& name : meta.strategies) {
      StrategySummary s;
      s.strategy = name;
      double sum = 0.0, sum_bound = 0.0;
      std::size_t bound_count = 0;
      std::vector<double> values;
      for (std::size_t q = lo; q < hi; ++q) {
        const auto& row = rows[q];
        if (row.strategy != name || row.status != "ok") continue;
        values.push_back(row.beta_hat);
        sum += row.beta_hat;
        if (std::isfinite(row.bias_bound)) {
          sum_bound += row.bias_bound;
          ++bound_count;
        }
      }
      s.count = values.size();
      if (s.count > 0) {
        s.mean_beta = sum / static_cast<double>(s.count);
        s.mean_bias = s.mean_beta - meta.beta_true;
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean_beta) * (v - s.mean_beta);
        s.se = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1) / static_cast<double>(s.count))
                           : std::numeric_limits<double>::infinity();
        s.ci_low = s.mean_bias - z * s.se;
        s.ci_high = s.mean_bias + z * s.se;
      }
      if (bound_count > 0) s.bias_bound = sum_bound / static_cast<double>(bound_count);
      g.strategies.push_back(s);
    }
    out.push_back(std::move(g));
    lo = hi;
  }
  return out;
}

namespace detail {

inline Eigen::MatrixXd linked_pair_counts(const AdjacencyMatrix& A, const CommunityAssignment& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.k, a.k);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j : A.neighbors(i)) m(a.sigma[i], a.sigma[j]) += 1.0;
  return m;
}

inline double exposure_residual_ss(const DesignMatrix& design) {
  const Eigen::Index p = design.X.cols();
  Eigen::MatrixXd others(design.X.rows(), p - 1);
  others << design.X.leftCols(DesignMatrix::kExposure), design.X.rightCols(p - DesignMatrix::kExposure - 1);
  const Eigen::VectorXd expo = design.X.col(DesignMatrix::kExposure);
  return (expo - others * others.colPivHouseholderQr().solve(expo)).squaredNorm();
}

}  // namespace detail

/// Runs one replication end to end. Module errors are captured in the record.
inline ReplicationRecord run_replication(const ExperimentConfig& cfg, std::size_t n, std::size_t rep) {
  ReplicationRecord rec;
  rec.n = n;
  rec.replication = rep;
  try {
    const auto seed = [&](SeedStream s) { return replication_seed(cfg.seed, n, rep, s); };
    AdjacencyMatrix A;
    Eigen::MatrixXd C, C_hat;
    CommunityAssignment estimate;
    if (cfg.setting == Setting::kCommunity) {
      auto s = sample_sbm(cfg.sbm, n, seed(SeedStream::kNetwork));
      A = std::move(s.A);
      C = dummy_encode(s.assignment);
      if (cfg.inject_true_locations) {
        estimate = s.assignment;
      } else {
        CommunityAssignment raw;
        if (cfg.label_noise >= 0.0) {
          raw = corrupt_labels(s.assignment, cfg.label_noise, seed(SeedStream::kLabelNoise));
        } else {
          auto opts = cfg.detection;
          opts.seed = seed(SeedStream::kDetection);
          raw = detect_communities(A, cfg.sbm.k, opts).sigma_hat;
        }
        estimate = relabel(raw, align_labels(raw, s.assignment).permutation);
      }
      rec.recovery_error = align_labels(estimate, s.assignment).misclassification;
      rec.exact_recovery = rec.recovery_error == 0.0;
      C_hat = dummy_encode(estimate);
    } else {
      auto s = sample_lsp(cfg.lsp, n, seed(SeedStream::kNetwork));
      A = std::move(s.A);
      C = s.positions.coords;
      if (cfg.inject_true_locations) {
        C_hat = C;
        rec.recovery_error = 0.0;
      } else {
        auto opts = cfg.embedding;
        opts.seed = seed(SeedStream::kEmbedding);
        auto e = embed_mle(A, cfg.lsp, opts, s.positions);
        C_hat = e.coords_hat.coords;
        rec.recovery_error = e.aligned_error_max;
      }
    }
    const Eigen::MatrixXd C_gen = cfg.gamma1_degree > 1 ? polynomial_basis(C, cfg.gamma1_degree) : C;
    const auto panel = simulate_panel(A, C_gen, cfg.coeffs, cfg.transitions, seed(SeedStream::kPanel));
    rec.warnings = panel.warnings;

    InfluenceInputs in;
    in.true_locations = &C_gen;
    in.estimated_locations = &C_hat;
    in.additive_degree = cfg.additive_degree;
    in.design.pooled = cfg.pooled;
    for (Strategy s : cfg.strategies) {
      const auto design = build_design(panel, A, control_for(s, in), in.design);
      const auto fit = fit_ols(design);
      rec.beta_hat.push_back(fit.beta_hat());
      if (s == Strategy::kProxy && cfg.setting == Setting::kCommunity) {
        rec.gamma_hat = fit.control_coefficients();
        rec.linked_pairs = detail::linked_pair_counts(A, estimate) * static_cast<double>(cfg.pooled ? cfg.transitions : 1);
        rec.exposure_resid_ss = detail::exposure_residual_ss(design);
      }
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.beta_hat.assign(cfg.strategies.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return rec;
}

/// Runs every (n, replication) pair, concurrently up to the worker count, then
/// computes delta_hat, ensemble biases and plug-in bias bounds per n.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t n : cfg.n_grid)
    for (std::size_t r = 0; r < cfg.replications; ++r) tasks.emplace_back(n, r);

  std::vector<ReplicationRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t q; (q = next.fetch_add(1)) < tasks.size();)
      records[q] = run_replication(cfg, tasks[q].first, tasks[q].second);
  };
  const int workers = std::min<int>(effective_workers(cfg.workers), static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  res.meta.setting = cfg.setting;
  res.meta.beta_true = cfg.coeffs.beta_influence;
  res.meta.confidence_level = cfg.confidence_level;
  for (Strategy s : cfg.strategies) res.meta.strategies.push_back(to_string(s));
  res.total_replications = records.size();

  // delta_hat per n feeds the plug-in bounds.
  std::map<std::size_t, double> delta;
  if (cfg.setting == Setting::kCommunity) {
    std::map<std::size_t, std::vector<bool>> flags;
    for (const auto& r : records)
      if (r.ok) flags[r.n].push_back(r.exact_recovery);
    for (const auto& [n, f] : flags) delta[n] = estimate_delta(f, cfg.confidence_level).delta_hat;
  }

  for (const auto& r : records) {
    if (!r.ok) ++res.failed_replications;
    for (const auto& w : r.warnings)
      if (std::find(res.warnings.begin(), res.warnings.end(), w) == res.warnings.end() && res.warnings.size() < 20)
        res.warnings.push_back(w);
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (r.ok && r.gamma_hat.size() > 0 && r.exposure_resid_ss > 0.0) {
      const auto table = pair_bound_table(r.gamma_hat, delta[r.n], cfg.sbm.k, cfg.cov_cap, cfg.bound_form);
      bound = (r.linked_pairs.array() * table.array()).sum() / r.exposure_resid_ss;
    }
    for (std::size_t q = 0; q < cfg.strategies.size(); ++q) {
      ResultRow row;
      row.n = r.n;
      row.replication = r.replication;
      row.strategy = res.meta.strategies[q];
      row.beta_hat = r.beta_hat[q];
      row.recovery_error = r.recovery_error;
      row.exact_recovery = r.exact_recovery;
      if (cfg.strategies[q] == Strategy::kProxy) row.bias_bound = bound;
      row.status = r.ok ? "ok" : "failed";
      res.rows.push_back(std::move(row));
    }
  }
  res.summaries = summarize(res.rows, res.meta);
  return res;
}

}  // namespace peerinf
