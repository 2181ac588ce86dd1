#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <Eigen/Dense>

#include "peerinf/behavior.hpp"
#include "peerinf/bias_bound.hpp"
#include "peerinf/communities.hpp"
#include "peerinf/embedding.hpp"
#include "peerinf/errors.hpp"
#include "peerinf/inference.hpp"
#include "peerinf/io.hpp"
#include "peerinf/netgen.hpp"

namespace peerinf {

enum class Setting { kCommunity, kContinuous };

inline std::string to_string(Setting s) { return s == Setting::kCommunity ? "community" : "continuous"; }

struct ExperimentConfig {
  Setting setting = Setting::kCommunity;
  SbmParams sbm;
  LspParams lsp;
  StructuralCoeffs coeffs;
  /// Degree of the per-coordinate polynomial through which locations enter
  /// the behavior equation; 1 is the linear model.
  int gamma1_degree = 1;
  int transitions = 1;
  bool pooled = false;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1;
  std::vector<Strategy> strategies;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
  int workers = 1;
  double confidence_level = 0.95;
  DetectionOptions detection;
  EmbeddingOptions embedding;
  int additive_degree = 2;
  double cov_cap = 0.25;
  BoundForm bound_form = BoundForm::kTotalCovariance;
  /// Test hooks: substitute the truth for the recovered locations, or a copy
  /// of the truth with this share of labels reassigned (negative: off).
  bool inject_true_locations = false;
  double label_noise = -1.0;
};

/// Throws ValidationError unless the configuration is internally consistent.
inline void validate(const ExperimentConfig& c) {
  if (c.n_grid.empty()) throw ValidationError("n_grid must not be empty");
  for (std::size_t q = 1; q < c.n_grid.size(); ++q)
    if (c.n_grid[q] <= c.n_grid[q - 1]) throw ValidationError("n_grid must be strictly increasing");
  if (c.n_grid.front() < 2) throw ValidationError("grid sizes must be >= 2");
  if (c.replications < 1) throw ValidationError("replications must be >= 1");
  if (c.strategies.empty()) throw ValidationError("at least one strategy is required");
  if (c.workers < 1) throw ValidationError("workers must be >= 1");
  if (c.transitions < 1) throw ValidationError("transitions must be >= 1");
  if (c.gamma1_degree < 1) throw ValidationError("gamma1_degree must be >= 1");
  if (!(c.confidence_level > 0.0 && c.confidence_level < 1.0)) throw ValidationError("confidence_level must lie in (0,1)");
  validate(c.coeffs);
  Eigen::Index width = 0;
  if (c.setting == Setting::kCommunity) {
    validate(c.sbm);
    if (c.sbm.k < 2) throw ValidationError("community experiments need k >= 2");
    if (c.gamma1_degree != 1) throw ValidationError("gamma1_degree applies to the continuous setting only");
    width = c.sbm.k - 1;
  } else {
    validate(c.lsp);
    width = static_cast<Eigen::Index>(c.lsp.d) * c.gamma1_degree;
    if (c.label_noise >= 0.0) throw ValidationError("label_noise applies to the community setting only");
  }
  if (c.coeffs.gamma1.size() != width) {
    std::ostringstream os;
    os << "gamma1 must have length " << width << " for this setting";
    throw ValidationError(os.str());
  }
  if (c.label_noise > 1.0) throw ValidationError("label_noise must lie in [0,1]");
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  for (auto& f : io::split(s, sep)) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> v;
  for (const auto& f : split_list(s, ',')) {
    if (f.empty()) throw ConfigError("empty entry in list '" + s + "'");
    v.push_back(io::parse_double(f));
  }
  return v;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected a boolean, got '" + s + "'");
}

/// Reads one section, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name, std::set<std::string> allowed)
      : tree_(tree), name_(std::move(name)) {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
      if (!child.empty()) throw ConfigError("nested value under '" + key + "' in [" + name_ + "]");
    }
  }

  template <class F>
  auto wrap(const std::string& key, F&& f) const {
    try {
      return f();
    } catch (const IoError& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  bool present() const { return tree_ != nullptr; }
  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string text(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing key '" + key + "' in section [" + name_ + "]");
    return tree_->get<std::string>(key);
  }
  std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }
  double number(const std::string& key) const { return wrap(key, [&] { return io::parse_double(text(key)); }); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  long long integer(const std::string& key) const { return wrap(key, [&] { return io::parse_int(text(key)); }); }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }
  bool flag(const std::string& key, bool fallback) const {
    return has(key) ? wrap(key, [&] { return parse_bool(text(key)); }) : fallback;
  }
  std::vector<double> numbers(const std::string& key) const { return wrap(key, [&] { return parse_doubles(text(key)); }); }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
};

}  // namespace detail

/// Parses the INI-style experiment description. Grammar (all sections flat,
/// lists comma separated, matrix rows separated by '|'):
///
///   [experiment] setting, n_grid, replications, strategies, seed, output_dir,
///                workers, transitions, pooled, confidence_level,
///                inject_true_locations, label_noise
///   [sbm]        k, rho, affinity, directed, a_over_n, b_over_n,
///                alpha_density, beta_balance, lambda_sv
///   [lsp]        d, distribution, lower, upper, intercept, scale, directed
///   [behavior]   alpha0, alpha1, beta, gamma1, gamma2, sigma_eps, gamma1_degree
///   [detection]  restarts, max_iter, max_sweeps, refine_all_restarts, polish,
///                random_starts, start_budget
///   [embedding]  restarts, max_iters, grad_tol, stall_tol, mds_init
///   [estimation] additive_degree
///   [bound]      cov_cap, form
///
/// Unknown sections and keys are errors.
inline ExperimentConfig parse_config(std::istream& is) {
  boost::property_tree::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  static const std::set<std::string> sections = {"experiment", "sbm", "lsp", "behavior",
                                                 "detection", "embedding", "estimation", "bound"};
  for (const auto& [name, child] : root) {
    if (!sections.count(name)) throw ConfigError("unknown section [" + name + "]");
    if (child.empty()) throw ConfigError("top-level key '" + name + "' outside any section");
  }
  auto find = [&](const std::string& s) -> const boost::property_tree::ptree* {
    auto it = root.find(s);
    return it == root.not_found() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  detail::Section ex(find("experiment"), "experiment",
                     {"setting", "n_grid", "replications", "strategies", "seed", "output_dir", "workers", "transitions",
                      "pooled", "confidence_level", "inject_true_locations", "label_noise"});
  if (!ex.present()) throw ConfigError("missing section [experiment]");
  const auto setting = ex.text("setting");
  if (setting == "community") c.setting = Setting::kCommunity;
  else if (setting == "continuous") c.setting = Setting::kContinuous;
  else throw ConfigError("setting must be 'community' or 'continuous'");
  for (double v : ex.numbers("n_grid")) {
    if (v < 0 || v != std::floor(v)) throw ConfigError("n_grid entries must be non-negative integers");
    c.n_grid.push_back(static_cast<std::size_t>(v));
  }
  const auto reps = ex.integer("replications");
  if (reps < 1) throw ConfigError("replications must be >= 1");
  c.replications = static_cast<std::size_t>(reps);
  for (const auto& s : detail::split_list(ex.text("strategies", "naive, oracle, proxy"), ','))
    if (!s.empty()) c.strategies.push_back(parse_strategy(s));
  c.seed = static_cast<std::uint64_t>(ex.integer("seed"));
  c.output_dir = ex.text("output_dir", "results");
  c.workers = static_cast<int>(ex.integer("workers", 1));
  c.transitions = static_cast<int>(ex.integer("transitions", 1));
  c.pooled = ex.flag("pooled", false);
  c.confidence_level = ex.number("confidence_level", 0.95);
  c.inject_true_locations = ex.flag("inject_true_locations", false);
  c.label_noise = ex.number("label_noise", -1.0);

  detail::Section sbm(find("sbm"), "sbm",
                      {"k", "rho", "affinity", "directed", "a_over_n", "b_over_n", "alpha_density", "beta_balance",
                       "lambda_sv"});
  if (sbm.present()) {
    c.sbm.k = static_cast<int>(sbm.integer("k"));
    c.sbm.rho = sbm.has("rho") ? sbm.numbers("rho") : std::vector<double>(static_cast<std::size_t>(std::max(1, c.sbm.k)), 1.0 / std::max(1, c.sbm.k));
    const auto rows = detail::split_list(sbm.text("affinity"), '|');
    c.sbm.W.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = detail::parse_doubles(rows[r]);
      if (v.size() != rows.size()) throw ConfigError("affinity must be square");
      for (std::size_t q = 0; q < v.size(); ++q) c.sbm.W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = v[q];
    }
    c.sbm.directed = sbm.flag("directed", false);
    if (sbm.has("a_over_n") || sbm.has("b_over_n")) {
      GmzzDescriptor g;
      g.a_over_n = sbm.number("a_over_n");
      g.b_over_n = sbm.number("b_over_n");
      g.alpha_density = sbm.number("alpha_density", 1.0);
      g.beta_balance = sbm.number("beta_balance", 1.0);
      g.lambda_sv = sbm.number("lambda_sv", 0.0);
      c.sbm.gmzz = g;
    }
  } else if (c.setting == Setting::kCommunity) {
    throw ConfigError("community setting requires section [sbm]");
  }

  detail::Section lsp(find("lsp"), "lsp", {"d", "distribution", "lower", "upper", "intercept", "scale", "directed"});
  if (lsp.present()) {
    c.lsp.d = static_cast<int>(lsp.integer("d", 2));
    c.lsp.dist = CoordinateDistribution::parse(lsp.text("distribution", "standard_normal"), lsp.number("lower", 0.0),
                                               lsp.number("upper", 1.0));
    c.lsp.link_intercept = lsp.number("intercept");
    c.lsp.link_scale = lsp.number("scale", 1.0);
    c.lsp.directed = lsp.flag("directed", false);
  } else if (c.setting == Setting::kContinuous) {
    throw ConfigError("continuous setting requires section [lsp]");
  }

  detail::Section beh(find("behavior"), "behavior",
                      {"alpha0", "alpha1", "beta", "gamma1", "gamma2", "sigma_eps", "gamma1_degree"});
  if (!beh.present()) throw ConfigError("missing section [behavior]");
  c.coeffs.alpha0 = beh.number("alpha0", 0.0);
  c.coeffs.alpha1 = beh.number("alpha1", 0.0);
  c.coeffs.beta_influence = beh.number("beta");
  c.coeffs.gamma1 = detail::to_vector(beh.numbers("gamma1"));
  c.coeffs.gamma2 = beh.has("gamma2") ? detail::to_vector(beh.numbers("gamma2")) : Eigen::VectorXd::Ones(1);
  c.coeffs.sigma_eps = beh.number("sigma_eps", 1.0);
  c.gamma1_degree = static_cast<int>(beh.integer("gamma1_degree", 1));

  detail::Section det(find("detection"), "detection", {"restarts", "max_iter", "max_sweeps", "refine_all_restarts", "polish",
                                                            "random_starts", "start_budget"});
  c.detection.kmeans_restarts = static_cast<int>(det.integer("restarts", c.detection.kmeans_restarts));
  c.detection.kmeans_max_iter = static_cast<int>(det.integer("max_iter", c.detection.kmeans_max_iter));
  c.detection.max_sweeps = static_cast<int>(det.integer("max_sweeps", c.detection.max_sweeps));
  c.detection.refine_all_restarts = det.flag("refine_all_restarts", c.detection.refine_all_restarts);
  c.detection.polish = det.flag("polish", c.detection.polish);
  c.detection.random_starts = static_cast<int>(det.integer("random_starts", c.detection.random_starts));
  c.detection.start_budget = static_cast<int>(det.integer("start_budget", c.detection.start_budget));

  detail::Section emb(find("embedding"), "embedding", {"restarts", "max_iters", "grad_tol", "stall_tol", "mds_init"});
  c.embedding.restarts = static_cast<int>(emb.integer("restarts", c.embedding.restarts));
  c.embedding.max_iters = static_cast<int>(emb.integer("max_iters", c.embedding.max_iters));
  c.embedding.grad_tol = emb.number("grad_tol", c.embedding.grad_tol);
  c.embedding.stall_tol = emb.number("stall_tol", c.embedding.stall_tol);
  c.embedding.mds_init = emb.flag("mds_init", c.embedding.mds_init);

  detail::Section est(find("estimation"), "estimation", {"additive_degree"});
  c.additive_degree = static_cast<int>(est.integer("additive_degree", 2));

  detail::Section bnd(find("bound"), "bound", {"cov_cap", "form"});
  c.cov_cap = bnd.number("cov_cap", 0.25);
  const auto form = bnd.text("form", "total_covariance");
  if (form == "total_covariance") c.bound_form = BoundForm::kTotalCovariance;
  else if (form == "four_product") c.bound_form = BoundForm::kFourProduct;
  else throw ConfigError("bound form must be 'total_covariance' or 'four_product'");

  validate(c);
  return c;
}

inline ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  auto is = io::open_in(path);
  return parse_config(is);
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace peerinf
