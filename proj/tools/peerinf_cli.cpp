#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "peerinf/peerinf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace peerinf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailures = 2;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_json(const fs::path& path, const json& j) {
  auto os = io::open_out(path);
  os << j.dump(2) << '\n';
}

void refuse_existing(const std::vector<fs::path>& paths, bool overwrite) {
  if (overwrite) return;
  for (const auto& p : paths)
    if (fs::exists(p)) throw IoError(p.string() + " exists; pass --overwrite to replace it");
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = ".";
  bool overwrite = false;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment configuration (INI)");
  if (config_required) opt->required();
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--workers", c.workers, "worker threads (overrides the config)");
  app->add_option("--out", c.out, "output directory");
  app->add_flag("--overwrite", c.overwrite, "replace existing output files");
}

ExperimentConfig load_config(const Common& c) {
  auto cfg = parse_config_file(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  validate(cfg);
  return cfg;
}


Eigen::MatrixXd load_locations(const ExperimentConfig& cfg, const fs::path& path) {
  if (cfg.setting == Setting::kCommunity) return dummy_encode(io::read_labels(path, cfg.sbm.k));
  return io::read_matrix(path);
}

// ---------------------------------------------------------------------------

int cmd_generate(const Common& c, std::size_t n) {
  auto cfg = load_config(c);
  if (n == 0) n = cfg.n_grid.front();
  const fs::path out = c.out;
  if (cfg.setting == Setting::kCommunity) {
    refuse_existing({out / "edges.tsv", out / "labels.csv"}, c.overwrite);
    const auto s = sample_sbm(cfg.sbm, n, cfg.seed);
    io::write_edge_list(out / "edges.tsv", s.A);
    io::write_labels(out / "labels.csv", s.assignment);
    std::cout << "nodes " << n << ", edges " << s.A.edge_count() << "\n";
  } else {
    refuse_existing({out / "edges.tsv", out / "positions.csv"}, c.overwrite);
    const auto s = sample_lsp(cfg.lsp, n, cfg.seed);
    io::write_edge_list(out / "edges.tsv", s.A);
    io::write_positions(out / "positions.csv", s.positions);
    std::cout << "nodes " << n << ", edges " << s.A.edge_count() << "\n";
  }
  return kExitOk;
}

int cmd_detect(const Common& c, const std::string& edges, std::size_t n, int k, bool directed,
               const std::string& truth) {
  if (!c.config.empty()) {
    const auto cfg = load_config(c);
    if (k == 0) k = cfg.sbm.k;
    directed = directed || cfg.sbm.directed;
  }
  if (k < 2) throw ValidationError("detect needs --k >= 2 (or a config with [sbm] k)");
  const fs::path out = c.out;
  refuse_existing({out / "labels_hat.csv", out / "detection.json"}, c.overwrite);
  const auto A = io::read_edge_list(fs::path(edges), n, directed);
  DetectionOptions opts;
  opts.seed = c.seed.value_or(0);
  DetectionResult r = truth.empty() ? detect_communities(A, k, opts)
                                    : detect_communities(A, k, opts, io::read_labels(truth, k));
  io::write_labels(out / "labels_hat.csv", r.sigma_hat, "label_hat");
  json j;
  j["misclassification_rate"] = std::isfinite(r.misclassification_rate) ? json(r.misclassification_rate) : json(nullptr);
  j["exact_recovery"] = truth.empty() ? json(nullptr) : json(r.exact_recovery);
  j["permutation"] = r.permutation;
  j["profile_log_likelihood"] = r.profile_log_likelihood;
  write_json(out / "detection.json", j);
  return kExitOk;
}

int cmd_embed(const Common& c, const std::string& edges, std::size_t n, const std::string& truth) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  refuse_existing({out / "positions_hat.csv", out / "embedding.json"}, c.overwrite);
  const auto A = io::read_edge_list(fs::path(edges), n, cfg.lsp.directed);
  auto opts = cfg.embedding;
  opts.seed = cfg.seed;
  const auto r = truth.empty() ? embed_mle(A, cfg.lsp, opts)
                               : embed_mle(A, cfg.lsp, opts, LatentPositions{io::read_matrix(truth)});
  io::write_positions(out / "positions_hat.csv", r.coords_hat);
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  write_json(out / "embedding.json", {{"log_likelihood", r.log_likelihood},
                                      {"error_sum", num(r.aligned_error_sum)},
                                      {"error_max", num(r.aligned_error_max)},
                                      {"converged", r.converged},
                                      {"iterations", r.iterations}});
  return kExitOk;
}

int cmd_simulate(const Common& c, const std::string& edges, const std::string& locations) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  refuse_existing({out / "panel.csv", out / "covariates.csv"}, c.overwrite);
  const Eigen::MatrixXd loc = load_locations(cfg, locations);
  const bool directed = cfg.setting == Setting::kCommunity ? cfg.sbm.directed : cfg.lsp.directed;
  const auto A = io::read_edge_list(fs::path(edges), static_cast<std::size_t>(loc.rows()), directed);
  const Eigen::MatrixXd C = cfg.gamma1_degree > 1 ? polynomial_basis(loc, cfg.gamma1_degree) : loc;
  const auto panel = simulate_panel(A, C, cfg.coeffs, cfg.transitions, cfg.seed);
  for (const auto& w : panel.warnings) std::cerr << "warning: " << w << "\n";
  io::write_panel(out / "panel.csv", panel);
  io::write_matrix(out / "covariates.csv", panel.X, "x");
  return kExitOk;
}

json fit_json(const RegressionFit& f) {
  return {{"strategy", f.strategy},
          {"column_names", f.column_names},
          {"coeffs", to_std(f.coeffs)},
          {"std_errors", to_std(f.std_errors)},
          {"residual_variance", f.residual_variance},
          {"condition_flag", f.condition_flag}};
}

int cmd_estimate(const Common& c, const std::string& edges, const std::string& panel_path,
                 const std::string& covariates, const std::vector<std::string>& strategy_names,
                 const std::string& true_loc, const std::string& est_loc, std::size_t replications) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  std::vector<Strategy> strategies;
  for (const auto& s : strategy_names) strategies.push_back(parse_strategy(s));
  if (strategies.empty()) strategies = cfg.strategies;

  Eigen::MatrixXd C_true, C_hat;
  if (!true_loc.empty()) {
    C_true = load_locations(cfg, true_loc);
    if (cfg.gamma1_degree > 1) C_true = polynomial_basis(C_true, cfg.gamma1_degree);
  }
  if (!est_loc.empty()) C_hat = load_locations(cfg, est_loc);
  InfluenceInputs in;
  in.true_locations = true_loc.empty() ? nullptr : &C_true;
  in.estimated_locations = est_loc.empty() ? nullptr : &C_hat;
  in.additive_degree = cfg.additive_degree;
  in.design.pooled = cfg.pooled;
  const bool directed = cfg.setting == Setting::kCommunity ? cfg.sbm.directed : cfg.lsp.directed;

  if (replications > 0) {
    // Ensemble over fresh behavior noise on the fixed network and locations.
    if (C_true.size() == 0) throw ValidationError("an ensemble needs --true-locations to generate behavior");
    const auto A = io::read_edge_list(fs::path(edges), static_cast<std::size_t>(C_true.rows()), directed);
    refuse_existing({out / "ensemble.csv"}, c.overwrite);
    auto os = io::open_out(out / "ensemble.csv");
    os << "replication,strategy,beta_hat\n";
    for (std::size_t r = 0; r < replications; ++r) {
      const auto panel = simulate_panel(A, C_true, cfg.coeffs, cfg.transitions,
                                        replication_seed(cfg.seed, A.size(), r, SeedStream::kPanel));
      for (Strategy s : strategies)
        os << r << ',' << to_string(s) << ',' << io::format_double(estimate_influence(panel, A, s, in).beta_hat())
           << '\n';
    }
    return kExitOk;
  }

  if (panel_path.empty() || covariates.empty()) throw ValidationError("estimate needs --panel and --covariates");
  BehaviorPanel panel;
  panel.Y = io::read_panel(panel_path);
  panel.X = io::read_matrix(covariates);
  panel.T = static_cast<int>(panel.Y.cols()) - 1;
  const auto A = io::read_edge_list(fs::path(edges), static_cast<std::size_t>(panel.Y.rows()), directed);
  std::vector<fs::path> paths;
  for (Strategy s : strategies) paths.push_back(out / ("fit_" + to_string(s) + ".json"));
  refuse_existing(paths, c.overwrite);
  for (std::size_t q = 0; q < strategies.size(); ++q) {
    const auto fit = estimate_influence(panel, A, strategies[q], in);
    write_json(paths[q], fit_json(fit));
    std::cout << to_string(strategies[q]) << " beta_hat " << io::format_double(fit.beta_hat()) << "\n";
  }
  return kExitOk;
}

Eigen::VectorXd vertex(int label, int k) {
  if (label < 1 || label > k) throw ValidationError("labels for the bound must lie in 1..k");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k - 1);
  if (label < k) v[label - 1] = 1.0;
  return v;
}

int cmd_bound(const Common& c, double delta, const std::vector<double>& gamma, const std::string& fit_path, int k,
              int label_i, int label_j, double cap, const std::string& form) {
  const fs::path out = c.out;
  refuse_existing({out / "bound.json"}, c.overwrite);
  BoundInput in;
  in.delta = delta;
  in.cov_g0_cap = cap;
  in.form = form == "four_product" ? BoundForm::kFourProduct : BoundForm::kTotalCovariance;
  if (form != "four_product" && form != "total_covariance") throw ValidationError("unknown bound form '" + form + "'");
  std::string source = "supplied";
  if (!fit_path.empty()) {
    const auto j = json::parse(io::read_text(fit_path));
    const auto names = j.at("column_names").get<std::vector<std::string>>();
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    // Linear control columns are named c<a> or chat<a>; dropped ones read as zero.
    std::vector<double> g(static_cast<std::size_t>(std::max(0, k - 1)), 0.0);
    bool any = false;
    for (std::size_t q = 0; q < names.size() && q < coeffs.size(); ++q) {
      const auto& name = names[q];
      const std::size_t digits = name.rfind("chat", 0) == 0 ? 4 : (name.rfind('c', 0) == 0 ? 1 : 0);
      if (digits == 0 || name.find('^') != std::string::npos) continue;
      const auto a = static_cast<std::size_t>(io::parse_int(name.substr(digits)));
      if (a < 1) continue;
      if (a > g.size()) g.resize(a, 0.0);
      g[a - 1] = coeffs[q];
      any = true;
    }
    if (!any) throw ConfigError("fit has no location-control block");
    in.gamma1 = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    source = "estimated";
  } else {
    if (gamma.empty()) throw ValidationError("bound needs --gamma or --fit");
    in.gamma1 = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
  }
  if (k == 0) k = static_cast<int>(in.gamma1.size()) + 1;
  if (k != in.gamma1.size() + 1) throw ValidationError("gamma must have k-1 entries");
  in.chat_i = vertex(label_i, k);
  in.chat_j = vertex(label_j, k);
  auto r = max_bias_bound(in);
  r.gamma_source = source;
  json j = {{"delta", r.delta},
            {"gamma_source", r.gamma_source},
            {"bound_value", r.bound_value},
            {"argmax_pair", {to_std(r.argmax_i), to_std(r.argmax_j)}},
            {"per_pair", r.per_pair}};
  write_json(out / "bound.json", j);
  std::cout << "bound " << io::format_double(r.bound_value) << "\n";
  return kExitOk;
}

std::vector<ReportFormat> formats_of(const std::vector<std::string>& names) {
  std::vector<ReportFormat> f;
  for (const auto& s : names) f.push_back(parse_report_format(s));
  if (f.empty()) f = {ReportFormat::kCsv, ReportFormat::kJson, ReportFormat::kSvg};
  return f;
}

int cmd_experiment(const Common& c, const std::vector<std::string>& formats, bool log_y) {
  auto cfg = load_config(c);
  const fs::path out = c.out == "." ? cfg.output_dir : fs::path(c.out);
  const auto fmts = formats_of(formats);
  std::vector<fs::path> targets;
  for (auto f : fmts) targets.push_back(report_path(out, f));
  refuse_existing(targets, c.overwrite);
  const auto result = run_experiment(cfg);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  emit_report(result, out, fmts, c.overwrite, PlotOptions{log_y});
  for (const auto& g : result.summaries) {
    std::cout << "n=" << g.n;
    if (std::isfinite(g.delta_hat)) std::cout << " delta_hat=" << g.delta_hat;
    for (const auto& s : g.strategies) std::cout << ' ' << s.strategy << "_bias=" << s.mean_bias;
    std::cout << "\n";
  }
  if (result.excessive_failures()) {
    std::cerr << result.failed_replications << " of " << result.total_replications << " replications failed\n";
    return kExitFailures;
  }
  return kExitOk;
}

int cmd_report(const Common& c, const std::string& in, const std::vector<std::string>& formats, bool log_y) {
  const auto result = load_result(in);
  emit_report(result, c.out, formats_of(formats), c.overwrite, PlotOptions{log_y});
  return result.excessive_failures() ? kExitFailures : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-influence estimation under latent homophily"};
  app.require_subcommand(1);

  Common c;
  std::size_t n = 0;
  int k = 0;
  bool directed = false;
  std::string edges, truth, locations, panel, covariates, true_loc, est_loc, fit, input, form = "total_covariance";
  std::vector<std::string> strategies, formats;
  std::size_t replications = 0;
  double delta = 0.0, cap = 0.25;
  std::vector<double> gamma;
  int label_i = 1, label_j = 1;
  bool log_y = false;

  auto* gen = app.add_subcommand("generate", "sample a network and its latent truth");
  add_common(gen, c, true);
  gen->add_option("--n", n, "node count (default: first grid point)");

  auto* det = app.add_subcommand("detect", "recover communities from an edge list");
  add_common(det, c, false);
  det->add_option("--edges", edges, "edge list (i<TAB>j)")->required();
  det->add_option("--n", n, "node count (default: largest index + 1)");
  det->add_option("--k", k, "number of blocks");
  det->add_flag("--directed", directed, "treat the edge list as directed");
  det->add_option("--truth", truth, "true labels for scoring");

  auto* emb = app.add_subcommand("embed", "maximum-likelihood latent positions");
  add_common(emb, c, true);
  emb->add_option("--edges", edges, "edge list (i<TAB>j)")->required();
  emb->add_option("--n", n, "node count");
  emb->add_option("--truth", truth, "true positions for alignment error");

  auto* sim = app.add_subcommand("simulate", "simulate a behavior panel");
  add_common(sim, c, true);
  sim->add_option("--edges", edges, "edge list")->required();
  sim->add_option("--locations", locations, "labels.csv or positions.csv")->required();

  auto* est = app.add_subcommand("estimate", "fit the effective model");
  add_common(est, c, true);
  est->add_option("--edges", edges, "edge list")->required();
  est->add_option("--panel", panel, "panel CSV (node,t,y)");
  est->add_option("--covariates", covariates, "covariates CSV");
  est->add_option("--strategy", strategies, "naive|oracle|proxy|additive (repeatable)");
  est->add_option("--true-locations", true_loc, "true labels or positions");
  est->add_option("--estimated-locations", est_loc, "recovered labels or positions");
  est->add_option("--replications", replications, "write an ensemble over fresh behavior noise");

  auto* bnd = app.add_subcommand("bound", "maximize the covariance bias bound");
  add_common(bnd, c, false);
  bnd->add_option("--delta", delta, "recovery failure probability")->required();
  bnd->add_option("--gamma", gamma, "location loading (k-1 values)")->delimiter(',');
  bnd->add_option("--fit", fit, "fit JSON whose control block supplies gamma");
  bnd->add_option("--k", k, "number of blocks");
  bnd->add_option("--label-i", label_i, "observed label of node i (1-based)");
  bnd->add_option("--label-j", label_j, "observed label of node j (1-based)");
  bnd->add_option("--cap", cap, "cap on |Cov(C_i, C_j | recovery)| entries");
  bnd->add_option("--form", form, "total_covariance|four_product");

  auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment");
  add_common(exp, c, true);
  exp->add_option("--format", formats, "csv|json|svg (repeatable; default all)");
  exp->add_flag("--log-y", log_y, "logarithmic y axis in the plot");

  auto* rep = app.add_subcommand("report", "reload results and re-emit reports");
  add_common(rep, c, false);
  rep->add_option("--in", input, "directory with rows.csv and summary.json")->required();
  rep->add_option("--format", formats, "csv|json|svg (repeatable; default all)");
  rep->add_flag("--log-y", log_y, "logarithmic y axis in the plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen) return cmd_generate(c, n);
    if (*det) return cmd_detect(c, edges, n, k, directed, truth);
    if (*emb) return cmd_embed(c, edges, n, truth);
    if (*sim) return cmd_simulate(c, edges, locations);
    if (*est) return cmd_estimate(c, edges, panel, covariates, strategies, true_loc, est_loc, replications);
    if (*bnd) return cmd_bound(c, delta, gamma, fit, k, label_i, label_j, cap, form);
    if (*exp) return cmd_experiment(c, formats, log_y);
    if (*rep) return cmd_report(c, input, formats, log_y);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
