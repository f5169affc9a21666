// Command-line front end: fit a model, run simulation scenarios, merge
// scenario outputs into a report.
//
// Exit codes: 0 ok, 2 parse/usage error, 3 dimension or rank error,
// 4 method failure, 5 scenario validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdinfer/cluster_tree.hpp"
#include "hdinfer/csv.hpp"
#include "hdinfer/desparsified_lasso.hpp"
#include "hdinfer/glm.hpp"
#include "hdinfer/multi_split.hpp"
#include "hdinfer/result_io.hpp"
#include "hdinfer/ridge_projection.hpp"
#include "hdinfer/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hdinfer;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitMethod = 4;
constexpr int kExitScenario = 5;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("HDINFER_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
    throw ConfigError("HDINFER_SEED is not an integer");
  }
  return 1;
}

struct FitArgs {
  std::string data_path;
  std::string response;
  std::string method = "ridge-proj";
  std::string family = "gaussian";
  double alpha = 0.05;
  double level = 0.95;
  std::string groups;  // comma indices or a JSON file with a list of groups
  bool cluster_groups = false;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<double> pval_corr_threshold;
  std::string out = "hdinfer_fit";
  std::string tuning = "zz";
  int multi_split_b = 100;
  int group_n_mc = 10000;
};

std::vector<std::vector<int>> parse_groups(const std::string& spec, int p) {
  std::vector<std::vector<int>> groups;
  if (spec.empty()) return groups;
  if (fs::exists(spec)) {
    std::ifstream in(spec);
    json j = json::parse(in);
    for (const auto& g : j) groups.push_back(g.get<std::vector<int>>());
  } else {
    std::vector<int> g;
    std::string token;
    std::stringstream ss(spec);
    while (std::getline(ss, token, ',')) g.push_back(std::stoi(token));
    groups.push_back(g);
  }
  for (auto& g : groups)
    for (int j : g)
      if (j < 0 || j >= p)
        throw ConfigError("group index " + std::to_string(j) + " out of range");
  return groups;
}

void print_fit_table(const InferenceResult& res,
                     const std::vector<std::string>& names,
                     std::optional<double> threshold) {
  std::printf("%-20s %12s %12s %12s %12s %12s %12s\n", "variable", "estimate",
              "se", "pval", "pval_corr", "ci_lower", "ci_upper");
  auto cell = [](double v) {
    char buf[32];
    if (std::isfinite(v))
      std::snprintf(buf, sizeof(buf), "%12.5g", v);
    else
      std::snprintf(buf, sizeof(buf), "%12s", ".");
    return std::string(buf);
  };
  int shown = 0;
  for (Index j = 0; j < res.p(); ++j) {
    if (threshold && !(std::isfinite(res.p_adjusted[j]) &&
                       res.p_adjusted[j] <= *threshold))
      continue;
    std::printf("%-20s %s %s %s %s %s %s\n", names[j].c_str(),
                cell(res.estimate[j]).c_str(), cell(res.se[j]).c_str(),
                cell(res.p_raw[j]).c_str(), cell(res.p_adjusted[j]).c_str(),
                cell(res.ci_lower[j]).c_str(), cell(res.ci_upper[j]).c_str());
    ++shown;
  }
  if (threshold)
    std::printf("(%d of %d variables at pval_corr <= %g)\n", shown,
                static_cast<int>(res.p()), *threshold);
  for (const auto& w : res.warnings) std::printf("note: %s\n", w.c_str());
}

int run_fit(const FitArgs& args) {
  CsvTable table = read_csv(args.data_path);
  auto it = std::find(table.columns.begin(), table.columns.end(), args.response);
  if (it == table.columns.end())
    throw ConfigError("response column '" + args.response + "' not found in " +
                      args.data_path);
  Index y_col = std::distance(table.columns.begin(), it);
  const Index n = table.values.rows(), p_all = table.values.cols() - 1;
  if (p_all < 1) throw DimensionError("no predictor columns besides the response");

  Matrix x(n, p_all);
  std::vector<std::string> names;
  Index c = 0;
  for (Index j = 0; j < table.values.cols(); ++j) {
    if (j == y_col) continue;
    x.col(c) = table.values.col(j);
    names.push_back(table.columns[j]);
    ++c;
  }
  Vector y = table.values.col(y_col);
  Dataset raw = make_dataset(std::move(x), std::move(y));

  const std::uint64_t seed = resolve_seed(args.seed);
  Family family = family_from_string(args.family);

  // non-gaussian families run the linear engines on the weighted problem
  Dataset working = raw;
  std::optional<NoiseEstimate> noise;
  std::vector<std::string> glm_warnings;
  if (family != Family::Gaussian) {
    GlmSpec spec = GlmSpec::make(family);
    GlmFit fit = l1_glm_fit(raw, spec, Rng(seed).stream(0x61A), {});
    WeightedProblem wp = build_weighted_problem(raw, spec, fit);
    working = make_dataset(wp.x_w, wp.y_w);
    noise = NoiseEstimate{1.0, NoiseMethod::Fixed};
    glm_warnings = fit.warnings;
  }

  InferenceResult report;
  std::optional<RidgeProjectionComponents> ridge_comps;
  std::optional<RidgeResult> ridge_res;
  std::optional<NodewiseComponents> nodewise_comps;
  std::optional<DesparsifiedResult> despars_res;

  if (args.method == "ridge-proj") {
    Dataset sd = standardize(working);
    ridge_comps = ridge_components(sd);
    NoiseEstimate sigma = noise ? *noise
                                : estimate_noise(sd, NoiseMethod::ScaledLasso,
                                                 Rng(seed).stream(0x51E));
    RidgeOptions opts;
    opts.alpha = args.alpha;
    opts.level = args.level;
    opts.threads = args.threads;
    ridge_res = ridge_inference(sd, *ridge_comps, sigma, seed, opts);
    report = ridge_res->report;
  } else if (args.method == "lasso-proj") {
    Dataset sd = standardize(working);
    NodewiseOptions nw;
    nw.tuning = args.tuning == "cv" ? NodewiseTuning::Cv : NodewiseTuning::Zz;
    nw.threads = args.threads;
    nodewise_comps = nodewise_lasso(sd, nw, seed);
    NoiseEstimate sigma = noise ? *noise
                                : estimate_noise(sd, NoiseMethod::ScaledLasso,
                                                 Rng(seed).stream(0x51E));
    DesparsOptions opts;
    opts.alpha = args.alpha;
    opts.level = args.level;
    opts.threads = args.threads;
    despars_res = desparsified_inference(sd, *nodewise_comps, sigma, seed, opts);
    report = despars_res->report;
  } else if (args.method == "multi-split") {
    AggregationConfig cfg;
    cfg.n_splits = args.multi_split_b;
    cfg.ci_level = args.level;
    MultiSplitResult res = multi_split_inference(
        working, cfg, cv_lasso_screener(cfg.screener_cv), seed, args.threads);
    report = to_inference_result(res, args.alpha);
  } else {
    throw ConfigError("unknown method '" + args.method +
                      "' (expected multi-split, ridge-proj or lasso-proj)");
  }
  if (family != Family::Gaussian) report.family = to_string(family);
  report.warnings.insert(report.warnings.end(), glm_warnings.begin(),
                         glm_warnings.end());

  print_fit_table(report, names, args.pval_corr_threshold);

  {
    std::ofstream out(args.out + ".json");
    out << inference_result_to_json(report, names) << "\n";
    std::printf("wrote %s.json\n", args.out.c_str());
  }

  auto groups = parse_groups(args.groups, static_cast<int>(report.p()));
  if (!groups.empty()) {
    if (args.method == "multi-split")
      throw MethodError("group tests need ridge-proj or lasso-proj");
    std::printf("\n%-30s %12s\n", "group", "pval");
    for (const auto& g : groups) {
      GroupTestOutcome outcome;
      if (args.method == "ridge-proj")
        outcome = ridge_group_test(*ridge_comps, *ridge_res, g, args.group_n_mc,
                                   seed + 17, args.threads);
      else
        outcome = despars_group_test(*despars_res, *nodewise_comps, g,
                                     args.group_n_mc, seed + 17, args.threads);
      std::string label = "{" + std::to_string(g.front()) + "..." +
                          std::to_string(g.back()) + "} size " +
                          std::to_string(g.size());
      std::printf("%-30s %12.5g%s\n", label.c_str(), outcome.p_value,
                  outcome.covariance_repaired ? "  (covariance repaired)" : "");
    }
  }

  if (args.cluster_groups) {
    if (args.method == "multi-split")
      throw MethodError("cluster group testing needs ridge-proj or lasso-proj");
    ClusterTree tree = build_hierarchy(working);
    hierarchical_test(tree, simultaneous_tester(report), args.alpha, args.threads);
    std::ofstream out(args.out + "_tree.json");
    out << cluster_tree_to_json(tree) << "\n";
    int rejected = 0;
    for (const auto& node : tree.nodes) rejected += node.rejected;
    std::printf("cluster tree: %d tested, %d rejected; wrote %s_tree.json\n",
                static_cast<int>(tested_nodes(tree).size()), rejected,
                args.out.c_str());
  }
  return 0;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string methods;  // comma-separated override of the scenario's list
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig cfg;
  try {
    cfg = scenario_config_from_json_file(args.scenario_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "scenario validation failed: %s\n", e.what());
    return kExitScenario;
  }
  if (args.threads > 0) cfg.threads = args.threads;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.methods.empty()) {
    cfg.methods.clear();
    std::string token;
    std::stringstream ss(args.methods);
    while (std::getline(ss, token, ',')) cfg.methods.push_back(token);
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "scenario validation failed: %s\n", e.what());
      return kExitScenario;
    }
  }

  fs::create_directories(args.out_dir);
  std::printf("running scenario '%s' (%d outer x %d inner)\n", cfg.name.c_str(),
              cfg.n_outer_replicates, cfg.n_y_replicates);
  ScenarioResult result = run_scenario(cfg);

  fs::path base = fs::path(args.out_dir) / cfg.name;
  {
    std::ofstream out(base.string() + "_summary.json");
    out << scenario_result_summary_json(result) << "\n";
  }
  write_scenario_tidy_csv(result, base.string() + "_tidy.csv");
  std::printf("finished in %.1f s; wrote %s_summary.json and %s_tidy.csv\n",
              result.wall_seconds, base.string().c_str(), base.string().c_str());
  for (const auto& m : result.pooled)
    std::printf("  %-12s fwer=%.3f power=%.3f avg_v=%.3f failures=%d\n",
                m.method.c_str(), m.fwer, m.power, m.avg_v, m.failures);
  for (const auto& g : result.groups)
    std::printf("  %-12s group rejections: root=%.3f blocks=%.3f s0=%.3f s0c=%.3f\n",
                g.method.c_str(), g.reject_root, g.reject_block_union, g.reject_s0,
                g.reject_s0c);
  for (const auto& cvg : result.coverage)
    std::printf("  %-12s coverage: active=%.3f inactive=%.3f\n",
                cvg.method.c_str(), cvg.active_coverage, cvg.inactive_coverage);
  return 0;
}

struct ReportArgs {
  std::string results_dir;
  std::string out = "report";
};

// Minimal SVG bar panels: one row per metric, grouped by scenario/method, a
// dashed reference line marks the target level on the FWER panel.
void write_report_svg(const std::string& path,
                      const std::vector<std::tuple<std::string, std::string,
                                                   double, double>>& rows,
                      double alpha) {
  const int bar_w = 34, gap = 14, panel_h = 180, label_h = 70;
  const int width = std::max<int>(320, 60 + static_cast<int>(rows.size()) * (bar_w + gap));
  const int height = 2 * (panel_h + label_h) + 40;
  std::ofstream out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='monospace' font-size='11'>\n";
  auto panel = [&](int top, const std::string& title, bool is_fwer) {
    out << "<text x='10' y='" << top - 8 << "' font-size='14'>" << title
        << "</text>\n";
    out << "<line x1='50' y1='" << top << "' x2='50' y2='" << top + panel_h
        << "' stroke='black'/>\n";
    out << "<line x1='50' y1='" << top + panel_h << "' x2='" << width - 10
        << "' y2='" << top + panel_h << "' stroke='black'/>\n";
    for (double tick : {0.0, 0.5, 1.0}) {
      int y = top + panel_h - static_cast<int>(tick * panel_h);
      out << "<text x='18' y='" << y + 4 << "'>" << tick << "</text>\n";
    }
    int x = 60;
    for (const auto& [scenario, method, fwer, power] : rows) {
      double v = is_fwer ? fwer : power;
      int h = static_cast<int>(std::min(1.0, std::max(0.0, v)) * panel_h);
      out << "<rect x='" << x << "' y='" << top + panel_h - h << "' width='"
          << bar_w << "' height='" << h << "' fill='" << (is_fwer ? "#c44" : "#48a")
          << "'/>\n";
      out << "<text x='" << x << "' y='" << top + panel_h + 14
          << "' transform='rotate(40 " << x << " " << top + panel_h + 14 << ")'>"
          << scenario << ":" << method << "</text>\n";
      x += bar_w + gap;
    }
    if (is_fwer) {
      int y = top + panel_h - static_cast<int>(alpha * panel_h);
      out << "<line x1='50' y1='" << y << "' x2='" << width - 10 << "' y2='" << y
          << "' stroke='black' stroke-dasharray='5,4'/>\n";
      out << "<text x='" << width - 95 << "' y='" << y - 4 << "'>alpha=" << alpha
          << "</text>\n";
    }
  };
  panel(30, "FWER", true);
  panel(30 + panel_h + label_h + 20, "Power", false);
  out << "</svg>\n";
}

int run_report(const ReportArgs& args) {
  std::vector<fs::path> summaries;
  if (fs::is_directory(args.results_dir)) {
    for (const auto& entry : fs::directory_iterator(args.results_dir)) {
      if (entry.path().string().ends_with("_summary.json"))
        summaries.push_back(entry.path());
    }
  }
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty())
    throw ConfigError("no *_summary.json files found in " + args.results_dir);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::tuple<std::string, std::string, double, double>> bars;
  double alpha = 0.05;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    json j = json::parse(in);
    std::string scenario = j["config"]["name"].get<std::string>();
    alpha = j["config"]["alpha"].get<double>();
    for (const auto& m : j["methods"]) {
      std::string method = m["method"].get<std::string>();
      auto value_of = [&](const char* key) {
        return m[key].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                : m[key].get<double>();
      };
      double fwer = value_of("fwer"), power = value_of("power"),
             avg_v = value_of("avg_v");
      rows.push_back({scenario, method, "fwer", std::to_string(fwer), ""});
      rows.push_back({scenario, method, "power", std::to_string(power), ""});
      rows.push_back({scenario, method, "avg_v", std::to_string(avg_v), ""});
      bars.emplace_back(scenario, method, fwer, power);
    }
  }
  write_csv(args.out + "_merged.csv",
            {"scenario", "method", "metric", "value", "replicate"}, rows);
  write_report_svg(args.out + ".svg", bars, alpha);

  std::printf("%-24s %-12s %8s %8s\n", "scenario", "method", "fwer", "power");
  for (const auto& [scenario, method, fwer, power] : bars)
    std::printf("%-24s %-12s %8.3f %8.3f\n", scenario.c_str(), method.c_str(),
                fwer, power);
  std::printf("wrote %s_merged.csv and %s.svg\n", args.out.c_str(),
              args.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"high-dimensional inference toolkit"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit inference methods to a CSV dataset");
  fit_cmd->add_option("--data", fit.data_path, "CSV file with a header row")->required();
  fit_cmd->add_option("--response", fit.response, "response column name")->required();
  fit_cmd->add_option("--method", fit.method,
                      "multi-split | ridge-proj | lasso-proj");
  fit_cmd->add_option("--family", fit.family, "gaussian | binomial | poisson");
  fit_cmd->add_option("--alpha", fit.alpha, "test level");
  fit_cmd->add_option("--level", fit.level, "confidence level");
  fit_cmd->add_option("--groups", fit.groups,
                      "comma-separated indices or a JSON file with groups");
  fit_cmd->add_flag("--cluster-groups", fit.cluster_groups,
                    "test a correlation hierarchy top-down");
  std::uint64_t seed_value = 0;
  auto* seed_opt = fit_cmd->add_option("--seed", seed_value, "RNG seed");
  fit_cmd->add_option("--threads", fit.threads, "worker threads (0 = auto)");
  double thr_value = 0.0;
  auto* thr_opt = fit_cmd->add_option("--pval-corr-threshold", thr_value,
                                      "print only rows with pval_corr <= value");
  fit_cmd->add_option("--out", fit.out, "output path prefix");
  fit_cmd->add_option("--tuning", fit.tuning, "nodewise tuning: zz | cv");
  fit_cmd->add_option("--splits", fit.multi_split_b, "sample splits for multi-split");
  fit_cmd->add_option("--group-mc", fit.group_n_mc, "Monte-Carlo draws per group test");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a scenario from JSON");
  sim_cmd->add_option("--scenario", sim.scenario_path, "scenario JSON file")->required();
  sim_cmd->add_option("--out", sim.out_dir, "output directory");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (0 = config)");
  sim_cmd->add_option("--methods", sim.methods,
                      "comma-separated subset of methods to run");
  std::uint64_t sim_seed_value = 0;
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed_value, "seed override");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "merge scenario outputs");
  rep_cmd->add_option("--results", rep.results_dir, "directory with *_summary.json")
      ->required();
  rep_cmd->add_option("--out", rep.out, "output path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (fit_cmd->parsed()) {
      if (*seed_opt) fit.seed = seed_value;
      if (*thr_opt) fit.pval_corr_threshold = thr_value;
      return run_fit(fit);
    }
    if (sim_cmd->parsed()) {
      if (*sim_seed_opt) sim.seed = sim_seed_value;
      return run_simulate(sim);
    }
    if (rep_cmd->parsed()) return run_report(rep);
  } catch (const RankError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDimension;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDimension;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "method failure: %s\n", e.what());
    return kExitMethod;
  }
  return 0;
}
