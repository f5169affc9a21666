#include "hdinfer/result_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hdinfer/csv.hpp"

namespace hdinfer {

using nlohmann::json;

namespace {

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(finite_or_null(v[i]));
  return arr;
}

}  // namespace

std::string inference_result_to_json(const InferenceResult& result,
                                     const std::vector<std::string>& names) {
  json out;
  out["method"] = result.method;
  out["family"] = result.family;
  out["alpha"] = result.alpha;
  out["level"] = result.level;
  out["sigma"] = finite_or_null(result.noise.sigma);
  out["sigma_method"] = to_string(result.noise.method);
  if (!names.empty()) out["variables"] = names;
  out["estimate"] = vector_to_json(result.estimate);
  out["se"] = vector_to_json(result.se);
  out["pval"] = vector_to_json(result.p_raw);
  out["pval_corr"] = vector_to_json(result.p_adjusted);
  out["ci_lower"] = vector_to_json(result.ci_lower);
  out["ci_upper"] = vector_to_json(result.ci_upper);
  json defined = json::array();
  for (bool b : result.ci_defined) defined.push_back(b);
  out["ci_defined"] = defined;
  out["warnings"] = result.warnings;
  return out.dump(2);
}

std::string cluster_tree_to_json(const ClusterTree& tree) {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const ClusterNode& n = tree.nodes[i];
    json node;
    node["id"] = i;
    node["members"] = n.members;
    node["height"] = n.height;
    node["parent"] = n.parent;
    if (!n.is_leaf()) {
      node["left"] = n.left;
      node["right"] = n.right;
    }
    node["tested"] = n.tested;
    node["rejected"] = n.rejected;
    node["test_failed"] = n.test_failed;
    node["p_value"] = finite_or_null(n.p_value);
    nodes.push_back(node);
  }
  json out;
  out["root"] = tree.root;
  out["leaf_order"] = tree.leaf_order;
  out["nodes"] = nodes;
  return out.dump(2);
}

ScenarioConfig scenario_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario json parse error: ") + e.what());
  }
  ScenarioConfig cfg;
  try {
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();
    if (j.contains("design"))
      cfg.design = design_from_string(j["design"].get<std::string>());
    if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
    if (j.contains("block_size")) cfg.block_size = j["block_size"].get<int>();
    if (j.contains("real_x_file")) cfg.real_x_file = j["real_x_file"].get<std::string>();
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("p")) cfg.p = j["p"].get<int>();
    if (j.contains("s0")) cfg.s0 = j["s0"].get<int>();
    if (j.contains("coef_scheme")) cfg.coef_scheme = j["coef_scheme"].get<std::string>();
    if (j.contains("active_positions")) {
      std::string pos = j["active_positions"].get<std::string>();
      if (pos == "random")
        cfg.positions = CoefPositions::Random;
      else if (pos == "first-s0")
        cfg.positions = CoefPositions::FirstS0;
      else
        throw ConfigError("scenario: bad active_positions value " + pos);
    }
    if (j.contains("n_y_replicates")) cfg.n_y_replicates = j["n_y_replicates"].get<int>();
    if (j.contains("n_outer_replicates"))
      cfg.n_outer_replicates = j["n_outer_replicates"].get<int>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("ci_level")) cfg.ci_level = j["ci_level"].get<double>();
    if (j.contains("methods"))
      cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("lasso_proj_tuning"))
      cfg.lasso_proj_tuning = j["lasso_proj_tuning"].get<std::string>();
    if (j.contains("multi_split_b")) cfg.multi_split_b = j["multi_split_b"].get<int>();
    if (j.contains("group_n_mc")) cfg.group_n_mc = j["group_n_mc"].get<int>();
    if (j.contains("mode")) cfg.mode = mode_from_string(j["mode"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario json field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig scenario_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return scenario_config_from_json(text);
}

std::string scenario_config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["design"] = to_string(cfg.design);
  j["rho"] = cfg.rho;
  j["block_size"] = cfg.block_size;
  if (!cfg.real_x_file.empty()) j["real_x_file"] = cfg.real_x_file;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["s0"] = cfg.s0;
  j["coef_scheme"] = cfg.coef_scheme;
  j["active_positions"] =
      cfg.positions == CoefPositions::Random ? "random" : "first-s0";
  j["n_y_replicates"] = cfg.n_y_replicates;
  j["n_outer_replicates"] = cfg.n_outer_replicates;
  j["alpha"] = cfg.alpha;
  j["ci_level"] = cfg.ci_level;
  j["methods"] = cfg.methods;
  j["lasso_proj_tuning"] = cfg.lasso_proj_tuning;
  j["multi_split_b"] = cfg.multi_split_b;
  j["group_n_mc"] = cfg.group_n_mc;
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

std::string scenario_result_summary_json(const ScenarioResult& result) {
  json j;
  j["config"] = json::parse(scenario_config_to_json(result.config));
  j["wall_seconds"] = result.wall_seconds;
  json methods = json::array();
  for (const auto& m : result.pooled) {
    json e;
    e["method"] = m.method;
    e["power"] = finite_or_null(m.power);
    e["fwer"] = finite_or_null(m.fwer);
    e["avg_v"] = finite_or_null(m.avg_v);
    e["failures"] = m.failures;
    e["n_runs"] = m.n_runs;
    methods.push_back(e);
  }
  j["methods"] = methods;
  if (!result.groups.empty()) {
    json groups = json::array();
    for (const auto& g : result.groups) {
      json e;
      e["method"] = g.method;
      e["reject_root"] = g.reject_root;
      e["reject_block_union"] = g.reject_block_union;
      e["reject_s0"] = g.reject_s0;
      e["reject_s0c"] = g.reject_s0c;
      e["n_runs"] = g.n_runs;
      e["failures"] = g.failures;
      groups.push_back(e);
    }
    j["groups"] = groups;
  }
  if (!result.coverage.empty()) {
    json cov = json::array();
    for (const auto& c : result.coverage) {
      json e;
      e["method"] = c.method;
      e["active"] = c.active;
      e["n_replicates"] = c.n_replicates;
      e["active_coverage"] = c.active_coverage;
      e["inactive_coverage"] = c.inactive_coverage;
      json per_active = json::array();
      for (int j_idx : c.active) per_active.push_back(c.covered[j_idx]);
      e["active_cover_counts"] = per_active;
      cov.push_back(e);
    }
    j["coverage"] = cov;
  }
  return j.dump(2);
}

void write_scenario_tidy_csv(const ScenarioResult& result, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& method, const std::string& metric, double value,
                 const std::string& replicate) {
    rows.push_back({result.config.name, method, metric,
                    std::isfinite(value) ? std::to_string(value) : "", replicate});
  };
  for (const auto& om : result.per_outer) {
    std::string rep = std::to_string(om.outer);
    add(om.method, "fwer", om.fwer, rep);
    add(om.method, "power", om.power, rep);
    add(om.method, "avg_v", om.avg_v, rep);
    add(om.method, "failures", om.failures, rep);
  }
  for (const auto& m : result.pooled) {
    add(m.method, "fwer", m.fwer, "");
    add(m.method, "power", m.power, "");
    add(m.method, "avg_v", m.avg_v, "");
    add(m.method, "failures", m.failures, "");
  }
  for (const auto& g : result.groups) {
    add(g.method, "reject_root", g.reject_root, "");
    add(g.method, "reject_block_union", g.reject_block_union, "");
    add(g.method, "reject_s0", g.reject_s0, "");
    add(g.method, "reject_s0c", g.reject_s0c, "");
  }
  for (const auto& c : result.coverage) {
    add(c.method, "active_coverage", c.active_coverage, "");
    add(c.method, "inactive_coverage", c.inactive_coverage, "");
  }
  write_csv(path, {"scenario", "method", "metric", "value", "replicate"}, rows);
}

}  // namespace hdinfer
