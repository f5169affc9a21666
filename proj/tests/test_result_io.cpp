#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "hdinfer/cluster_tree.hpp"
#include "hdinfer/csv.hpp"
#include "hdinfer/result_io.hpp"
#include "test_util.hpp"

using namespace hdinfer;
using namespace testutil;
using nlohmann::json;

TEST_SUITE_BEGIN("result_io");

TEST_CASE("inference result json carries all per-variable fields") {
  InferenceResult res;
  res.method = "ridge-proj";
  res.estimate = Vector::Zero(3);
  res.estimate << 1.0, -2.0, std::numeric_limits<double>::quiet_NaN();
  res.se = Vector::Ones(3);
  res.p_raw = Vector::Constant(3, 0.2);
  res.p_adjusted = Vector::Constant(3, 0.6);
  res.ci_lower = Vector::Constant(3, -1.0);
  res.ci_upper = Vector::Constant(3, 1.0);
  res.ci_defined = {true, true, false};
  res.noise.sigma = 1.25;
  res.warnings.push_back("note");

  json j = json::parse(inference_result_to_json(res, {"a", "b", "c"}));
  CHECK(j["method"] == "ridge-proj");
  CHECK(j["variables"].size() == 3);
  CHECK(j["estimate"][0] == 1.0);
  CHECK(j["estimate"][2].is_null());  // NaN serializes as null
  CHECK(j["pval"][1] == 0.2);
  CHECK(j["pval_corr"][2] == 0.6);
  CHECK(j["ci_defined"][2] == false);
  CHECK(j["sigma"] == 1.25);
  CHECK(j["warnings"][0] == "note");
}

TEST_CASE("cluster tree json names members, heights and outcomes") {
  Rng rng(1);
  Matrix x(30, 4);
  for (int c = 0; c < 4; ++c) x.col(c) = rng.normal_vector(30);
  Vector y = rng.normal_vector(30);
  auto tree = build_hierarchy(make_dataset(x, y));
  hierarchical_test(tree, [](const std::vector<int>&) { return 0.01; }, 0.05);

  json j = json::parse(cluster_tree_to_json(tree));
  CHECK(j["root"] == 6);
  CHECK(j["nodes"].size() == 7);
  CHECK(j["leaf_order"].size() == 4);
  auto root = j["nodes"][6];
  CHECK(root["members"].size() == 4);
  CHECK(root["tested"] == true);
  CHECK(root["rejected"] == true);
  CHECK(root["p_value"] == 0.01);
  CHECK(root.contains("height"));
}

TEST_CASE("tidy csv covers pooled and per-outer rows") {
  ScenarioResult res;
  res.config.name = "demo";
  OuterMetrics om;
  om.method = "ridge-proj";
  om.outer = 0;
  om.fwer = 0.1;
  om.power = 0.9;
  res.per_outer.push_back(om);
  MethodMetrics mm;
  mm.method = "ridge-proj";
  mm.fwer = 0.1;
  mm.power = 0.9;
  mm.avg_v = 0.2;
  res.pooled.push_back(mm);

  const std::string path = "/tmp/hdinfer_tidy_test.csv";
  write_scenario_tidy_csv(res, path);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("scenario,method,metric,value,replicate") != std::string::npos);
  CHECK(text.find("demo,ridge-proj,fwer,0.1") != std::string::npos);
  // per-outer row carries the replicate id, the pooled row leaves it empty
  CHECK(text.find(",0\n") != std::string::npos);
  CHECK(text.find(",\n") != std::string::npos);
}

TEST_SUITE_END();
