#pragma once

#include <string>

#include "hdinfer/cluster_tree.hpp"
#include "hdinfer/simulation.hpp"
#include "hdinfer/types.hpp"

namespace hdinfer {

/// JSON text with per-variable estimates, p-values and intervals.
/// Non-finite entries serialize as null.
std::string inference_result_to_json(const InferenceResult& result,
                                     const std::vector<std::string>& names = {});

/// Nodes with members, heights, p-values and outcome flags, in node order.
std::string cluster_tree_to_json(const ClusterTree& tree);

ScenarioConfig scenario_config_from_json(const std::string& text);
ScenarioConfig scenario_config_from_json_file(const std::string& path);
std::string scenario_config_to_json(const ScenarioConfig& cfg);

/// Pooled metrics plus config echo.
std::string scenario_result_summary_json(const ScenarioResult& result);

/// Tidy long format: scenario,method,metric,value,replicate.  Pooled rows
/// carry an empty replicate field.
void write_scenario_tidy_csv(const ScenarioResult& result, const std::string& path);

}  // namespace hdinfer
