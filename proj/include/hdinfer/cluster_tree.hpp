#pragma once

#include <functional>

#include "hdinfer/types.hpp"

namespace hdinfer {

struct ClusterNode {
  std::vector<int> members;  // sorted variable indices
  int parent = -1;
  int left = -1, right = -1;  // children (leaves have none)
  double height = 0.0;
  bool tested = false;
  bool test_failed = false;
  bool rejected = false;
  double p_value = std::numeric_limits<double>::quiet_NaN();

  bool is_leaf() const { return left < 0; }
};

/// Binary merge tree over variables.  Any two clusters are nested or
/// disjoint; the children of a node partition it; the root holds all
/// variables.
struct ClusterTree {
  std::vector<ClusterNode> nodes;  // leaves first (0..p-1), merges after
  int root = -1;
  std::vector<int> leaf_order;  // dendrogram order

  const ClusterNode& root_node() const { return nodes[root]; }
};

enum class ClusterDistance { OneMinusAbsCorrelation };
enum class Linkage { Average };

/// Agglomerative clustering of the columns, deterministic given the data
/// (distance ties break toward the smallest cluster indices).
ClusterTree build_hierarchy(const Dataset& data,
                            ClusterDistance distance = ClusterDistance::OneMinusAbsCorrelation,
                            Linkage linkage = Linkage::Average);

/// A group tester returns a p-value for an index set and must be valid for
/// arbitrarily many groups (simultaneous), or the caller accepts per-node
/// level-alpha testing as a heuristic.
using GroupTester = std::function<double(const std::vector<int>&)>;

/// Top-down scheme: test the root, descend only into children of rejected
/// clusters, record every tested node.  A tester failure marks the node and
/// stops the descent below it.  Siblings on the frontier are tested in
/// parallel when `threads` allows; results do not depend on the thread
/// count.
void hierarchical_test(ClusterTree& tree, const GroupTester& tester, double alpha,
                       int threads = 0);

/// Tested nodes in the order they were visited.
std::vector<int> tested_nodes(const ClusterTree& tree);

/// min(p * min_{j in G} p_raw[j], 1): simultaneously valid over all groups,
/// so testing any family of groups needs no further adjustment.  Undefined
/// per-variable entries are skipped.
double simultaneous_group_pvalue(const InferenceResult& result,
                                 const std::vector<int>& group);

/// Ready-made tester wrapping `simultaneous_group_pvalue`.
GroupTester simultaneous_tester(const InferenceResult& result);

}  // namespace hdinfer
