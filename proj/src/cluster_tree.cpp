#include "hdinfer/cluster_tree.hpp"

#include <algorithm>
#include <cmath>

#include "hdinfer/parallel.hpp"

namespace hdinfer {

ClusterTree build_hierarchy(const Dataset& data, ClusterDistance distance,
                            Linkage linkage) {
  (void)linkage;  // only average linkage is implemented
  if (distance != ClusterDistance::OneMinusAbsCorrelation)
    throw ConfigError("unsupported cluster distance");
  Dataset sd = standardize_lenient(data);
  const Index p = sd.p();
  if (p < 2) throw ConfigError("hierarchy needs at least 2 variables");
  const double n = static_cast<double>(sd.n());

  // distance matrix 1 - |cor|
  Matrix dist(p, p);
  {
    Matrix gram = sd.x.transpose() * sd.x / n;
    for (Index j = 0; j < p; ++j)
      for (Index k = 0; k < p; ++k)
        dist(j, k) = j == k ? 0.0 : 1.0 - std::min(1.0, std::fabs(gram(j, k)));
  }

  ClusterTree tree;
  tree.nodes.resize(2 * p - 1);
  std::vector<int> alive;        // node ids of active clusters, ascending
  std::vector<int> slot_of(2 * p - 1, -1);
  Matrix d = dist;               // working distances between active slots
  for (Index j = 0; j < p; ++j) {
    tree.nodes[j].members = {static_cast<int>(j)};
    alive.push_back(static_cast<int>(j));
    slot_of[j] = static_cast<int>(j);
  }

  int next_node = static_cast<int>(p);
  while (alive.size() > 1) {
    // smallest distance wins; strict < keeps the first (smallest-index) pair
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a + 1 < alive.size(); ++a) {
      for (std::size_t b = a + 1; b < alive.size(); ++b) {
        double v = d(slot_of[alive[a]], slot_of[alive[b]]);
        if (v < best) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    }
    int left = alive[best_a], right = alive[best_b];
    ClusterNode& merged = tree.nodes[next_node];
    merged.left = left;
    merged.right = right;
    merged.height = best;
    merged.members.resize(tree.nodes[left].members.size() +
                          tree.nodes[right].members.size());
    std::merge(tree.nodes[left].members.begin(), tree.nodes[left].members.end(),
               tree.nodes[right].members.begin(), tree.nodes[right].members.end(),
               merged.members.begin());
    tree.nodes[left].parent = next_node;
    tree.nodes[right].parent = next_node;

    // average-linkage update into the left slot
    double n_l = static_cast<double>(tree.nodes[left].members.size());
    double n_r = static_cast<double>(tree.nodes[right].members.size());
    int sl = slot_of[left], sr = slot_of[right];
    for (int other : alive) {
      if (other == left || other == right) continue;
      int so = slot_of[other];
      double v = (n_l * d(sl, so) + n_r * d(sr, so)) / (n_l + n_r);
      d(sl, so) = v;
      d(so, sl) = v;
    }
    slot_of[next_node] = sl;
    alive.erase(alive.begin() + best_b);
    alive[best_a] = next_node;
    ++next_node;
  }
  tree.root = next_node - 1;

  // dendrogram order of the leaves
  tree.leaf_order.reserve(p);
  std::vector<int> stack = {tree.root};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    const ClusterNode& node = tree.nodes[id];
    if (node.is_leaf())
      tree.leaf_order.push_back(id);
    else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return tree;
}

void hierarchical_test(ClusterTree& tree, const GroupTester& tester, double alpha,
                       int threads) {
  if (tree.root < 0) throw ConfigError("hierarchical_test: empty tree");
  std::vector<int> frontier = {tree.root};
  while (!frontier.empty()) {
    parallel_for(
        static_cast<int>(frontier.size()),
        [&](int i) {
          ClusterNode& node = tree.nodes[frontier[i]];
          try {
            node.p_value = tester(node.members);
            node.tested = true;
            node.rejected = node.p_value <= alpha;
          } catch (...) {
            node.test_failed = true;  // descent stops below this node
          }
        },
        threads);
    std::vector<int> next;
    for (int id : frontier) {
      const ClusterNode& node = tree.nodes[id];
      if (node.tested && node.rejected && !node.is_leaf()) {
        next.push_back(node.left);
        next.push_back(node.right);
      }
    }
    frontier = std::move(next);
  }
}

std::vector<int> tested_nodes(const ClusterTree& tree) {
  std::vector<int> out;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].tested || tree.nodes[i].test_failed)
      out.push_back(static_cast<int>(i));
  return out;
}

double simultaneous_group_pvalue(const InferenceResult& result,
                                 const std::vector<int>& group) {
  if (group.empty()) throw ConfigError("simultaneous group p-value: empty group");
  const double p = static_cast<double>(result.p_raw.size());
  double best = std::numeric_limits<double>::infinity();
  for (int j : group) {
    if (j < 0 || j >= result.p_raw.size())
      throw ConfigError("simultaneous group p-value: index out of range");
    if (std::isfinite(result.p_raw[j])) best = std::min(best, result.p_raw[j]);
  }
  if (!std::isfinite(best)) return 1.0;
  return std::min(1.0, best * p);
}

GroupTester simultaneous_tester(const InferenceResult& result) {
  return [result](const std::vector<int>& group) {
    return simultaneous_group_pvalue(result, group);
  };
}

}  // namespace hdinfer
