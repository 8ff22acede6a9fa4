// SPDX-License-Identifier: Apache-2.0
#pragma once

// Edit tree: the distance recursion with values memoized by edit-operation
// path. Each node is reached from its parent by one edge (a deletion or an
// unordered substitution pair) and holds f_A(parent value, f_SD(edge)).
// Cells of the recursion map to nodes; cells sharing a selected path share
// one node.
//
// Approximation knobs:
//   n_priority  a new child is kept only if its score ranks within the top
//               n_priority among its already existing siblings (plus itself)
//   d_max       no node deeper than d_max, no suffix longer than d_max
// A cell whose winning candidate is discarded, too deep, or has no existing
// source cell is omitted.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "motif/distance.hpp"
#include "motif/errors.hpp"
#include "motif/sequence.hpp"

namespace motif {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct TreeOptions {
  std::size_t n_priority = 0;  // 0: unbounded
  std::size_t d_max = 4;
};

template <class Value>
struct TreeNode {
  NodeId parent = kNoNode;
  EditOp edge{};
  Value value{};
  double score = 0.0;
  std::uint32_t depth = 0;
  std::vector<std::pair<std::uint32_t, NodeId>> children;  // (edge key, child) in arrival order
};

template <class Value>
class EditTree {
 public:
  EditTree(std::size_t alphabet, Value root_value, double root_score) : alphabet_(alphabet) {
    nodes_.push_back(TreeNode<Value>{kNoNode, {}, std::move(root_value), root_score, 0, {}});
  }

  static constexpr NodeId root() { return 0; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t alphabet() const { return alphabet_; }
  const TreeNode<Value>& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<TreeNode<Value>>& nodes() const { return nodes_; }

  NodeId find_child(NodeId parent, std::uint32_t key) const {
    for (const auto& [k, c] : nodes_[parent].children)
      if (k == key) return c;
    return kNoNode;
  }

  NodeId add_child(NodeId parent, EditOp edge, Value v, double score) {
    const std::uint32_t key = edge.key(alphabet_);
    if (find_child(parent, key) != kNoNode) throw std::logic_error("edit tree: duplicate child");
    const auto id = static_cast<NodeId>(nodes_.size());
    const std::uint32_t depth = nodes_[parent].depth + 1;
    nodes_.push_back(TreeNode<Value>{parent, edge, std::move(v), score, depth, {}});
    nodes_[parent].children.emplace_back(key, id);
    return id;
  }

 private:
  std::size_t alphabet_;
  std::vector<TreeNode<Value>> nodes_;
};

/// Descending rank of `candidate_score` among the parent's existing children
/// and the candidate itself; equal-scored existing siblings rank ahead.
/// Keep iff the rank is at most n_priority (0 means unbounded).
template <class Value>
bool prune_rank(const EditTree<Value>& tree, NodeId parent, double candidate_score, std::size_t n_priority) {
  if (n_priority == 0) return true;
  std::size_t rank = 1;
  for (const auto& [key, c] : tree.node(parent).children) {
    if (tree.node(c).score >= candidate_score) ++rank;
    if (rank > n_priority) return false;
  }
  return true;
}

/// (i, j, k) -> node; cells with 1 <= j <= i <= n, 1 <= k <= min(i, k_cap).
class CellMap {
 public:
  CellMap() = default;
  CellMap(std::size_t n, std::size_t k_cap) : n_(n), k_cap_(k_cap), map_(n * n * k_cap, kNoNode) {}

  std::size_t length() const { return n_; }
  std::size_t k_cap() const { return k_cap_; }

  NodeId get(std::size_t i, std::size_t j, std::size_t k) const {
    if (i < 1 || j < 1 || k < 1 || i > n_ || j > i || k > i || k > k_cap_) return kNoNode;
    return map_[idx(i, j, k)];
  }
  bool has(std::size_t i, std::size_t j, std::size_t k) const { return get(i, j, k) != kNoNode; }
  void set(std::size_t i, std::size_t j, std::size_t k, NodeId id) { map_[idx(i, j, k)] = id; }

  std::size_t mapped_count() const {
    return static_cast<std::size_t>(std::count_if(map_.begin(), map_.end(), [](NodeId id) { return id != kNoNode; }));
  }

 private:
  std::size_t n_ = 0, k_cap_ = 0;
  std::vector<NodeId> map_;
  std::size_t idx(std::size_t i, std::size_t j, std::size_t k) const { return ((i - 1) * n_ + (j - 1)) * k_cap_ + (k - 1); }
};

template <class Value>
struct TreeBuild {
  EditTree<Value> tree;
  CellMap cells;
  std::size_t candidate_evaluations = 0;  // f_A evaluations, committed or not
};

/// Builds the edit tree for S, iterating (i, k, j) in the same order as the
/// dense recursion so that child arrival order is deterministic.
template <DistanceAlgebra A>
TreeBuild<typename A::Value> build_edit_tree(const Sequence& S, A& alg, std::size_t alphabet, const TreeOptions& opt) {
  using Value = typename A::Value;
  using Candidate = typename A::Candidate;
  if (opt.d_max < 1) throw ConfigError("edit tree: d_max must be >= 1");
  const std::size_t n = S.size();
  const std::size_t k_cap = std::max<std::size_t>(1, std::min(opt.d_max, n));
  TreeBuild<Value> out{EditTree<Value>(alphabet, alg.root(), 0.0), CellMap(n, k_cap), 0};
  auto& tree = out.tree;

  // Candidates evaluated but not (yet) in the tree, keyed by (parent, edge).
  struct Pending {
    Candidate cand;
    double score;
    bool rejected = false;
  };
  std::unordered_map<std::uint64_t, Pending> pending;
  const std::uint64_t key_space = EditOp::key_space(alphabet);

  struct Offer {
    NodeId parent;
    EditOp op;
    NodeId existing;  // child already in the tree, or kNoNode
    double score;
  };

  auto offer = [&](NodeId parent, EditOp op) -> Offer {
    const std::uint32_t key = op.key(alphabet);
    if (NodeId c = tree.find_child(parent, key); c != kNoNode) return {parent, op, c, tree.node(c).score};
    const std::uint64_t pk = static_cast<std::uint64_t>(parent) * key_space + key;
    auto it = pending.find(pk);
    if (it == pending.end()) {
      Candidate cand = alg.extend(tree.node(parent).value, op);
      const double sc = alg.score(cand);
      ++out.candidate_evaluations;
      it = pending.emplace(pk, Pending{std::move(cand), sc, false}).first;
    }
    return {parent, op, kNoNode, it->second.score};
  };

  // Returns the node for the winning candidate, or kNoNode if it is omitted.
  auto realize = [&](const Offer& w) -> NodeId {
    if (w.existing != kNoNode) return w.existing;
    const std::uint64_t pk = static_cast<std::uint64_t>(w.parent) * key_space + w.op.key(alphabet);
    auto it = pending.find(pk);
    if (it->second.rejected) return kNoNode;
    if (tree.node(w.parent).depth + 1 > opt.d_max || !prune_rank(tree, w.parent, w.score, opt.n_priority)) {
      it->second.rejected = true;
      return kNoNode;
    }
    Value v = alg.commit(std::move(it->second.cand));
    const double sc = it->second.score;
    pending.erase(it);
    return tree.add_child(w.parent, w.op, std::move(v), sc);
  };

  auto s = [&](std::size_t i) { return S[i - 1]; };
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t kk = std::min(i, k_cap);
    for (std::size_t k = 1; k <= kk; ++k) {
      for (std::size_t j = 1; j <= i; ++j) {
        if (k == 1) {
          const NodeId id = realize(offer(EditTree<Value>::root(), EditOp::substitution(s(i), s(j))));
          if (id != kNoNode) out.cells.set(i, j, 1, id);
          continue;
        }
        Offer cands[3];
        std::size_t m = 0;
        if (NodeId p = out.cells.get(i - 1, j, k - 1); p != kNoNode) cands[m++] = offer(p, EditOp::deletion(s(i)));
        if (NodeId p = out.cells.get(i - 1, j - 1, k - 1); p != kNoNode)
          cands[m++] = offer(p, EditOp::substitution(s(i), s(j)));
        if (NodeId p = out.cells.get(i, j - 1, k); p != kNoNode) cands[m++] = offer(p, EditOp::deletion(s(j)));
        if (m == 0) continue;
        std::size_t best = 0;
        for (std::size_t c = 1; c < m; ++c)
          if (cands[c].score > cands[best].score) best = c;
        const NodeId id = realize(cands[best]);
        if (id != kNoNode) out.cells.set(i, j, k, id);
      }
    }
  }
  return out;
}

struct TreeStats {
  std::size_t node_count = 0;  // including the root
  std::size_t max_depth = 0;
  std::size_t mapped_cells = 0;
  double shared_cell_ratio = 0.0;  // mapped cells per non-root node
  std::vector<std::size_t> nodes_per_depth;
  std::vector<double> per_depth_fanout;  // mean children per node at each depth
};

template <class Value>
TreeStats tree_stats(const EditTree<Value>& tree, const CellMap& cells) {
  TreeStats st;
  st.node_count = tree.size();
  for (const auto& nd : tree.nodes()) st.max_depth = std::max<std::size_t>(st.max_depth, nd.depth);
  st.nodes_per_depth.assign(st.max_depth + 1, 0);
  std::vector<std::size_t> children(st.max_depth + 1, 0);
  for (const auto& nd : tree.nodes()) {
    ++st.nodes_per_depth[nd.depth];
    children[nd.depth] += nd.children.size();
  }
  st.per_depth_fanout.resize(st.max_depth + 1);
  for (std::size_t d = 0; d <= st.max_depth; ++d)
    st.per_depth_fanout[d] = static_cast<double>(children[d]) / static_cast<double>(st.nodes_per_depth[d]);
  st.mapped_cells = cells.mapped_count();
  st.shared_cell_ratio =
      st.node_count > 1 ? static_cast<double>(st.mapped_cells) / static_cast<double>(st.node_count - 1) : 0.0;
  return st;
}

/// Upper bound on node count: sum_{d=0}^{d_max} F^d with fan-out
/// F = |S|(|S|-1)/2 distinct substitutions + |S| identities + |S| deletions.
inline double tree_node_bound(std::size_t alphabet, std::size_t d_max) {
  const double a = static_cast<double>(alphabet);
  const double F = a * (a - 1) / 2 + a + a;
  double total = 0.0, pw = 1.0;
  for (std::size_t d = 0; d <= d_max; ++d) {
    total += pw;
    pw *= F;
  }
  return total;
}

}  // namespace motif
