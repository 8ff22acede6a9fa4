// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "motif/edit_tree.hpp"

using namespace motif;

namespace {

Sequence random_seq(std::mt19937_64& rng, std::size_t n, int a) {
  std::uniform_int_distribution<int> u(0, a - 1);
  Sequence s(n);
  for (auto& x : s) x = u(rng);
  return s;
}

CostModel<double> random_costs(std::mt19937_64& rng, int A) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> del(A);
  std::vector<std::vector<double>> sub(A, std::vector<double>(A));
  for (auto& d : del) d = u(rng);
  for (int a = 0; a < A; ++a)
    for (int b = a; b < A; ++b) sub[a][b] = sub[b][a] = u(rng);
  return {[del](Symbol s) { return del[s]; }, [sub](Symbol a, Symbol b) { return sub[a][b]; }};
}

// Sum of edge costs from the root, recomputed from the tree structure.
double path_value(const EditTree<double>& t, NodeId id, const CostModel<double>& c, double d0) {
  double v = d0;
  for (; id != EditTree<double>::root(); id = t.node(id).parent) {
    const EditOp& e = t.node(id).edge;
    v += e.is_substitution() ? c.sub(e.a, e.b) : c.del(e.a);
  }
  return v;
}

}  // namespace

TEST(EditTree, UnprunedTreeReproducesDenseRecursion) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const int A = 2 + static_cast<int>(rng() % 4);
    const auto c = random_costs(rng, A);
    const Sequence S = random_seq(rng, 1 + rng() % 10, A);
    ScalarAlgebra<double> alg(c, 0.3);
    const auto dense = dense_distance(S, alg);
    const auto tb = build_edit_tree(S, alg, static_cast<std::size_t>(A), TreeOptions{0, 2 * S.size()});
    for (std::size_t i = 1; i <= S.size(); ++i)
      for (std::size_t j = 1; j <= i; ++j)
        for (std::size_t k = 1; k <= i; ++k) {
          ASSERT_TRUE(tb.cells.has(i, j, k));
          const NodeId id = tb.cells.get(i, j, k);
          EXPECT_EQ(tb.tree.node(id).value, dense.at(i, j, k));
          EXPECT_NEAR(path_value(tb.tree, id, c, 0.3), dense.at(i, j, k), 1e-12);
        }
  }
}

TEST(EditTree, PathDepthCanExceedSequenceLength) {
  // Cell (i, j, k) consumes k pattern symbols plus up to j - 1 text symbols,
  // so winning paths may be longer than |S| (never longer than 2|S| - 1).
  std::mt19937_64 rng(1);
  std::size_t deeper = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int A = 2 + static_cast<int>(rng() % 4);
    const auto c = random_costs(rng, A);
    const Sequence S = random_seq(rng, 1 + rng() % 10, A);
    ScalarAlgebra<double> alg(c, 0.3);
    const auto tb = build_edit_tree(S, alg, static_cast<std::size_t>(A), TreeOptions{0, 2 * S.size()});
    std::size_t depth = 0;
    for (const auto& nd : tb.tree.nodes()) depth = std::max<std::size_t>(depth, nd.depth);
    EXPECT_LE(depth, 2 * S.size() - 1);
    deeper += depth > S.size();
  }
  EXPECT_GT(deeper, 0u);
}

TEST(EditTree, StructuralInvariants) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const int A = 3;
    const auto c = random_costs(rng, A);
    const Sequence S = random_seq(rng, 2 + rng() % 10, A);
    ScalarAlgebra<double> alg(c, 0.0);
    const std::size_t d_max = 1 + rng() % 4, np = rng() % 4;
    const auto tb = build_edit_tree(S, alg, A, TreeOptions{np, d_max});
    const auto& T = tb.tree;
    EXPECT_LE(static_cast<double>(T.size()), tree_node_bound(A, d_max));
    for (NodeId id = 0; id < T.size(); ++id) {
      const auto& nd = T.node(id);
      EXPECT_LE(nd.depth, d_max);
      std::set<std::uint32_t> keys;
      for (const auto& [k, ch] : nd.children) {
        EXPECT_TRUE(keys.insert(k).second);
        EXPECT_EQ(T.node(ch).parent, id);
        EXPECT_EQ(T.node(ch).depth, nd.depth + 1);
        EXPECT_EQ(T.node(ch).edge.key(A), k);
      }
    }
    EXPECT_FALSE(tb.cells.has(S.size(), 1, d_max + 1));
  }
}

TEST(EditTree, PruneRankCountsExistingSiblings) {
  EditTree<int> t(3, 0, 0.0);
  t.add_child(0, EditOp::deletion(0), 1, 5.0);
  t.add_child(0, EditOp::deletion(1), 2, 3.0);
  EXPECT_TRUE(prune_rank(t, 0, 4.0, 2));   // rank 2
  EXPECT_FALSE(prune_rank(t, 0, 2.0, 2));  // rank 3
  EXPECT_FALSE(prune_rank(t, 0, 3.0, 2));  // equal score ranks behind the sibling
  EXPECT_TRUE(prune_rank(t, 0, 6.0, 1));
  EXPECT_TRUE(prune_rank(t, 0, -100.0, 0));
  EXPECT_THROW(t.add_child(0, EditOp::deletion(1), 9, 0.0), std::logic_error);
}

TEST(EditTree, NodeCountIsMonotoneInPriority) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const int A = 4;
    const auto c = random_costs(rng, A);
    const Sequence S = random_seq(rng, 12, A);
    ScalarAlgebra<double> alg(c, 0.0);
    std::size_t prev = 0;
    for (std::size_t np : {1u, 2u, 4u, 8u, 16u, 0u}) {
      const auto tb = build_edit_tree(S, alg, A, TreeOptions{np, 4});
      EXPECT_GE(tb.tree.size(), prev) << "n_priority=" << np;
      prev = tb.tree.size();
    }
  }
}

TEST(EditTree, PriorityOneKeepsIdentityChainOfExactRepeat) {
  // With unit-like costs the identity substitutions score best, so a single
  // child per node still carries the repeat.
  CostModel<double> c{[](Symbol) { return 1.0; }, [](Symbol a, Symbol b) { return a == b ? 0.0 : 1.0; }};
  ScalarAlgebra<double> alg(c, 0.0);
  const Sequence S = from_letters("ABCDABCD");
  const auto tb = build_edit_tree(S, alg, 4, TreeOptions{1, 4});
  ASSERT_TRUE(tb.cells.has(8, 4, 4));
  EXPECT_EQ(tb.tree.node(tb.cells.get(8, 4, 4)).value, 0.0);
}

TEST(EditTree, StatsSummarizeSharing) {
  ScalarAlgebra<int> alg(unit_costs(), 0);
  const auto tb = build_edit_tree(from_letters("ABABAB"), alg, 2, TreeOptions{0, 4});
  const auto st = tree_stats(tb.tree, tb.cells);
  EXPECT_EQ(st.node_count, tb.tree.size());
  EXPECT_EQ(st.nodes_per_depth[0], 1u);
  std::size_t total = 0;
  for (auto v : st.nodes_per_depth) total += v;
  EXPECT_EQ(total, st.node_count);
  EXPECT_EQ(st.mapped_cells, tb.cells.mapped_count());
  EXPECT_GT(st.shared_cell_ratio, 1.0);  // repeats share nodes
  EXPECT_DOUBLE_EQ(tree_node_bound(2, 2), 1.0 + 5.0 + 25.0);
}

TEST(EditTree, RejectsZeroDepth) {
  ScalarAlgebra<int> alg(unit_costs(), 0);
  EXPECT_THROW(build_edit_tree(from_letters("AB"), alg, 2, TreeOptions{0, 0}), ConfigError);
}
