// SPDX-License-Identifier: Apache-2.0
#pragma once

// The generalised-distance recursion, generic over the distance algebra.
//
// An algebra supplies the distance space and the three learned roles the
// recursion needs:
//   Value              element of the distance space
//   Candidate          a proposed cell value, not yet committed
//   root()             D0
//   extend(v, op)      f_A(v, f_SD(op)) as a candidate
//   score(cand)        f_W of the candidate
//   commit(cand)       turn a winning candidate into a Value
// Soft selection additionally needs mix(candidates, temperature).
//
// The same recursion runs with the neural modules (vector distances on a
// tape) and with ScalarAlgebra (d + c with score -d), which reproduces the
// scalar reference DP.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "motif/errors.hpp"
#include "motif/reference_dp.hpp"
#include "motif/sequence.hpp"

namespace motif {

struct EditOp {
  enum class Kind : std::uint8_t { Delete, Substitute };
  Kind kind = Kind::Delete;
  Symbol a = 0;
  Symbol b = 0;  // unused for deletions

  static EditOp deletion(Symbol s) { return {Kind::Delete, s, s}; }
  /// s_i -> s_j. As an edge label the pair is unordered (see key()).
  static EditOp substitution(Symbol x, Symbol y) { return {Kind::Substitute, x, y}; }

  bool is_substitution() const { return kind == Kind::Substitute; }

  /// Dense key in [0, alphabet + alphabet^2).
  std::uint32_t key(std::size_t alphabet) const {
    if (kind == Kind::Delete) return static_cast<std::uint32_t>(a);
    const auto lo = static_cast<std::size_t>(std::min(a, b));
    const auto hi = static_cast<std::size_t>(std::max(a, b));
    return static_cast<std::uint32_t>(alphabet + lo * alphabet + hi);
  }
  static std::size_t key_space(std::size_t alphabet) { return alphabet + alphabet * alphabet; }
};

template <class A>
concept DistanceAlgebra = requires(A& alg, const typename A::Value& v, typename A::Candidate c, EditOp op) {
  { alg.root() } -> std::convertible_to<typename A::Value>;
  { alg.extend(v, op) } -> std::same_as<typename A::Candidate>;
  { alg.score(std::as_const(c)) } -> std::convertible_to<double>;
  { alg.commit(std::move(c)) } -> std::same_as<typename A::Value>;
};

template <class A>
concept SoftDistanceAlgebra = DistanceAlgebra<A> && requires(A& alg, std::vector<typename A::Candidate> cs) {
  { alg.mix(std::move(cs), 1.0) } -> std::same_as<typename A::Value>;
};

/// Which move produced a cell.
enum class Selection : std::uint8_t { None, Base, Down, Diagonal, Right, Soft };

/// Cells (i, j, k) with 1 <= j <= i <= n and 1 <= k <= min(i, k_cap).
template <class Value>
class DenseDistance {
 public:
  DenseDistance() = default;
  DenseDistance(std::size_t n, std::size_t k_cap) : n_(n), k_cap_(k_cap), cells_(n * n * k_cap) {}

  std::size_t length() const { return n_; }
  std::size_t k_cap() const { return k_cap_; }

  bool has(std::size_t i, std::size_t j, std::size_t k) const {
    return i >= 1 && j >= 1 && k >= 1 && i <= n_ && j <= i && k <= i && k <= k_cap_ &&
           cells_[idx(i, j, k)].value.has_value();
  }
  const Value& at(std::size_t i, std::size_t j, std::size_t k) const {
    if (!has(i, j, k)) throw std::out_of_range("DenseDistance: no such cell");
    return *cells_[idx(i, j, k)].value;
  }
  Selection selection(std::size_t i, std::size_t j, std::size_t k) const {
    return has(i, j, k) ? cells_[idx(i, j, k)].sel : Selection::None;
  }
  void set(std::size_t i, std::size_t j, std::size_t k, Value v, Selection s) {
    cells_[idx(i, j, k)] = Cell{std::move(v), s};
  }

  std::size_t cell_count() const {
    std::size_t c = 0;
    for (const auto& cell : cells_) c += cell.value.has_value();
    return c;
  }

 private:
  struct Cell {
    std::optional<Value> value;
    Selection sel = Selection::None;
  };
  std::size_t n_ = 0, k_cap_ = 0;
  std::vector<Cell> cells_;

  std::size_t idx(std::size_t i, std::size_t j, std::size_t k) const {
    return ((i - 1) * n_ + (j - 1)) * k_cap_ + (k - 1);
  }
};

/// Closed-form number of cells: sum_i sum_{k <= min(i, k_cap)} i.
inline std::size_t dense_cell_count(std::size_t n, std::size_t k_cap) {
  std::size_t c = 0;
  for (std::size_t i = 1; i <= n; ++i) c += i * std::min(i, k_cap);
  return c;
}

struct DenseOptions {
  std::size_t k_max = 0;  // 0: no cap
  bool soft = false;
  double temperature = 1.0;
};

/// Runs the recursion over (i, k, j) in that loop order. For k = 1 the cell
/// is extend(root, sub(s_i, s_j)). For k > 1 only candidates whose source
/// cell exists take part; hard mode keeps the first maximal score in the
/// order down, diagonal, right, soft mode mixes all of them.
template <DistanceAlgebra A>
DenseDistance<typename A::Value> dense_distance(const Sequence& S, A& alg, const DenseOptions& opt = {}) {
  using Value = typename A::Value;
  using Candidate = typename A::Candidate;
  const std::size_t n = S.size();
  if (n == 0) throw ConfigError("dense_distance: sequence must be nonempty");
  const std::size_t k_cap = opt.k_max == 0 ? n : std::min(opt.k_max, n);
  DenseDistance<Value> D(n, k_cap);
  const Value root = alg.root();
  auto s = [&](std::size_t i) { return S[i - 1]; };

  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t kk = std::min(i, k_cap);
    for (std::size_t k = 1; k <= kk; ++k) {
      for (std::size_t j = 1; j <= i; ++j) {
        if (k == 1) {
          D.set(i, j, 1, alg.commit(alg.extend(root, EditOp::substitution(s(i), s(j)))), Selection::Base);
          continue;
        }
        std::array<Selection, 3> tags{};
        std::vector<Candidate> cands;
        cands.reserve(3);
        if (D.has(i - 1, j, k - 1)) {
          cands.push_back(alg.extend(D.at(i - 1, j, k - 1), EditOp::deletion(s(i))));
          tags[cands.size() - 1] = Selection::Down;
        }
        if (D.has(i - 1, j - 1, k - 1)) {
          cands.push_back(alg.extend(D.at(i - 1, j - 1, k - 1), EditOp::substitution(s(i), s(j))));
          tags[cands.size() - 1] = Selection::Diagonal;
        }
        if (D.has(i, j - 1, k)) {
          cands.push_back(alg.extend(D.at(i, j - 1, k), EditOp::deletion(s(j))));
          tags[cands.size() - 1] = Selection::Right;
        }
        if (cands.empty()) throw std::logic_error("dense_distance: cell without candidates");
        if (opt.soft && cands.size() > 1) {
          if constexpr (SoftDistanceAlgebra<A>) {
            D.set(i, j, k, alg.mix(std::move(cands), opt.temperature), Selection::Soft);
          } else {
            throw ConfigError("dense_distance: algebra does not support soft selection");
          }
          continue;
        }
        std::size_t best = 0;
        double best_score = alg.score(cands[0]);
        for (std::size_t c = 1; c < cands.size(); ++c) {
          const double sc = alg.score(cands[c]);
          if (sc > best_score) {
            best = c;
            best_score = sc;
          }
        }
        D.set(i, j, k, alg.commit(std::move(cands[best])), tags[best]);
      }
    }
  }
  return D;
}

/// d + c over a scalar cost model, scored by -d.
template <class Cost>
class ScalarAlgebra {
 public:
  using Value = Cost;
  using Candidate = Cost;

  ScalarAlgebra(CostModel<Cost> c, Cost d0) : costs_(std::move(c)), d0_(d0) {}

  Value root() const { return d0_; }
  Candidate extend(const Value& v, EditOp op) const {
    return v + (op.is_substitution() ? costs_.sub(op.a, op.b) : costs_.del(op.a));
  }
  double score(const Candidate& c) const { return -static_cast<double>(c); }
  Value commit(Candidate c) const { return c; }

  Value mix(std::vector<Candidate> cs, double temperature) const
    requires std::floating_point<Cost>
  {
    double mx = -INFINITY;
    for (auto c : cs) mx = std::max(mx, score(c) / temperature);
    double z = 0.0, acc = 0.0;
    for (auto c : cs) {
      const double w = std::exp(score(c) / temperature - mx);
      z += w;
      acc += w * c;
    }
    return acc / z;
  }

 private:
  CostModel<Cost> costs_;
  Cost d0_;
};

}  // namespace motif
