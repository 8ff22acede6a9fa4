// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact (non-neural) dynamic programs: classic edit distance, Sellers
// approximate matching, the self-matching tensor, and a scalar replay of the
// MotifNet distance recursion. Cost arithmetic is templated so that integral
// cost models compare exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "motif/errors.hpp"
#include "motif/sequence.hpp"

namespace motif {

template <class Cost = int>
struct CostModel {
  std::function<Cost(Symbol)> delete_cost;
  std::function<Cost(Symbol, Symbol)> substitute_cost;

  Cost del(Symbol s) const { return delete_cost(s); }
  Cost sub(Symbol a, Symbol b) const { return substitute_cost(a, b); }
};

/// delete = 1, substitute(a, b) = [a != b].
template <class Cost = int>
CostModel<Cost> unit_costs() {
  return {[](Symbol) { return Cost(1); }, [](Symbol a, Symbol b) { return a == b ? Cost(0) : Cost(1); }};
}

template <class T>
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}
  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

namespace detail {

// Eq. (1)-style fill of rows 1..|P| given row 0.
template <class Cost>
void fill_edit_rows(const Sequence& P, const Sequence& T, const CostModel<Cost>& c, Matrix<Cost>& D) {
  for (std::size_t i = 1; i <= P.size(); ++i) {
    D(i, 0) = D(i - 1, 0) + c.del(P[i - 1]);
    for (std::size_t j = 1; j <= T.size(); ++j) {
      D(i, j) = std::min({D(i - 1, j) + c.del(P[i - 1]), D(i - 1, j - 1) + c.sub(P[i - 1], T[j - 1]),
                          D(i, j - 1) + c.del(T[j - 1])});
    }
  }
}

}  // namespace detail

/// Minimum trace cost between A and B.
template <class Cost>
Cost edit_distance(const Sequence& A, const Sequence& B, const CostModel<Cost>& c) {
  Matrix<Cost> D(A.size() + 1, B.size() + 1);
  D(0, 0) = Cost(0);
  for (std::size_t j = 1; j <= B.size(); ++j) D(0, j) = D(0, j - 1) + c.del(B[j - 1]);
  detail::fill_edit_rows(A, B, c, D);
  return D(A.size(), B.size());
}

/// Sellers matching matrix: D(0, j) = 0 for all j, so the bottom row holds
/// the distance from P to the best suffix of T(:j).
template <class Cost>
Matrix<Cost> sellers_matrix(const Sequence& P, const Sequence& T, const CostModel<Cost>& c) {
  if (P.empty()) throw ConfigError("sellers_matrix: pattern must be nonempty");
  Matrix<Cost> D(P.size() + 1, T.size() + 1, Cost(0));
  detail::fill_edit_rows(P, T, c, D);
  return D;
}

/// Values indexed (i, j, k), 1 <= j <= i <= n and 1 <= k <= min(i, k_cap).
template <class Cost>
class SelfMatchTensor {
 public:
  SelfMatchTensor() = default;
  explicit SelfMatchTensor(std::size_t n) : n_(n), vals_(n * n * n), set_(n * n * n, 0) {}

  std::size_t length() const { return n_; }

  bool has(std::size_t i, std::size_t j, std::size_t k) const {
    return i >= 1 && j >= 1 && k >= 1 && i <= n_ && j <= i && k <= i && set_[idx(i, j, k)];
  }
  Cost at(std::size_t i, std::size_t j, std::size_t k) const {
    if (!has(i, j, k)) throw std::out_of_range("SelfMatchTensor: no entry");
    return vals_[idx(i, j, k)];
  }
  void set(std::size_t i, std::size_t j, std::size_t k, Cost v) {
    vals_[idx(i, j, k)] = v;
    set_[idx(i, j, k)] = 1;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Cost> vals_;
  std::vector<char> set_;

  std::size_t idx(std::size_t i, std::size_t j, std::size_t k) const {
    return ((i - 1) * n_ + (j - 1)) * n_ + (k - 1);
  }
};

/// D_s(i, j, k): distance from S(i-k+1 : i) to the best suffix of S(:j).
/// Recursion over (i, k, j) with candidates restricted to valid indices and
/// second index <= first. Boundaries follow Sellers: the empty-pattern row
/// (k = 0) is 0; matching against the empty text (j = 0) costs the deletion
/// of the whole pattern.
template <class Cost>
SelfMatchTensor<Cost> self_match_tensor(const Sequence& S, const CostModel<Cost>& c) {
  const std::size_t n = S.size();
  if (n == 0) throw ConfigError("self_match_tensor: sequence must be nonempty");
  SelfMatchTensor<Cost> Ds(n);
  auto s = [&](std::size_t i) { return S[i - 1]; };
  // pattern_del(i, k) = sum of deletion costs of S(i-k+1 : i)
  auto pattern_del = [&](std::size_t i, std::size_t k) {
    Cost total(0);
    for (std::size_t t = i - k + 1; t <= i; ++t) total = total + c.del(s(t));
    return total;
  };
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = 1; k <= i; ++k) {
      for (std::size_t j = 1; j <= i; ++j) {
        std::optional<Cost> best;
        auto offer = [&](Cost v) {
          if (!best || v < *best) best = v;
        };
        // down: S(i-k+1 : i-1) against suffix of S(:j); tensor entries need j <= i-1
        if (k == 1) {
          offer(c.del(s(i)));
        } else if (j <= i - 1) {
          offer(c.del(s(i)) + Ds.at(i - 1, j, k - 1));
        }
        // diagonal
        if (k == 1) {
          offer(c.sub(s(i), s(j)));
        } else {
          offer(c.sub(s(i), s(j)) + (j == 1 ? pattern_del(i - 1, k - 1) : Ds.at(i - 1, j - 1, k - 1)));
        }
        // right
        offer(c.del(s(j)) + (j == 1 ? pattern_del(i, k) : Ds.at(i, j - 1, k)));
        Ds.set(i, j, k, *best);
      }
    }
  }
  return Ds;
}

/// Scalar replay of the MotifNet distance recursion: distances are reals,
/// f_A(d, c) = d + c, costs come from `c`, and the score is -d so the argmax
/// picks the smallest candidate. The k = 1 cells are D0 + sub(s_i, s_j).
/// Candidates whose source cell does not exist are omitted; ties go to the
/// first of (down, diagonal, right).
template <class Cost>
SelfMatchTensor<Cost> scalar_alg1_oracle(const Sequence& S, const CostModel<Cost>& c, Cost D0) {
  const std::size_t n = S.size();
  if (n == 0) throw ConfigError("scalar_alg1_oracle: sequence must be nonempty");
  SelfMatchTensor<Cost> D(n);
  auto s = [&](std::size_t i) { return S[i - 1]; };
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = 1; k <= i; ++k) {
      for (std::size_t j = 1; j <= i; ++j) {
        if (k == 1) {
          D.set(i, j, 1, D0 + c.sub(s(i), s(j)));
          continue;
        }
        std::optional<Cost> best;
        auto offer = [&](Cost v) {
          if (!best || -v > -*best) best = v;
        };
        if (D.has(i - 1, j, k - 1)) offer(D.at(i - 1, j, k - 1) + c.del(s(i)));
        if (D.has(i - 1, j - 1, k - 1)) offer(D.at(i - 1, j - 1, k - 1) + c.sub(s(i), s(j)));
        if (D.has(i, j - 1, k)) offer(D.at(i, j - 1, k) + c.del(s(j)));
        if (!best) throw std::logic_error("scalar_alg1_oracle: cell without candidates");
        D.set(i, j, k, *best);
      }
    }
  }
  return D;
}

/// Non-learned next-symbol forecast: mass on s_{j+1} proportional to
/// kernel(D_s(i, j, k)) over 1 <= j < i, 1 <= k <= i, with i = |prefix|.
/// Prefixes shorter than 2 give the uniform distribution.
template <class Cost>
std::vector<double> generic_forecast(const Sequence& prefix, const SelfMatchTensor<Cost>& Ds,
                                     std::size_t alphabet_size, const std::function<double(double)>& kernel) {
  std::vector<double> p(alphabet_size, 0.0);
  const std::size_t i = prefix.size();
  if (i < 2) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(alphabet_size));
    return p;
  }
  double total = 0.0;
  for (std::size_t j = 1; j < i; ++j) {
    const auto next = static_cast<std::size_t>(prefix[j]);  // s_{j+1}
    if (next >= alphabet_size) throw DomainError("generic_forecast: symbol outside alphabet");
    for (std::size_t k = 1; k <= i; ++k) {
      const double w = kernel(static_cast<double>(Ds.at(i, j, k)));
      p[next] += w;
      total += w;
    }
  }
  if (!(total > 0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(alphabet_size));
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace motif
