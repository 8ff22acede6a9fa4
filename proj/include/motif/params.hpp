// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "motif/errors.hpp"
#include "motif/tensor.hpp"

namespace motif {

/// Named learnable tensors in registration order. Addresses are stable, so
/// tapes may hold pointers into the store for the duration of a pass.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  Tensor& add(const std::string& name, Tensor t) {
    if (index_.contains(name)) throw UsageError("parameter registered twice: " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{name, std::move(t)});
    return entries_.back().tensor;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Tensor& operator[](const std::string& name) { return entries_.at(lookup(name)).tensor; }
  const Tensor& operator[](const std::string& name) const { return entries_.at(lookup(name)).tensor; }

  std::size_t size() const { return entries_.size(); }
  std::deque<Entry>& entries() { return entries_; }
  const std::deque<Entry>& entries() const { return entries_; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  /// Copy values (not gradients) from a store with the same layout.
  void assign_values(const ParamStore& other) {
    if (other.size() != size()) throw ShapeError("assign_values(): parameter sets differ");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name != other.entries_[i].name ||
          entries_[i].tensor.dims != other.entries_[i].tensor.dims)
        throw ShapeError("assign_values(): parameter '" + entries_[i].name + "' differs");
      entries_[i].tensor.data = other.entries_[i].tensor.data;
    }
  }

 private:
  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;

  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
  }
};

// Initializers. Linear maps: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// Embeddings: N(0, 1) / sqrt(cols).
inline Tensor init_linear(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  Tensor t({fan_in, fan_out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.data) v = u(rng);
  return t;
}

inline Tensor init_embedding(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t({rows, cols});
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(cols));
  for (auto& v : t.data) v = n(rng) * s;
  return t;
}

}  // namespace motif
