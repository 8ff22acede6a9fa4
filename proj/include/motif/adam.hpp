// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "motif/errors.hpp"
#include "motif/params.hpp"

namespace motif {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions opts;
  std::vector<std::vector<double>> m, v;  // one buffer per parameter, in store order
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const AdamOptions& o) : opts(o) {}
};

/// Bias-corrected Adam update over every parameter, then zero the gradients.
/// Throws UsageError if any parameter has no gradient buffer.
inline void adam_step(ParamStore& params, AdamState& state) {
  auto& entries = params.entries();
  for (const auto& e : entries) {
    if (!e.tensor.has_grad()) throw UsageError("adam_step(): parameter '" + e.name + "' has no gradient");
  }
  if (state.m.empty()) {
    for (const auto& e : entries) {
      state.m.emplace_back(e.tensor.size(), 0.0);
      state.v.emplace_back(e.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != entries.size()) throw UsageError("adam_step(): state belongs to another parameter set");

  ++state.step;
  const auto& o = state.opts;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto& x = entries[p].tensor.data;
    auto& g = entries[p].tensor.grad;
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      x[i] -= o.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.eps);
      g[i] = 0.0;
    }
  }
}

}  // namespace motif
