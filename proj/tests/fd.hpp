// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite differences against tape gradients.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "motif/params.hpp"
#include "motif/tensor.hpp"

namespace fd {

/// ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor).
inline double rel_err(const std::vector<double>& a, const std::vector<double>& n, double floor = 1e-10) {
  double d = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(d) / std::max(std::sqrt(na) + std::sqrt(nn), floor);
}

/// Relative error of each tensor's gradient. `loss` builds a scalar on a
/// fresh tape.
template <class F>
std::vector<double> check(const std::vector<motif::Tensor*>& ts, F loss, double h = 1e-6) {
  for (auto* t : ts) t->zero_grad();
  {
    motif::Tape tape;
    motif::Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<double> errs;
  for (auto* t : ts) {
    std::vector<double> analytic = t->grad;
    if (analytic.empty()) analytic.assign(t->size(), 0.0);
    std::vector<double> numeric(t->size());
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double x0 = t->data[i];
      auto eval = [&](double x) {
        t->data[i] = x;
        motif::Tape tape;
        return tape.scalar(loss(tape));
      };
      const double fp = eval(x0 + h), fm = eval(x0 - h);
      t->data[i] = x0;
      numeric[i] = (fp - fm) / (2 * h);
    }
    errs.push_back(rel_err(analytic, numeric));
  }
  return errs;
}

inline std::map<std::string, double> check_store(motif::ParamStore& p, const auto& loss, double h = 1e-6) {
  std::vector<motif::Tensor*> ts;
  for (auto& e : p.entries()) ts.push_back(&e.tensor);
  const auto errs = check(ts, loss, h);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < ts.size(); ++i) out[p.entries()[i].name] = errs[i];
  return out;
}

inline motif::Tensor random_tensor(std::vector<std::size_t> dims, std::mt19937_64& rng, double scale = 1.0) {
  motif::Tensor t(std::move(dims));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.data) v = n(rng);
  return t;
}

}  // namespace fd
