// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model-level forward pass: distance tensor (dense or edit tree), the
// attention-weighted analogy forecast, the optional LSTM branch, sequence
// NLL, alignment export, and ancestral sampling.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "motif/checkpoint.hpp"
#include "motif/distance.hpp"
#include "motif/edit_tree.hpp"
#include "motif/modules.hpp"
#include "motif/params.hpp"
#include "motif/reference_dp.hpp"
#include "motif/tensor.hpp"

namespace motif {

struct CellWeight {
  std::uint32_t j = 0, k = 0;
  double w = 0.0;
};

/// Per-position forecast state for positions p = 0..|S|, predicting s_{p+1}
/// from S(:p).
struct ForecastContext {
  std::vector<Var> logits;
  std::vector<std::vector<double>> probs;
  std::vector<Var> outputs;                      // O_p (motif models)
  std::vector<std::vector<CellWeight>> weights;  // w_{p,j,k} of the retained cells
};

struct Forward {
  ForecastContext ctx;
  std::optional<DenseDistance<Var>> dense;
  std::optional<TreeBuild<Var>> tree;
  std::vector<Var> lstm;  // top hidden state after each input symbol
};

namespace detail {

// Softmax pooling of analogy features over the cells of one position.
inline Var pool_cells(Modules& m, const std::vector<Var>& keys, const std::vector<Var>& feats,
                      const std::vector<double>& mult, std::vector<double>* w) {
  return m.tape().attend(m.forecast_scorer(), keys, feats, mult, 1.0, w);
}

}  // namespace detail

/// Forward pass over S. Produces |S| + 1 predictive distributions.
inline Forward run_forward(const Sequence& S, ParamStore& params, const ModelConfig& cfg, Tape& tape) {
  cfg.validate();
  Modules m(tape, params, cfg);
  for (Symbol s : S) m.check_symbol(s);
  const std::size_t n = S.size();
  Forward out;
  auto& ctx = out.ctx;
  ctx.weights.resize(n + 1);
  ctx.outputs.resize(n + 1);

  std::vector<Var> outputs(n + 1);
  if (cfg.uses_motif()) {
    NeuralAlgebra alg(m);
    std::vector<Var> keys, feats;
    std::vector<double> mult, w;
    if (cfg.backend == Backend::Dense) {
      if (n > 0) out.dense = dense_distance(S, alg, DenseOptions{cfg.k_max, cfg.soft_select, cfg.soft_temperature});
      for (std::size_t p = 2; p <= n; ++p) {
        const auto& D = *out.dense;
        keys.clear();
        feats.clear();
        std::vector<CellWeight> cw;
        const std::size_t kk = std::min(p, D.k_cap());
        for (std::size_t j = 1; j < p; ++j) {
          for (std::size_t k = 1; k <= kk; ++k) {
            const Var d = D.at(p, j, k);
            keys.push_back(d);
            feats.push_back(m.analogy_for_symbol(d, S[j]));  // s_{j+1}
            cw.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k), 0.0});
          }
        }
        outputs[p] = detail::pool_cells(m, keys, feats, {}, &w);
        for (std::size_t t = 0; t < cw.size(); ++t) cw[t].w = w[t];
        ctx.weights[p] = std::move(cw);
      }
    } else {
      if (n > 0) out.tree = build_edit_tree(S, alg, cfg.alphabet_size, TreeOptions{cfg.n_priority, cfg.d_max});
      std::unordered_map<std::uint64_t, Var> feat_memo;
      for (std::size_t p = 2; p <= n; ++p) {
        const auto& T = *out.tree;
        keys.clear();
        feats.clear();
        mult.clear();
        std::unordered_map<std::uint64_t, std::size_t> group;
        std::vector<std::size_t> cell_group;
        std::vector<CellWeight> cw;
        const std::size_t kk = std::min(p, T.cells.k_cap());
        for (std::size_t j = 1; j < p; ++j) {
          for (std::size_t k = 1; k <= kk; ++k) {
            const NodeId id = T.cells.get(p, j, k);
            if (id == kNoNode) continue;
            const std::uint64_t gk = static_cast<std::uint64_t>(id) * cfg.alphabet_size + static_cast<std::uint64_t>(S[j]);
            auto [it, fresh] = group.emplace(gk, keys.size());
            if (fresh) {
              const Var d = T.tree.node(id).value;
              auto [fit, ffresh] = feat_memo.emplace(gk, Var{});
              if (ffresh) fit->second = m.analogy_for_symbol(d, S[j]);
              keys.push_back(d);
              feats.push_back(fit->second);
              mult.push_back(0.0);
            }
            mult[it->second] += 1.0;
            cell_group.push_back(it->second);
            cw.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k), 0.0});
          }
        }
        if (keys.empty()) continue;  // every cell pruned: falls back to O_init
        outputs[p] = detail::pool_cells(m, keys, feats, mult, &w);
        for (std::size_t t = 0; t < cw.size(); ++t) cw[t].w = w[cell_group[t]];
        ctx.weights[p] = std::move(cw);
      }
    }
    for (std::size_t p = 0; p <= n; ++p)
      if (!outputs[p].valid()) outputs[p] = m.o_init();
  }

  std::vector<Var> lstm_h;
  if (cfg.uses_lstm()) {
    std::vector<Var> inputs;
    inputs.reserve(n);
    for (Symbol s : S) inputs.push_back(m.embed(s));
    if (n > 0) out.lstm = m.lstm(inputs);
    lstm_h.push_back(m.zeros(cfg.lstm_hidden()));
    lstm_h.insert(lstm_h.end(), out.lstm.begin(), out.lstm.end());
  }

  ctx.logits.resize(n + 1);
  ctx.probs.resize(n + 1);
  for (std::size_t p = 0; p <= n; ++p) {
    Var in;
    switch (cfg.kind) {
      case ModelKind::Lstm: in = lstm_h[p]; break;
      case ModelKind::MotifNet: in = outputs[p]; break;
      case ModelKind::MotifNetLstm: in = tape.concat({lstm_h[p], outputs[p]}); break;
    }
    ctx.outputs[p] = cfg.uses_motif() ? outputs[p] : Var{};
    ctx.logits[p] = m.forecast_logits(in);
    ctx.probs[p] = Tape::softmax_values(tape.value(ctx.logits[p]));
  }
  return out;
}

/// Mean per-symbol NLL (nats) of S as a tape scalar. Runs the forward pass
/// on S(:|S|-1); causality makes that sufficient for all |S| predictions.
inline Var sequence_nll_var(const Sequence& S, ParamStore& params, const ModelConfig& cfg, Tape& tape,
                            Forward* fwd_out = nullptr) {
  if (S.empty()) throw ConfigError("sequence_nll: empty sequence");
  const Sequence prefix(S.begin(), S.end() - 1);
  Forward f = run_forward(prefix, params, cfg, tape);
  std::vector<Var> terms;
  terms.reserve(S.size());
  for (std::size_t p = 0; p < S.size(); ++p) {
    if (S[p] < 0 || static_cast<std::size_t>(S[p]) >= cfg.alphabet_size) throw DomainError("symbol outside alphabet");
    terms.push_back(tape.softmax_nll(f.ctx.logits[p], static_cast<std::size_t>(S[p])));
  }
  Var total = tape.sum(tape.concat(std::span<const Var>(terms)));
  if (fwd_out) *fwd_out = std::move(f);
  return tape.scale(total, 1.0 / static_cast<double>(S.size()));
}

inline double sequence_nll(const Sequence& S, ParamStore& params, const ModelConfig& cfg) {
  Tape tape;
  return tape.scalar(sequence_nll_var(S, params, cfg, tape));
}

/// A model is its configuration plus its parameters. On disk the parameter
/// records are followed by one "config.<key>" record per configuration field.
struct Model {
  ModelConfig cfg;
  ParamStore params;

  static Model create(const ModelConfig& cfg, std::uint64_t seed) { return Model{cfg, make_params(cfg, seed)}; }
};

namespace detail {

inline std::vector<std::pair<std::string, double>> config_fields(const ModelConfig& c) {
  return {{"kind", static_cast<double>(c.kind)},
          {"alphabet_size", static_cast<double>(c.alphabet_size)},
          {"dim", static_cast<double>(c.dim)},
          {"out_dim", static_cast<double>(c.out_dim)},
          {"lstm_dim", static_cast<double>(c.lstm_dim)},
          {"lstm_layers", static_cast<double>(c.lstm_layers)},
          {"alpha", c.alpha},
          {"delta", c.delta},
          {"soft_select", c.soft_select ? 1.0 : 0.0},
          {"decoupled_scorer", c.decoupled_scorer ? 1.0 : 0.0},
          {"soft_temperature", c.soft_temperature},
          {"backend", static_cast<double>(c.backend)},
          {"k_max", static_cast<double>(c.k_max)},
          {"n_priority", static_cast<double>(c.n_priority)},
          {"d_max", static_cast<double>(c.d_max)}};
}

inline void set_config_field(ModelConfig& c, const std::string& key, double v) {
  const auto u = static_cast<std::size_t>(v);
  if (key == "kind") c.kind = static_cast<ModelKind>(u);
  else if (key == "alphabet_size") c.alphabet_size = u;
  else if (key == "dim") c.dim = u;
  else if (key == "out_dim") c.out_dim = u;
  else if (key == "lstm_dim") c.lstm_dim = u;
  else if (key == "lstm_layers") c.lstm_layers = u;
  else if (key == "alpha") c.alpha = v;
  else if (key == "delta") c.delta = v;
  else if (key == "soft_select") c.soft_select = v != 0.0;
  else if (key == "decoupled_scorer") c.decoupled_scorer = v != 0.0;
  else if (key == "soft_temperature") c.soft_temperature = v;
  else if (key == "backend") c.backend = static_cast<Backend>(u);
  else if (key == "k_max") c.k_max = u;
  else if (key == "n_priority") c.n_priority = u;
  else if (key == "d_max") c.d_max = u;
  else throw ParseError("unknown config record: " + key, 0);
}

}  // namespace detail

inline void save_model(const std::string& path, const Model& model) {
  ParamStore all = model.params;
  for (const auto& [k, v] : detail::config_fields(model.cfg)) all.add("config." + k, Tensor::from_vector({v}));
  save_checkpoint(path, all);
}

inline Model load_model(const std::string& path) {
  ParamStore all = load_checkpoint(path);
  Model m;
  for (auto& e : all.entries()) {
    if (e.name.rfind("config.", 0) == 0) {
      detail::set_config_field(m.cfg, e.name.substr(7), e.tensor.data.at(0));
    } else {
      m.params.add(e.name, std::move(e.tensor));
    }
  }
  m.cfg.validate();
  ParamStore expected = make_params(m.cfg, 0);
  if (expected.size() != m.params.size()) throw ParseError("checkpoint parameters do not match its config", 0);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& a = expected.entries()[i];
    if (!m.params.contains(a.name) || m.params[a.name].dims != a.tensor.dims)
      throw ParseError("checkpoint parameter missing or misshapen: " + a.name, 0);
  }
  return m;
}

/// M(i, j) = sum_k w_{i,j,k}, each nonempty row scaled to max 1. Indexed
/// [i-1][j-1]; entries with j >= i are 0.
inline std::vector<std::vector<double>> alignment_matrix(const ForecastContext& ctx, std::size_t n) {
  std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 2; i <= n && i < ctx.weights.size(); ++i) {
    for (const auto& c : ctx.weights[i]) M[i - 1][c.j - 1] += c.w;
    const double mx = *std::max_element(M[i - 1].begin(), M[i - 1].end());
    if (mx > 0)
      for (auto& v : M[i - 1]) v /= mx;
  }
  return M;
}

inline void write_alignment_csv(std::ostream& os, const std::vector<std::vector<double>>& M, const Sequence& S) {
  os << "i\\j";
  for (std::size_t j = 0; j < M.size(); ++j) os << ',' << (j + 1) << ':' << S[j];
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < M.size(); ++i) {
    os << (i + 1) << ':' << S[i];
    for (double v : M[i]) os << ',' << v;
    os << '\n';
  }
}

/// Binary 8-bit PGM (P5), brightness = round(255 * M).
inline void write_alignment_pgm(std::ostream& os, const std::vector<std::vector<double>>& M) {
  const std::size_t n = M.size();
  os << "P5\n" << n << ' ' << n << "\n255\n";
  for (const auto& row : M)
    for (double v : row) os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
}

/// Draw an index from a probability vector with one uniform variate.
inline std::size_t draw_categorical(const std::vector<double>& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (r < acc) return i;
  }
  return p.size() - 1;
}

/// Ancestral sampling from the chain-rule factorization.
inline Sequence sample_sequence(Model& model, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw ConfigError("sample: length must be >= 1");
  std::mt19937_64 rng(seed);
  Sequence s;
  for (std::size_t t = 0; t < length; ++t) {
    Tape tape;
    Forward f = run_forward(s, model.params, model.cfg, tape);
    s.push_back(static_cast<Symbol>(draw_categorical(f.ctx.probs[t], rng)));
  }
  return s;
}

}  // namespace motif
