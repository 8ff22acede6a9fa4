// SPDX-License-Identifier: Apache-2.0
#pragma once

// Learned function modules and their parameter registry.
//
// Parameter names (stable; they are the checkpoint record names):
//   embed                 [|S| x N]        f_E
//   del.l{1,2}.{w,b}      [N x N], [N]     g_D, f_D = g_D o f_E
//   sub.l{1,2}.{w,b}      [N x N], [N]     g_S, f_S = g_S(ph(e_a - e_b))
//   add.wx, add.b, add.u  [N x 3N], [3N], [N x 3N]   GRU f_A
//   score.w               [N x 1]          f_W (no bias)
//   score.forecast.w      [N x 1]          second f_W, decoupled variant only
//   analogy.l1.{w,b}      [2N x N_O], [N_O]
//   analogy.l2.{w,b}      [N_O x N_O], [N_O]
//   forecast.l1.{w,b}     [in x N_O], [N_O]   in = N_O, H, or H + N_O
//   forecast.l2.{w,b}     [N_O x |S|], [|S|]
//   d0                    [N]              GRU initial state D0
//   o_init                [N_O]            forecast input when no cell exists
//   lstm.{l}.{wx,wh,b}    [in x 4H], [H x 4H], [4H]  gates i, f, g, o
// Here N = N_E = N_C = N_D.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "motif/distance.hpp"
#include "motif/errors.hpp"
#include "motif/params.hpp"
#include "motif/sequence.hpp"
#include "motif/tensor.hpp"

namespace motif {

enum class ModelKind { Lstm, MotifNet, MotifNetLstm };
enum class Backend { Dense, Tree };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lstm: return "lstm";
    case ModelKind::MotifNet: return "motifnet";
    case ModelKind::MotifNetLstm: return "motifnet+lstm";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "motifnet") return ModelKind::MotifNet;
  if (s == "motifnet+lstm" || s == "motifnet_lstm") return ModelKind::MotifNetLstm;
  throw ConfigError("unknown model kind: " + s);
}

inline const char* to_string(Backend b) { return b == Backend::Dense ? "dense" : "tree"; }

inline Backend parse_backend(const std::string& s) {
  if (s == "dense") return Backend::Dense;
  if (s == "tree") return Backend::Tree;
  throw ConfigError("unknown backend: " + s);
}

struct ModelConfig {
  ModelKind kind = ModelKind::MotifNet;
  std::size_t alphabet_size = 12;
  std::size_t dim = 8;         // N_E = N_C = N_D
  std::size_t out_dim = 0;     // N_O; 0 means dim
  std::size_t lstm_dim = 0;    // LSTM hidden size; 0 means dim
  std::size_t lstm_layers = 1;
  double alpha = 0.01;         // leaky ReLU slope
  double delta = 0.5;          // pseudo-Huber parameter
  bool soft_select = false;
  bool decoupled_scorer = false;
  double soft_temperature = 1.0;
  Backend backend = Backend::Dense;
  std::size_t k_max = 0;       // dense suffix cap; 0 means unbounded
  std::size_t n_priority = 0;  // tree sibling cap; 0 means unbounded
  std::size_t d_max = 4;       // tree depth and suffix cap

  std::size_t n_out() const { return out_dim ? out_dim : dim; }
  std::size_t lstm_hidden() const { return lstm_dim ? lstm_dim : dim; }
  bool uses_motif() const { return kind != ModelKind::Lstm; }
  bool uses_lstm() const { return kind != ModelKind::MotifNet; }
  std::size_t forecast_input() const {
    switch (kind) {
      case ModelKind::Lstm: return lstm_hidden();
      case ModelKind::MotifNet: return n_out();
      case ModelKind::MotifNetLstm: return lstm_hidden() + n_out();
    }
    return 0;
  }

  void validate() const {
    if (alphabet_size < 1 || dim < 1) throw ConfigError("alphabet size and dimension must be >= 1");
    if (!(delta > 0)) throw ConfigError("delta must be positive");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
    if (uses_lstm() && (lstm_layers < 1 || lstm_layers > 4)) throw ConfigError("lstm_layers must be in 1..4");
    if (soft_select && backend == Backend::Tree)
      throw ConfigError("soft selection mixes every candidate and cannot run on the edit tree");
    if (!(soft_temperature > 0)) throw ConfigError("soft temperature must be positive");
    if (backend == Backend::Tree && d_max < 1) throw ConfigError("d_max must be >= 1");
  }
};

/// Registers and initializes every learnable for `cfg`, seeded.
inline ParamStore make_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore p;
  const std::size_t N = cfg.dim, NO = cfg.n_out(), A = cfg.alphabet_size;
  auto two_layer = [&](const std::string& name, std::size_t in, std::size_t hidden, std::size_t out) {
    p.add(name + ".l1.w", init_linear(in, hidden, rng));
    p.add(name + ".l1.b", Tensor({hidden}));
    p.add(name + ".l2.w", init_linear(hidden, out, rng));
    p.add(name + ".l2.b", Tensor({out}));
  };
  p.add("embed", init_embedding(A, N, rng));
  if (cfg.uses_motif()) {
    two_layer("del", N, N, N);
    two_layer("sub", N, N, N);
    p.add("add.wx", init_linear(N, 3 * N, rng));
    p.add("add.b", Tensor({3 * N}));
    p.add("add.u", init_linear(N, 3 * N, rng));
    p.add("score.w", init_linear(N, 1, rng));
    if (cfg.decoupled_scorer) p.add("score.forecast.w", init_linear(N, 1, rng));
    two_layer("analogy", 2 * N, NO, NO);
    p.add("d0", Tensor({N}));
    p.add("o_init", Tensor({NO}));
  }
  if (cfg.uses_lstm()) {
    const std::size_t H = cfg.lstm_hidden();
    for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
      const std::string pre = "lstm." + std::to_string(l);
      p.add(pre + ".wx", init_linear(l == 0 ? N : H, 4 * H, rng));
      p.add(pre + ".wh", init_linear(H, 4 * H, rng));
      Tensor b({4 * H});
      for (std::size_t t = H; t < 2 * H; ++t) b.data[t] = 1.0;  // forget gate
      p.add(pre + ".b", std::move(b));
    }
  }
  two_layer("forecast", cfg.forecast_input(), NO, A);
  return p;
}

/// The function modules bound to one tape for one forward pass. Symbol-only
/// quantities (embeddings, edit costs, their GRU input projections) are
/// computed once per pass and reused.
class Modules {
 public:
  Modules(Tape& tape, ParamStore& params, const ModelConfig& cfg)
      : tape_(tape), p_(params), cfg_(cfg), embed_cache_(cfg.alphabet_size) {
    if (cfg.uses_motif()) {
      const std::size_t keys = EditOp::key_space(cfg.alphabet_size);
      cost_cache_.resize(keys);
      proj_cache_.resize(keys);
      analogy_cache_.resize(cfg.alphabet_size);
      gru_u_ = &p_["add.u"];
      select_w_ = &p_["score.w"];
      forecast_w_ = cfg.decoupled_scorer ? &p_["score.forecast.w"] : select_w_;
    }
  }

  Tape& tape() { return tape_; }
  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return p_; }

  void check_symbol(Symbol s) const {
    if (s < 0 || static_cast<std::size_t>(s) >= cfg_.alphabet_size)
      throw DomainError("symbol " + std::to_string(s) + " outside alphabet of size " +
                        std::to_string(cfg_.alphabet_size));
  }

  /// f_E
  Var embed(Symbol s) {
    check_symbol(s);
    auto& slot = embed_cache_[static_cast<std::size_t>(s)];
    if (!slot.valid()) slot = tape_.row(p_["embed"], static_cast<std::size_t>(s));
    return slot;
  }

  /// f_D = g_D o f_E
  Var delete_cost(Symbol s) {
    auto& slot = cost_cache_[EditOp::deletion(s).key(cfg_.alphabet_size)];
    if (!slot.valid()) slot = two_layer("del", embed(s));
    return slot;
  }

  /// f_S(a, b) = g_S(ph(f_E(a) - f_E(b), delta)); symmetric in (a, b).
  Var substitute_cost(Symbol a, Symbol b) {
    check_symbol(a);
    check_symbol(b);
    auto& slot = cost_cache_[EditOp::substitution(a, b).key(cfg_.alphabet_size)];
    if (!slot.valid()) {
      const Symbol lo = std::min(a, b), hi = std::max(a, b);
      slot = two_layer("sub", tape_.pseudo_huber(tape_.sub(embed(lo), embed(hi)), cfg_.delta));
    }
    return slot;
  }

  Var edit_cost(EditOp op) { return op.is_substitution() ? substitute_cost(op.a, op.b) : delete_cost(op.a); }

  /// W_x c + b for the GRU, cached per edit operation.
  Var edge_projection(EditOp op) {
    auto& slot = proj_cache_[op.key(cfg_.alphabet_size)];
    if (!slot.valid()) slot = input_projection(edit_cost(op));
    return slot;
  }

  Var input_projection(Var cost) { return tape_.affine(p_["add.wx"], p_["add.b"], cost); }

  /// f_A(d, c): one GRU step, d the latent state and c the input.
  Var add(Var d, Var cost) { return tape_.gru(*gru_u_, d, input_projection(cost)); }

  Var d0() {
    if (!d0_.valid()) d0_ = tape_.param(p_["d0"]);
    return d0_;
  }

  /// f_W, the selection scorer.
  Var score(Var d) { return tape_.linear(*select_w_, d); }
  Tensor& selection_scorer() { return *select_w_; }
  Tensor& forecast_scorer() { return *forecast_w_; }
  Tensor& gru_hidden() { return *gru_u_; }

  /// f_G(d, e) = g_G(concat(d, e)).
  Var analogy(Var d, Var e) {
    return analogy_hidden(d, tape_.add(tape_.linear_rows(p_["analogy.l1.w"], cfg_.dim, e), tape_.param(p_["analogy.l1.b"])));
  }

  /// f_G(d, f_E(s)) with the embedding half of the first layer cached per symbol.
  Var analogy_for_symbol(Var d, Symbol s) {
    check_symbol(s);
    auto& slot = analogy_cache_[static_cast<std::size_t>(s)];
    if (!slot.valid())
      slot = tape_.add(tape_.linear_rows(p_["analogy.l1.w"], cfg_.dim, embed(s)), tape_.param(p_["analogy.l1.b"]));
    return analogy_hidden(d, slot);
  }

  /// Logits of f_F; f_F itself is softmax of these.
  Var forecast_logits(Var o) {
    Var h = tape_.leaky_relu(tape_.affine(p_["forecast.l1.w"], p_["forecast.l1.b"], o), cfg_.alpha);
    return tape_.affine(p_["forecast.l2.w"], p_["forecast.l2.b"], h);
  }
  Var forecast(Var o) { return tape_.softmax(forecast_logits(o)); }

  Var o_init() {
    if (!o_init_.valid()) o_init_ = tape_.param(p_["o_init"]);
    return o_init_;
  }

  /// Stacked LSTM over `inputs`; returns the top layer's hidden state after
  /// each step. Initial states are zero.
  std::vector<Var> lstm(std::span<const Var> inputs) {
    const std::size_t H = cfg_.lstm_hidden();
    std::vector<Var> layer_in(inputs.begin(), inputs.end());
    for (std::size_t l = 0; l < cfg_.lstm_layers; ++l) {
      const std::string pre = "lstm." + std::to_string(l);
      Tensor& wx = p_[pre + ".wx"];
      Tensor& wh = p_[pre + ".wh"];
      Tensor& b = p_[pre + ".b"];
      Var h = tape_.constant(std::vector<double>(H, 0.0));
      Var c = h;
      std::vector<Var> outs;
      outs.reserve(layer_in.size());
      for (Var x : layer_in) {
        Var g = tape_.add(tape_.affine(wx, b, x), tape_.linear(wh, h));
        Var ig = tape_.sigmoid(tape_.slice(g, 0, H));
        Var fg = tape_.sigmoid(tape_.slice(g, H, H));
        Var cand = tape_.tanh(tape_.slice(g, 2 * H, H));
        Var og = tape_.sigmoid(tape_.slice(g, 3 * H, H));
        c = tape_.add(tape_.mul(fg, c), tape_.mul(ig, cand));
        h = tape_.mul(og, tape_.tanh(c));
        outs.push_back(h);
      }
      layer_in = std::move(outs);
    }
    return layer_in;
  }

  Var zeros(std::size_t n) { return tape_.constant(std::vector<double>(n, 0.0)); }

 private:
  Tape& tape_;
  ParamStore& p_;
  const ModelConfig& cfg_;
  std::vector<Var> embed_cache_, cost_cache_, proj_cache_, analogy_cache_;
  Var d0_, o_init_;
  Tensor* gru_u_ = nullptr;
  Tensor* select_w_ = nullptr;
  Tensor* forecast_w_ = nullptr;

  // leaky o L(l2) o leaky o L(l1)
  Var two_layer(const std::string& name, Var x) {
    Var h = tape_.leaky_relu(tape_.affine(p_[name + ".l1.w"], p_[name + ".l1.b"], x), cfg_.alpha);
    return tape_.leaky_relu(tape_.affine(p_[name + ".l2.w"], p_[name + ".l2.b"], h), cfg_.alpha);
  }

  Var analogy_hidden(Var d, Var embed_part) {
    Var h = tape_.leaky_relu(tape_.add(tape_.linear_rows(p_["analogy.l1.w"], 0, d), embed_part), cfg_.alpha);
    return tape_.leaky_relu(tape_.affine(p_["analogy.l2.w"], p_["analogy.l2.b"], h), cfg_.alpha);
  }
};

/// Neural distance algebra: distances are tape vectors, candidates are GRU
/// steps evaluated off-tape and recorded only when committed, so losing
/// candidates never enter the backward pass.
class NeuralAlgebra {
 public:
  using Value = Var;
  struct Candidate {
    Var source;
    Var edge;
    GruStep step;
    double score = 0.0;
  };

  explicit NeuralAlgebra(Modules& m) : m_(m) {}

  Value root() { return m_.d0(); }

  Candidate extend(const Var& v, EditOp op) {
    Candidate c;
    c.source = v;
    c.edge = m_.edge_projection(op);
    c.step = gru_eval(m_.gru_hidden(), m_.tape().value(v), m_.tape().value(c.edge));
    const Tensor& w = m_.selection_scorer();
    c.score = detail::dot(w.data.data(), c.step.out.data(), w.size());
    return c;
  }

  double score(const Candidate& c) const { return c.score; }

  Value commit(Candidate c) { return m_.tape().record_gru(m_.gru_hidden(), c.source, c.edge, std::move(c.step)); }

  /// sum_c softmax(f_W(c) / temperature) * c
  Value mix(std::vector<Candidate> cs, double temperature) {
    std::vector<Var> vs;
    vs.reserve(cs.size());
    for (auto& c : cs) vs.push_back(commit(std::move(c)));
    return m_.tape().attend(m_.selection_scorer(), vs, vs, {}, temperature);
  }

 private:
  Modules& m_;
};

}  // namespace motif
