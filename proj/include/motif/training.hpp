// SPDX-License-Identifier: Apache-2.0
#pragma once

// Maximum-likelihood training with Adam and strike-based early stopping,
// evaluation, and hyperparameter sweeps.
//
// One epoch visits every training sequence once in a seeded shuffled order
// with one Adam step per sequence. A strike is an epoch whose validation NLL
// is above the best seen so far; the run stops at the max_strikes-th strike
// or at the epoch cap, and the best-validation parameters are restored.
// All NLLs are in nats per predicted symbol.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "motif/adam.hpp"
#include "motif/data.hpp"
#include "motif/errors.hpp"
#include "motif/motifnet.hpp"

namespace motif {

struct TrainOptions {
  AdamOptions adam;
  std::size_t max_strikes = 3;
  std::size_t max_epochs = 200;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  std::ostream* log = nullptr;  // one line per epoch when set
};

struct Splits {
  Corpus train, valid, test;
};

// ---------------------------------------------------------------- strikes

/// Incremental strike rule, a pure function of the validation sequence.
class StrikeCounter {
 public:
  explicit StrikeCounter(std::size_t max_strikes) : max_(max_strikes) {
    if (max_strikes < 1) throw ConfigError("max strikes must be >= 1");
  }

  /// Feed the validation NLL of the next epoch; returns true when training
  /// should stop after this epoch.
  bool observe(double valid_nll) {
    ++epoch_;
    if (epoch_ == 1 || valid_nll < best_) {
      best_ = valid_nll;
      best_epoch_ = epoch_;
      improved_ = true;
    } else {
      improved_ = false;
      if (valid_nll > best_) {
        ++strikes_;
        strike_epochs_.push_back(epoch_);
      }
    }
    return strikes_ >= max_;
  }

  bool improved() const { return improved_; }
  std::size_t strikes() const { return strikes_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best() const { return best_; }
  const std::vector<std::size_t>& strike_epochs() const { return strike_epochs_; }

 private:
  std::size_t max_;
  std::size_t epoch_ = 0, strikes_ = 0, best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
  std::vector<std::size_t> strike_epochs_;
};

struct StrikeTrace {
  std::vector<std::size_t> strike_epochs;
  std::size_t stop_epoch = 0;  // 0: never stopped
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Replays the strike rule over a validation-NLL sequence (epochs are 1-based).
inline StrikeTrace strike_trace(const std::vector<double>& valid, std::size_t max_strikes, std::size_t max_epochs = 0) {
  StrikeCounter sc(max_strikes);
  StrikeTrace t;
  for (double v : valid) {
    if (max_epochs && t.epochs_run == max_epochs) break;
    ++t.epochs_run;
    if (sc.observe(v)) {
      t.stop_epoch = t.epochs_run;
      break;
    }
  }
  t.strike_epochs = sc.strike_epochs();
  t.best_epoch = sc.best_epoch();
  return t;
}

// ------------------------------------------------------------- evaluation

struct Evaluation {
  double mean_nll = 0.0;   // total NLL / total predicted symbols
  double std_error = 0.0;  // of per-sequence NLLs; 0 for a single sequence
  std::size_t symbols = 0;
  std::size_t sequences = 0;
};

inline void check_alphabet(const ModelConfig& cfg, const Corpus& c) {
  if (c.alphabet_size != cfg.alphabet_size)
    throw ConfigError("alphabet mismatch: model has " + std::to_string(cfg.alphabet_size) + " symbols, corpus has " +
                      std::to_string(c.alphabet_size));
}

/// Combines per-sequence (mean NLL, length) pairs.
inline Evaluation summarize(const std::vector<double>& per_seq, const std::vector<std::size_t>& lengths) {
  Evaluation e;
  e.sequences = per_seq.size();
  double total = 0.0;
  for (std::size_t i = 0; i < per_seq.size(); ++i) {
    total += per_seq[i] * static_cast<double>(lengths[i]);
    e.symbols += lengths[i];
  }
  e.mean_nll = e.symbols ? total / static_cast<double>(e.symbols) : 0.0;
  if (e.sequences > 1) {
    const double n = static_cast<double>(e.sequences);
    const double mu = std::accumulate(per_seq.begin(), per_seq.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : per_seq) ss += (v - mu) * (v - mu);
    e.std_error = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  }
  return e;
}

inline Evaluation evaluate(const ParamStore& params, const ModelConfig& cfg, const Corpus& c) {
  check_alphabet(cfg, c);
  auto& p = const_cast<ParamStore&>(params);  // forward passes only read values
  std::vector<double> per_seq;
  std::vector<std::size_t> lengths;
  for (const auto& s : c.sequences) {
    if (s.empty()) continue;
    per_seq.push_back(sequence_nll(s, p, cfg));
    lengths.push_back(s.size());
  }
  return summarize(per_seq, lengths);
}

inline Evaluation evaluate(const Model& m, const Corpus& c) { return evaluate(m.params, m.cfg, c); }

// --------------------------------------------------------------- training

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double valid_nll = 0.0;
  std::size_t strikes = 0;
  double seconds = 0.0;
  double mean_tree_nodes = 0.0;  // tree backend only
};

struct RunRecord {
  ModelConfig cfg;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_valid_nll = std::numeric_limits<double>::quiet_NaN();
  std::optional<Evaluation> test;  // evaluated once, on the restored best parameters
  bool stopped_by_strikes = false;
  std::string checkpoint;  // path, when saved

  double median_epoch_seconds() const {
    if (epochs.empty()) return 0.0;
    std::vector<double> t;
    for (const auto& e : epochs) t.push_back(e.seconds);
    std::sort(t.begin(), t.end());
    const std::size_t h = t.size() / 2;
    return t.size() % 2 ? t[h] : 0.5 * (t[h - 1] + t[h]);
  }
};

struct TrainResult {
  RunRecord record;
  Model model;  // best-validation parameters
};

namespace detail {

inline bool all_finite(const ParamStore& p) {
  for (const auto& e : p.entries())
    for (double g : e.tensor.grad)
      if (!std::isfinite(g)) return false;
  return true;
}

inline std::string describe(const Sequence& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i];
  return os.str();
}

}  // namespace detail

/// Trains from a fresh initialization. Test is evaluated unless `with_test`
/// is false (sweeps evaluate only the selected configs).
inline TrainResult train(const ModelConfig& cfg, const Splits& data, const TrainOptions& opt, bool with_test = true) {
  cfg.validate();
  if (data.train.sequences.empty() || data.valid.sequences.empty())
    throw ConfigError("train: training and validation splits must be nonempty");
  if (with_test && data.test.sequences.empty()) throw ConfigError("train: test split is empty");
  check_alphabet(cfg, data.train);
  check_alphabet(cfg, data.valid);
  if (with_test) check_alphabet(cfg, data.test);
  if (opt.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");

  Model model = Model::create(cfg, opt.init_seed);
  ParamStore best = model.params;
  AdamState adam(opt.adam);
  StrikeCounter strikes(opt.max_strikes);
  std::mt19937_64 shuffle_rng(opt.shuffle_seed);
  std::vector<std::size_t> order(data.train.sequences.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult out{RunRecord{cfg, {}, 0, 0.0, std::nullopt, false, {}}, {}};
  RunRecord& rec = out.record;
  for (std::size_t epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0, nodes = 0.0;
    std::size_t symbols = 0;
    for (std::size_t idx : order) {
      const Sequence& s = data.train.sequences[idx];
      if (s.empty()) continue;
      Tape tape;
      Forward fwd;
      Var loss = sequence_nll_var(s, model.params, cfg, tape, &fwd);
      const double l = tape.scalar(loss);
      tape.backward(loss);
      for (auto& e : model.params.entries()) e.tensor.ensure_grad();
      if (!std::isfinite(l) || !detail::all_finite(model.params))
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) + ", training sequence #" +
                           std::to_string(idx) + " (" + detail::describe(s) + "), loss " + std::to_string(l));
      adam_step(model.params, adam);
      if (fwd.tree) nodes += static_cast<double>(fwd.tree->tree.size());
      total += l * static_cast<double>(s.size());
      symbols += s.size();
    }
    const Evaluation v = evaluate(model.params, cfg, data.valid);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(v.mean_nll)) throw NumericError("non-finite validation NLL at epoch " + std::to_string(epoch));
    const bool stop = strikes.observe(v.mean_nll);
    if (strikes.improved()) best.assign_values(model.params);
    rec.epochs.push_back(EpochRecord{epoch, total / static_cast<double>(symbols), v.mean_nll, strikes.strikes(), secs,
                                     nodes / static_cast<double>(order.size())});
    if (opt.log) {
      const auto& e = rec.epochs.back();
      *opt.log << "epoch " << e.epoch << " train_nll " << e.train_nll << " valid_nll " << e.valid_nll << " strikes "
               << e.strikes << " seconds " << e.seconds << '\n';
    }
    if (stop) {
      rec.stopped_by_strikes = true;
      break;
    }
  }
  rec.best_epoch = strikes.best_epoch();
  rec.best_valid_nll = strikes.best();
  model.params.assign_values(best);
  model.params.zero_grad();
  if (with_test) rec.test = evaluate(model, data.test);
  out.model = std::move(model);
  return out;
}

// ------------------------------------------------------------ records I/O

inline std::string config_summary(const ModelConfig& c) {
  std::ostringstream os;
  os << "kind=" << to_string(c.kind) << " alphabet=" << c.alphabet_size << " dim=" << c.dim;
  if (c.uses_lstm()) os << " lstm_dim=" << c.lstm_hidden() << " lstm_layers=" << c.lstm_layers;
  if (c.uses_motif()) {
    os << " backend=" << to_string(c.backend) << " soft=" << c.soft_select << " decoupled=" << c.decoupled_scorer;
    if (c.backend == Backend::Tree) os << " n_priority=" << c.n_priority << " d_max=" << c.d_max;
    else os << " k_max=" << c.k_max;
  }
  return os.str();
}

/// Line-delimited key=value records: one "run" line, one "epoch" line per
/// epoch, one "result" line.
inline void write_run_record(std::ostream& os, const RunRecord& r) {
  os << std::setprecision(17);
  os << "run " << config_summary(r.cfg) << '\n';
  for (const auto& e : r.epochs)
    os << "epoch epoch=" << e.epoch << " train_nll=" << e.train_nll << " valid_nll=" << e.valid_nll
       << " strikes=" << e.strikes << " seconds=" << e.seconds << '\n';
  os << "result best_epoch=" << r.best_epoch << " best_valid_nll=" << r.best_valid_nll
     << " stopped_by_strikes=" << r.stopped_by_strikes;
  if (r.test) os << " test_nll=" << r.test->mean_nll << " test_se=" << r.test->std_error;
  if (!r.checkpoint.empty()) os << " checkpoint=" << r.checkpoint;
  os << " units=nats\n";
}

inline void write_summary_header(std::ostream& os) {
  os << "kind,dim,lstm_layers,backend,n_priority,soft,decoupled,epochs,best_epoch,valid_nll,test_nll,test_se,"
        "median_epoch_seconds,selected\n";
}

inline void write_summary_row(std::ostream& os, const RunRecord& r, bool selected) {
  os << std::setprecision(10) << to_string(r.cfg.kind) << ',' << r.cfg.dim << ','
     << (r.cfg.uses_lstm() ? r.cfg.lstm_layers : 0) << ',' << to_string(r.cfg.backend) << ',' << r.cfg.n_priority
     << ',' << r.cfg.soft_select << ',' << r.cfg.decoupled_scorer << ',' << r.epochs.size() << ',' << r.best_epoch
     << ',' << r.best_valid_nll << ',';
  if (r.test) os << r.test->mean_nll << ',' << r.test->std_error;
  else os << ',';
  os << ',' << r.median_epoch_seconds() << ',' << (selected ? 1 : 0) << '\n';
}

// ------------------------------------------------------------------ sweep

/// Index of the lowest validation NLL per model kind; ties go to the earlier
/// config.
inline std::map<ModelKind, std::size_t> select_best(const std::vector<RunRecord>& runs) {
  std::map<ModelKind, std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto it = best.find(runs[i].cfg.kind);
    if (it == best.end() || runs[i].best_valid_nll < runs[it->second].best_valid_nll) best[runs[i].cfg.kind] = i;
  }
  return best;
}

/// Warnings for selected configs whose dimension or LSTM depth sits on the
/// edge of the values swept for that kind.
inline std::vector<std::string> boundary_warnings(const std::vector<RunRecord>& runs,
                                                  const std::map<ModelKind, std::size_t>& selected) {
  std::vector<std::string> out;
  for (const auto& [kind, idx] : selected) {
    std::vector<std::size_t> dims, layers;
    for (const auto& r : runs) {
      if (r.cfg.kind != kind) continue;
      dims.push_back(r.cfg.dim);
      if (r.cfg.uses_lstm()) layers.push_back(r.cfg.lstm_layers);
    }
    auto check = [&](std::vector<std::size_t>& v, std::size_t val, const char* what) {
      if (v.empty()) return;
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      if (*lo == *hi) return;
      if (val == *lo || val == *hi)
        out.push_back(std::string("warning: best ") + to_string(kind) + " " + what + " = " + std::to_string(val) +
                      " lies on the sweep boundary [" + std::to_string(*lo) + ", " + std::to_string(*hi) + "]");
    };
    check(dims, runs[idx].cfg.dim, "dimension");
    if (runs[idx].cfg.uses_lstm()) check(layers, runs[idx].cfg.lstm_layers, "lstm_layers");
  }
  return out;
}

struct SweepResult {
  std::vector<RunRecord> runs;
  std::map<ModelKind, std::size_t> selected;
  std::map<ModelKind, Model> models;  // selected models, best-validation parameters
  std::vector<std::string> warnings;
};

/// Trains every config (optionally on `workers` threads, each with its own
/// tapes and parameters), selects by validation NLL, and evaluates the test
/// split for the selected configs only.
inline SweepResult sweep(const std::vector<ModelConfig>& configs, const Splits& data, const TrainOptions& opt,
                         std::size_t workers = 1) {
  if (configs.empty()) throw ConfigError("sweep: no configs");
  std::vector<std::optional<TrainResult>> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  auto run = [&](std::size_t i) {
    try {
      TrainOptions o = opt;
      o.log = workers > 1 ? nullptr : opt.log;
      results[i] = train(configs[i], data, o, false);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, configs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < configs.size(); i += workers) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepResult out;
  for (auto& r : results) out.runs.push_back(r->record);
  out.selected = select_best(out.runs);
  out.warnings = boundary_warnings(out.runs, out.selected);
  for (const auto& [kind, idx] : out.selected) {
    out.runs[idx].test = evaluate(results[idx]->model, data.test);
    out.models.emplace(kind, std::move(results[idx]->model));
  }
  return out;
}

// ------------------------------------------------------------------ bench

struct BenchRow {
  std::size_t n_priority = 0;  // 0: unlimited
  RunRecord record;
  double mean_tree_nodes = 0.0;      // over the test split, restored parameters
  std::optional<double> dense_nll;  // same parameters on the dense backend (unlimited rows)
};

/// Trains the tree backend once per n_priority value and measures test NLL,
/// epoch time and tree size.
inline std::vector<BenchRow> bench_priorities(ModelConfig cfg, const Splits& data, const TrainOptions& opt,
                                              const std::vector<std::size_t>& priorities) {
  if (priorities.empty()) throw ConfigError("bench: n_priority list is empty");
  if (!cfg.uses_motif()) throw ConfigError("bench: model has no motif branch");
  cfg.backend = Backend::Tree;
  std::vector<BenchRow> rows;
  for (std::size_t np : priorities) {
    ModelConfig c = cfg;
    c.n_priority = np;
    TrainResult r = train(c, data, opt);
    BenchRow row{np, r.record, 0.0, std::nullopt};
    double nodes = 0.0;
    for (const auto& s : data.test.sequences) {
      Tape tape;
      const Forward f = run_forward(s, r.model.params, c, tape);
      if (f.tree) nodes += static_cast<double>(f.tree->tree.size());
    }
    row.mean_tree_nodes = nodes / static_cast<double>(data.test.sequences.size());
    if (np == 0) {
      ModelConfig d = c;
      d.backend = Backend::Dense;
      d.k_max = c.d_max;
      row.dense_nll = evaluate(r.model.params, d, data.test).mean_nll;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace motif
