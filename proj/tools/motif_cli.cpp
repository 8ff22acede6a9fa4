// SPDX-License-Identifier: Apache-2.0
// motif: data generation, training, evaluation, sampling, alignment export,
// pruning benchmarks and reference-DP printouts.
//
// Exit codes: 0 success, 1 runtime failure, 2 config or usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "motif/motif.hpp"

namespace fs = std::filesystem;
using namespace motif;

namespace {

// ------------------------------------------------------------ config layer

struct ConfigLayer {
  std::string file;
  std::vector<std::string> sets;       // --set key=value
  std::map<std::string, std::string> flags;  // --key value

  void attach(CLI::App* app) {
    app->add_option("--config", file, "experiment config file (key = value lines)");
    app->add_option("--set", sets, "override: key=value (repeatable)");
    const KeyValues defaults = default_config();
    for (const auto& [k, v] : defaults.items()) {
      std::string names = "--" + k;
      std::string dashed = k;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != k) names += ",--" + dashed;
      app->add_option(names, flags[k], "config key '" + k + "' (default " + v + ")");
    }
  }

  KeyValues resolve(const KeyValues& extra_defaults = {}) const {
    KeyValues kv = default_config().merged(extra_defaults);
    if (!file.empty()) kv = kv.merged(KeyValues::load(file));
    KeyValues over;
    for (const auto& [k, v] : flags)
      if (!v.empty()) over.set(k, v);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      over.set(s.substr(0, eq), s.substr(eq + 1));
    }
    return kv.merged(over);
  }
};

struct DataFlags {
  std::string dir, train, valid, test;

  void attach(CLI::App* app) {
    app->add_option("--data", dir, "directory holding train.txt, valid.txt, test.txt");
    app->add_option("--train", train, "training corpus");
    app->add_option("--valid", valid, "validation corpus");
    app->add_option("--test", test, "test corpus");
  }

  Splits load() const {
    auto pick = [&](const std::string& explicit_path, const char* name) {
      if (!explicit_path.empty()) return explicit_path;
      if (dir.empty()) throw ConfigError(std::string("missing --") + name + " (or --data DIR)");
      return (fs::path(dir) / (std::string(name) + ".txt")).string();
    };
    Splits s{load_corpus(pick(train, "train")), load_corpus(pick(valid, "valid")), load_corpus(pick(test, "test"))};
    const std::size_t a = std::max({s.train.alphabet_size, s.valid.alphabet_size, s.test.alphabet_size});
    s.train.alphabet_size = s.valid.alphabet_size = s.test.alphabet_size = a;
    return s;
  }
};

fs::path prepare_out(const std::string& dir) {
  if (dir.empty()) throw ConfigError("missing --out DIR");
  fs::create_directories(dir);
  return fs::path(dir);
}

void save_resolved(const fs::path& out, KeyValues kv) {
  kv.save((out / "config.txt").string());
}

void save_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

std::string record_text(const RunRecord& r) {
  std::ostringstream os;
  write_run_record(os, r);
  return os.str();
}

Sequence parse_symbols(const std::string& text) {
  std::istringstream is(text);
  Sequence s;
  long v = 0;
  while (is >> v) {
    if (v < 0) throw ConfigError("negative symbol in sequence");
    s.push_back(static_cast<Symbol>(v));
  }
  if (!is.eof()) throw ConfigError("sequence must be whitespace-separated integers");
  return s;
}

// --------------------------------------------------------------- commands

struct GenData {
  std::string process = "uniform", scheme = "loop", out, split;
  std::size_t n = 300;
  std::uint64_t seed = 1, replicate = 0;

  void attach(CLI::App* app) {
    app->add_option("--process", process, "uniform | markov")
        ->check(CLI::IsMember({"uniform", "markov"}));
    app->add_option("--scheme", scheme, "plain | loop | shiftloop | noiseloop | editloop")
        ->check(CLI::IsMember({"plain", "none", "loop", "shiftloop", "noiseloop", "editloop"}));
    app->add_option("--n", n, "number of sequences");
    app->add_option("--seed", seed, "sampling seed");
    app->add_option("--replicate", replicate, "replicate seed (Markov chain draw)");
    app->add_option("--split", split, "split name recorded in the header");
    app->add_option("--out", out, "output corpus file (stdout if omitted)");
  }

  int run() const {
    const ToyProcess proc = ToyProcess::make(parse_process(process), replicate);
    Corpus c = gen(proc, parse_scheme(scheme), n, seed);
    c.split = split;
    if (out.empty()) {
      write_corpus(std::cout, c);
      return 0;
    }
    const fs::path p(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    save_corpus(out, c);
    KeyValues kv({{"process", process}, {"scheme", scheme}, {"n", std::to_string(n)}, {"seed", std::to_string(seed)},
                  {"replicate", std::to_string(replicate)}, {"split", split}});
    kv.save(out + ".config.txt");
    return 0;
  }
};

struct TrainCmd {
  ConfigLayer cfg;
  DataFlags data;
  std::string out;
  bool quiet = false;

  void attach(CLI::App* app) {
    cfg.attach(app);
    data.attach(app);
    app->add_option("--out", out, "output directory")->required();
    app->add_flag("--quiet", quiet, "no per-epoch log");
  }

  int run() const {
    const KeyValues kv = cfg.resolve();
    const Splits d = data.load();
    const ModelConfig mc = model_config(kv, d.train.alphabet_size);
    TrainOptions opt = train_options(kv);
    if (!quiet) opt.log = &std::cerr;
    const fs::path dir = prepare_out(out);
    save_resolved(dir, kv);
    TrainResult r = train(mc, d, opt);
    r.record.checkpoint = (dir / "model.ckpt").string();
    save_model(r.record.checkpoint, r.model);
    save_text(dir / "run.txt", record_text(r.record));
    std::cout << std::setprecision(6) << "best_epoch " << r.record.best_epoch << " valid_nll "
              << r.record.best_valid_nll << " test_nll " << r.record.test->mean_nll << " +- "
              << r.record.test->std_error << " nats/symbol\n";
    return 0;
  }
};

struct EvalCmd {
  std::string checkpoint, corpus, out;

  void attach(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    app->add_option("--corpus", corpus, "corpus to score")->required();
    app->add_option("--out", out, "optional output directory");
  }

  int run() const {
    const Model m = load_model(checkpoint);
    const Corpus c = load_corpus(corpus);
    const Evaluation e = evaluate(m, c);
    std::ostringstream os;
    os << std::setprecision(10) << "nll " << e.mean_nll << " se " << e.std_error << " symbols " << e.symbols
       << " sequences " << e.sequences << " units=nats\n";
    std::cout << os.str();
    if (!out.empty()) {
      const fs::path dir = prepare_out(out);
      save_text(dir / "eval.txt", os.str());
      KeyValues({{"checkpoint", checkpoint}, {"corpus", corpus}}).save((dir / "config.txt").string());
    }
    return 0;
  }
};

struct SweepCmd {
  ConfigLayer cfg;
  DataFlags data;
  std::string out, models = "motifnet,lstm", dims, layers;
  std::size_t workers = 1;

  void attach(CLI::App* app) {
    cfg.attach(app);
    data.attach(app);
    app->add_option("--out", out, "output directory")->required();
    app->add_option("--models", models, "comma-separated model kinds");
    app->add_option("--dims", dims, "comma-separated dimensions (default: dim)");
    app->add_option("--layers", layers, "comma-separated LSTM depths (default: lstm_layers)");
    app->add_option("--workers", workers, "parallel training threads")->check(CLI::PositiveNumber);
  }

  int run() const {
    KeyValues extra({{"models", models}});
    KeyValues kv = cfg.resolve(extra);
    if (!dims.empty()) kv.set("dims", dims);
    if (!layers.empty()) kv.set("layers", layers);
    const Splits d = data.load();
    const auto dim_list = kv.counts("dims", {kv.count("dim", 8)});
    const auto layer_list = kv.counts("layers", {kv.count("lstm_layers", 1)});
    kv.set("workers", std::to_string(workers));

    std::vector<ModelConfig> configs;
    std::stringstream ms(kv.str("models"));
    std::string kind;
    while (std::getline(ms, kind, ',')) {
      KeyValues k = kv;
      k.set("model", kind);
      for (std::size_t dim : dim_list) {
        k.set("dim", std::to_string(dim));
        const ModelKind mk = parse_model_kind(kind);
        const std::vector<std::size_t> ls = mk == ModelKind::MotifNet ? std::vector<std::size_t>{1} : layer_list;
        for (std::size_t l : ls) {
          k.set("lstm_layers", std::to_string(l));
          configs.push_back(model_config(k, d.train.alphabet_size));
        }
      }
    }
    const TrainOptions opt = train_options(kv);
    const fs::path dir = prepare_out(out);
    save_resolved(dir, kv);
    SweepResult r = sweep(configs, d, opt, workers);

    std::ostringstream csv, runs;
    write_summary_header(csv);
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      bool sel = false;
      for (const auto& [k, idx] : r.selected) sel = sel || idx == i;
      write_summary_row(csv, r.runs[i], sel);
      write_run_record(runs, r.runs[i]);
    }
    for (auto& [k, m] : r.models) save_model((dir / ("model_" + std::string(to_string(k)) + ".ckpt")).string(), m);
    save_text(dir / "summary.csv", csv.str());
    save_text(dir / "runs.txt", runs.str());
    std::cout << csv.str();
    for (const auto& w : r.warnings) std::cerr << w << '\n';
    return 0;
  }
};

struct SampleCmd {
  std::string checkpoint, out;
  std::size_t length = 12, count = 1;
  std::uint64_t seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    app->add_option("--length", length, "symbols per sequence");
    app->add_option("--count", count, "number of sequences");
    app->add_option("--seed", seed, "sampling seed");
    app->add_option("--out", out, "output corpus file (stdout if omitted)");
  }

  int run() const {
    if (length < 1) throw ConfigError("sample: --length must be >= 1");
    Model m = load_model(checkpoint);
    Corpus c;
    c.alphabet_size = m.cfg.alphabet_size;
    c.split = "sample";
    c.seed = seed;
    for (std::size_t i = 0; i < count; ++i) c.sequences.push_back(sample_sequence(m, length, seed + i));
    if (out.empty()) {
      write_corpus(std::cout, c);
      return 0;
    }
    save_corpus(out, c);
    KeyValues({{"checkpoint", checkpoint}, {"length", std::to_string(length)}, {"count", std::to_string(count)},
               {"seed", std::to_string(seed)}})
        .save(out + ".config.txt");
    return 0;
  }
};

struct VizCmd {
  std::string checkpoint, sequence, corpus, out;
  std::size_t index = 0;

  void attach(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    app->add_option("--sequence", sequence, "whitespace-separated symbols");
    app->add_option("--corpus", corpus, "take the sequence from this corpus");
    app->add_option("--index", index, "0-based sequence index in --corpus");
    app->add_option("--out", out, "output directory")->required();
  }

  int run() const {
    Model m = load_model(checkpoint);
    if (!m.cfg.uses_motif()) throw ConfigError("viz-align: model has no alignment weights");
    Sequence s;
    if (!sequence.empty()) {
      s = parse_symbols(sequence);
    } else if (!corpus.empty()) {
      const Corpus c = load_corpus(corpus);
      if (index >= c.sequences.size()) throw ConfigError("viz-align: --index out of range");
      s = c.sequences[index];
    } else {
      throw ConfigError("viz-align: give --sequence or --corpus");
    }
    if (s.empty()) throw ConfigError("viz-align: empty sequence");
    for (Symbol x : s)
      if (static_cast<std::size_t>(x) >= m.cfg.alphabet_size) throw ConfigError("viz-align: symbol outside alphabet");
    Tape tape;
    const Forward f = run_forward(s, m.params, m.cfg, tape);
    const auto M = alignment_matrix(f.ctx, s.size());
    const fs::path dir = prepare_out(out);
    std::ofstream csv(dir / "alignment.csv"), pgm(dir / "alignment.pgm", std::ios::binary);
    write_alignment_csv(csv, M, s);
    write_alignment_pgm(pgm, M);
    std::ostringstream seq;
    for (std::size_t i = 0; i < s.size(); ++i) seq << (i ? " " : "") << s[i];
    KeyValues({{"checkpoint", checkpoint}, {"sequence", seq.str()}}).save((dir / "config.txt").string());
    return 0;
  }
};

struct BenchCmd {
  ConfigLayer cfg;
  DataFlags data;
  std::string out, priorities = "2,4,8,16,32";

  void attach(CLI::App* app) {
    cfg.attach(app);
    data.attach(app);
    app->add_option("--priorities", priorities, "comma-separated n_priority values (0 = unlimited)");
    app->add_option("--out", out, "output directory")->required();
  }

  int run() const {
    KeyValues kv = cfg.resolve();
    kv.set("priorities", priorities);
    kv.set("backend", "tree");
    const Splits d = data.load();
    const ModelConfig mc = model_config(kv, d.train.alphabet_size);
    const TrainOptions opt = train_options(kv);
    const fs::path dir = prepare_out(out);
    save_resolved(dir, kv);
    const auto rows = bench_priorities(mc, d, opt, kv.counts("priorities", {}));
    std::ostringstream os;
    os << std::setprecision(10) << "n_priority,test_nll,test_se,median_epoch_seconds,mean_tree_nodes,epochs,dense_nll\n";
    for (const auto& r : rows) {
      os << (r.n_priority ? std::to_string(r.n_priority) : std::string("inf")) << ',' << r.record.test->mean_nll << ','
         << r.record.test->std_error << ',' << r.record.median_epoch_seconds() << ',' << r.mean_tree_nodes << ','
         << r.record.epochs.size() << ',';
      if (r.dense_nll) os << *r.dense_nll;
      os << '\n';
    }
    save_text(dir / "bench.csv", os.str());
    std::cout << os.str();
    return 0;
  }
};

struct DpCmd {
  std::string pattern = "GATC", text = "GATCGTCGATC", mode = "sellers";

  void attach(CLI::App* app) {
    app->add_option("--pattern", pattern, "pattern (letters)");
    app->add_option("--text", text, "text (letters)");
    app->add_option("--mode", mode, "sellers | edit | self")->check(CLI::IsMember({"sellers", "edit", "self"}));
  }

  static void check_letters(const std::string& s) {
    for (char c : s)
      if (c < 'A' || c > 'Z') throw ConfigError("dp: sequences are upper-case letters");
  }

  int run() const {
    check_letters(pattern);
    check_letters(text);
    const Sequence P = from_letters(pattern), T = from_letters(text);
    const auto unit = unit_costs<int>();
    if (mode == "edit") {
      std::cout << edit_distance(P, T, unit) << '\n';
      return 0;
    }
    if (mode == "self") {
      if (T.empty()) throw ConfigError("dp: empty text");
      const auto D = self_match_tensor(T, unit);
      for (std::size_t i = 1; i <= T.size(); ++i)
        for (std::size_t k = 1; k <= i; ++k) {
          std::cout << "i=" << i << " k=" << k << ':';
          for (std::size_t j = 1; j <= i; ++j) std::cout << ' ' << D.at(i, j, k);
          std::cout << '\n';
        }
      return 0;
    }
    const auto M = sellers_matrix(P, T, unit);
    std::cout << "    ";
    for (char c : text) std::cout << ' ' << c;
    std::cout << '\n';
    for (std::size_t i = 0; i < M.rows; ++i) {
      std::cout << (i ? pattern[i - 1] : ' ') << ' ';
      for (std::size_t j = 0; j < M.cols; ++j) std::cout << ' ' << M(i, j);
      std::cout << '\n';
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MotifNet sequence models: data, training, evaluation and diagnostics"};
  app.require_subcommand(1);

  GenData gen_data;
  TrainCmd train_cmd;
  EvalCmd eval_cmd;
  SweepCmd sweep_cmd;
  SampleCmd sample_cmd;
  VizCmd viz_cmd;
  BenchCmd bench_cmd;
  DpCmd dp_cmd;

  std::vector<std::pair<CLI::App*, std::function<int()>>> subs;
  auto add = [&](auto& cmd, const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    cmd.attach(s);
    subs.emplace_back(s, [&cmd] { return cmd.run(); });
  };
  add(gen_data, "gen-data", "generate a toy corpus");
  add(train_cmd, "train", "train one model with early stopping");
  add(eval_cmd, "eval", "score a corpus with a checkpoint");
  add(sweep_cmd, "sweep", "train a grid of configs and select by validation NLL");
  add(sample_cmd, "sample", "ancestral sampling from a checkpoint");
  add(viz_cmd, "viz-align", "export the alignment heatmap of one sequence");
  add(bench_cmd, "bench", "accuracy and speed across n_priority values");
  add(dp_cmd, "dp", "reference dynamic-programming printouts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    for (const auto& [s, fn] : subs)
      if (s->parsed()) std::cerr << s->help();
    return 2;
  }

  for (const auto& [s, fn] : subs) {
    if (!s->parsed()) continue;
    try {
      return fn();
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n\n" << s->help();
      return 2;
    } catch (const ParseError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}
