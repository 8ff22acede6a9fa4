// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration as "key = value" text, one entry per line, with
// '#' comments. Layers merge in order defaults < file < flags; the resolved
// layer is written next to every run's outputs.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "motif/errors.hpp"
#include "motif/modules.hpp"
#include "motif/training.hpp"

namespace motif {

class KeyValues {
 public:
  using Map = std::map<std::string, std::string>;

  KeyValues() = default;
  explicit KeyValues(Map m) : map_(std::move(m)) {}

  static KeyValues parse(std::istream& is) {
    KeyValues kv;
    std::string line;
    std::size_t no = 0;
    while (std::getline(is, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected key = value", no);
      const std::string k = trim(t.substr(0, eq)), v = trim(t.substr(eq + 1));
      if (k.empty()) throw ParseError("empty key", no);
      kv.map_[k] = v;
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path);
    return parse(is);
  }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : map_) os << k << " = " << v << '\n';
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write config: " + path);
    write(os);
  }

  /// Entries of `over` replace ours.
  KeyValues merged(const KeyValues& over) const {
    KeyValues out = *this;
    for (const auto& [k, v] : over.map_) out.map_[k] = v;
    return out;
  }

  void set(const std::string& k, const std::string& v) { map_[k] = v; }
  bool has(const std::string& k) const { return map_.contains(k); }
  const Map& items() const { return map_; }

  std::string str(const std::string& k, const std::string& def = {}) const {
    auto it = map_.find(k);
    return it == map_.end() ? def : it->second;
  }
  double num(const std::string& k, double def) const {
    auto it = map_.find(k);
    if (it == map_.end()) return def;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + k + "' expects a number, got '" + it->second + "'");
  }
  std::size_t count(const std::string& k, std::size_t def) const {
    const double v = num(k, static_cast<double>(def));
    if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
      throw ConfigError("config key '" + k + "' expects a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  bool flag(const std::string& k, bool def) const {
    const std::string v = str(k, def ? "true" : "false");
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + k + "' expects a boolean, got '" + v + "'");
  }
  /// Comma-separated integers.
  std::vector<std::size_t> counts(const std::string& k, const std::vector<std::size_t>& def) const {
    if (!has(k)) return def;
    std::vector<std::size_t> out;
    std::stringstream ss(str(k));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      KeyValues one;
      one.set(k, trim(tok));
      out.push_back(one.count(k, 0));
    }
    if (out.empty()) throw ConfigError("config key '" + k + "' expects a nonempty list");
    return out;
  }

 private:
  Map map_;

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
};

/// Defaults for every recognized key, so the resolved config is complete.
inline KeyValues default_config() {
  const ModelConfig m;
  const TrainOptions t;
  std::ostringstream lr;
  lr << t.adam.lr;
  return KeyValues({{"model", "motifnet"},
                    {"dim", std::to_string(m.dim)},
                    {"out_dim", "0"},
                    {"lstm_dim", "0"},
                    {"lstm_layers", std::to_string(m.lstm_layers)},
                    {"alpha", "0.01"},
                    {"delta", "0.5"},
                    {"soft_select", "false"},
                    {"decoupled_scorer", "false"},
                    {"soft_temperature", "1"},
                    {"backend", "dense"},
                    {"k_max", "0"},
                    {"n_priority", "0"},
                    {"d_max", std::to_string(m.d_max)},
                    {"lr", lr.str()},
                    {"beta1", "0.9"},
                    {"beta2", "0.999"},
                    {"eps", "1e-08"},
                    {"max_strikes", std::to_string(t.max_strikes)},
                    {"max_epochs", std::to_string(t.max_epochs)},
                    {"seed", "1"}});
}

/// Model config from resolved keys; the alphabet comes from the data.
inline ModelConfig model_config(const KeyValues& kv, std::size_t alphabet) {
  ModelConfig c;
  c.kind = parse_model_kind(kv.str("model", "motifnet"));
  c.alphabet_size = alphabet;
  c.dim = kv.count("dim", c.dim);
  c.out_dim = kv.count("out_dim", c.out_dim);
  c.lstm_dim = kv.count("lstm_dim", c.lstm_dim);
  c.lstm_layers = kv.count("lstm_layers", c.lstm_layers);
  c.alpha = kv.num("alpha", c.alpha);
  c.delta = kv.num("delta", c.delta);
  c.soft_select = kv.flag("soft_select", c.soft_select);
  c.decoupled_scorer = kv.flag("decoupled_scorer", c.decoupled_scorer);
  c.soft_temperature = kv.num("soft_temperature", c.soft_temperature);
  c.backend = parse_backend(kv.str("backend", "dense"));
  c.k_max = kv.count("k_max", c.k_max);
  c.n_priority = kv.count("n_priority", c.n_priority);
  c.d_max = kv.count("d_max", c.d_max);
  c.validate();
  return c;
}

/// Training options from resolved keys. "seed" drives initialization and
/// shuffling.
inline TrainOptions train_options(const KeyValues& kv) {
  TrainOptions t;
  t.adam.lr = kv.num("lr", t.adam.lr);
  t.adam.beta1 = kv.num("beta1", t.adam.beta1);
  t.adam.beta2 = kv.num("beta2", t.adam.beta2);
  t.adam.eps = kv.num("eps", t.adam.eps);
  t.max_strikes = kv.count("max_strikes", t.max_strikes);
  t.max_epochs = kv.count("max_epochs", t.max_epochs);
  const std::uint64_t seed = kv.count("seed", 1);
  t.init_seed = seed * 2 + 1;
  t.shuffle_seed = seed * 2 + 2;
  if (t.max_strikes < 1) throw ConfigError("max_strikes must be >= 1");
  if (t.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(t.adam.lr > 0)) throw ConfigError("lr must be positive");
  return t;
}

}  // namespace motif
