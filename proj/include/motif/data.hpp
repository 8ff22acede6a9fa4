// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic toy corpora and the plain-text corpus format.
//
// Format: optional header lines "#alphabet N", "#split NAME", "#seed S",
// then one sequence per line as space-separated decimal symbols. Blank lines
// are ignored.
//
// All randomness comes from std::mt19937_64. Process parameters (the Markov
// chain) depend only on the replicate seed, sequences only on the sampling
// seed, so train/valid/test splits of one replicate share a process.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "motif/errors.hpp"
#include "motif/sequence.hpp"

namespace motif {

inline constexpr std::size_t kBaseAlphabet = 12;
inline constexpr std::size_t kToyLength = 12;
inline constexpr std::size_t kMotifLength = 4;
inline constexpr double kNoiseProbability = 0.15;

enum class ProcessKind { Uniform, Markov };
enum class SchemeKind { Plain, Loop, ShiftLoop, NoiseLoop, EditLoop };

inline ProcessKind parse_process(const std::string& s) {
  if (s == "uniform") return ProcessKind::Uniform;
  if (s == "markov") return ProcessKind::Markov;
  throw ConfigError("unknown process: " + s);
}

inline SchemeKind parse_scheme(const std::string& s) {
  if (s == "plain" || s == "none") return SchemeKind::Plain;
  if (s == "loop") return SchemeKind::Loop;
  if (s == "shiftloop") return SchemeKind::ShiftLoop;
  if (s == "noiseloop") return SchemeKind::NoiseLoop;
  if (s == "editloop") return SchemeKind::EditLoop;
  throw ConfigError("unknown scheme: " + s);
}

inline const char* to_string(ProcessKind p) { return p == ProcessKind::Uniform ? "uniform" : "markov"; }
inline const char* to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::Plain: return "plain";
    case SchemeKind::Loop: return "loop";
    case SchemeKind::ShiftLoop: return "shiftloop";
    case SchemeKind::NoiseLoop: return "noiseloop";
    case SchemeKind::EditLoop: return "editloop";
  }
  return "?";
}

/// Output alphabet size: shifted loops are not wrapped, so they reach 11 + 11.
inline std::size_t scheme_alphabet(SchemeKind s) { return s == SchemeKind::ShiftLoop ? 2 * kBaseAlphabet - 1 : kBaseAlphabet; }

struct ToyProcess {
  ProcessKind kind = ProcessKind::Uniform;
  std::vector<double> initial;                  // markov only
  std::vector<std::vector<double>> transition;  // markov only, rows sum to 1

  static ToyProcess uniform() { return {}; }

  /// Initial distribution and transition rows drawn from the flat Dirichlet.
  static ToyProcess markov(std::uint64_t replicate_seed) {
    std::mt19937_64 rng(replicate_seed);
    std::exponential_distribution<double> e(1.0);
    auto simplex = [&] {
      std::vector<double> v(kBaseAlphabet);
      double s = 0.0;
      for (auto& x : v) s += (x = e(rng));
      for (auto& x : v) x /= s;
      return v;
    };
    ToyProcess p;
    p.kind = ProcessKind::Markov;
    p.initial = simplex();
    for (std::size_t r = 0; r < kBaseAlphabet; ++r) p.transition.push_back(simplex());
    return p;
  }

  static ToyProcess make(ProcessKind k, std::uint64_t replicate_seed) {
    return k == ProcessKind::Uniform ? uniform() : markov(replicate_seed);
  }

  Sequence draw(std::size_t length, std::mt19937_64& rng) const {
    Sequence s;
    s.reserve(length);
    std::uniform_int_distribution<int> u(0, static_cast<int>(kBaseAlphabet) - 1);
    for (std::size_t t = 0; t < length; ++t) {
      if (kind == ProcessKind::Uniform) {
        s.push_back(u(rng));
      } else {
        const auto& p = t == 0 ? initial : transition[static_cast<std::size_t>(s.back())];
        s.push_back(pick(p, rng));
      }
    }
    return s;
  }

 private:
  static Symbol pick(const std::vector<double>& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (r < acc) return static_cast<Symbol>(i);
    }
    return static_cast<Symbol>(p.size() - 1);
  }
};

struct Corpus {
  std::vector<Sequence> sequences;
  std::size_t alphabet_size = 0;
  std::string split;  // "train", "valid", "test", or empty
  std::optional<std::uint64_t> seed;

  std::size_t symbol_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
  }
};

/// One draw of the given scheme.
inline Sequence generate_one(const ToyProcess& proc, SchemeKind scheme, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> base(0, static_cast<int>(kBaseAlphabet) - 1);
  std::bernoulli_distribution noise(kNoiseProbability), coin(0.5);
  if (scheme == SchemeKind::Plain) return proc.draw(kToyLength, rng);
  const Sequence motif = proc.draw(kMotifLength, rng);
  const std::size_t reps = kToyLength / kMotifLength;
  Sequence s;
  for (std::size_t r = 0; r < reps; ++r) {
    const int shift = (scheme == SchemeKind::ShiftLoop && r > 0) ? base(rng) : 0;
    for (Symbol m : motif) s.push_back(m + shift);
  }
  if (scheme == SchemeKind::NoiseLoop) {
    for (auto& x : s)
      if (noise(rng)) x = base(rng);
  } else if (scheme == SchemeKind::EditLoop) {
    Sequence e;
    for (Symbol x : s) {
      if (!noise(rng)) {
        e.push_back(x);
      } else if (coin(rng)) {
        // delete x
      } else {
        e.push_back(x);
        e.push_back(base(rng));
      }
    }
    s = std::move(e);
  }
  return s;
}

/// n sequences of (process, scheme). Empty edited sequences are redrawn.
inline Corpus gen(const ToyProcess& proc, SchemeKind scheme, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen: n must be >= 1");
  std::mt19937_64 rng(seed);
  Corpus c;
  c.alphabet_size = scheme_alphabet(scheme);
  c.seed = seed;
  c.sequences.reserve(n);
  while (c.sequences.size() < n) {
    Sequence s = generate_one(proc, scheme, rng);
    if (!s.empty()) c.sequences.push_back(std::move(s));
  }
  return c;
}

inline void write_corpus(std::ostream& os, const Corpus& c) {
  os << "#alphabet " << c.alphabet_size << '\n';
  if (!c.split.empty()) os << "#split " << c.split << '\n';
  if (c.seed) os << "#seed " << *c.seed << '\n';
  for (const auto& s : c.sequences) {
    for (std::size_t t = 0; t < s.size(); ++t) os << (t ? " " : "") << s[t];
    os << '\n';
  }
}

inline Corpus read_corpus(std::istream& is) {
  Corpus c;
  std::optional<std::size_t> declared;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "alphabet") {
        long long v = 0;
        if (!(hs >> v) || v < 1) throw ParseError("bad #alphabet header", line_no);
        declared = static_cast<std::size_t>(v);
      } else if (key == "split") {
        hs >> c.split;
      } else if (key == "seed") {
        std::uint64_t v = 0;
        if (hs >> v) c.seed = v;
      }
      continue;
    }
    std::istringstream ls(line);
    Sequence s;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      long long v = -1;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 0) throw ParseError("malformed symbol '" + tok + "'", line_no);
      if (declared && static_cast<std::size_t>(v) >= *declared)
        throw ParseError("symbol " + tok + " not below alphabet size " + std::to_string(*declared), line_no);
      s.push_back(static_cast<Symbol>(v));
    }
    c.sequences.push_back(std::move(s));
  }
  if (c.sequences.empty()) throw ParseError("corpus contains no sequences", 0);
  if (declared) {
    c.alphabet_size = *declared;
  } else {
    Symbol mx = 0;
    for (const auto& s : c.sequences)
      for (Symbol x : s) mx = std::max(mx, x);
    c.alphabet_size = static_cast<std::size_t>(mx) + 1;
  }
  return c;
}

inline void save_corpus(const std::string& path, const Corpus& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write corpus: " + path);
  write_corpus(os, c);
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read corpus: " + path);
  return read_corpus(is);
}

}  // namespace motif
