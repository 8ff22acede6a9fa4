// SPDX-License-Identifier: Apache-2.0
// Trains a small MotifNet on Markov edit-loops and prints the alignment
// heatmap of one test sequence as text. Writes alignment.csv/.pgm to the
// working directory.
//
//   demo_loop_alignment [epochs=6] [dim=8]

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "motif/motif.hpp"

using namespace motif;

int main(int argc, char** argv) {
  const std::size_t epochs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 6;
  const std::size_t dim = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;

  const ToyProcess proc = ToyProcess::markov(3);
  const Splits data{gen(proc, SchemeKind::EditLoop, 200, 1), gen(proc, SchemeKind::EditLoop, 100, 2),
                    gen(proc, SchemeKind::EditLoop, 100, 3)};
  ModelConfig cfg;
  cfg.alphabet_size = kBaseAlphabet;
  cfg.dim = dim;
  TrainOptions opt;
  opt.adam.lr = 1e-2;
  opt.max_epochs = epochs;
  opt.log = &std::cout;
  TrainResult r = train(cfg, data, opt);
  std::cout << "test nll " << r.record.test->mean_nll << " nats/symbol\n\n";

  const Sequence& s = data.test.sequences.front();
  Tape tape;
  const Forward f = run_forward(s, r.model.params, cfg, tape);
  const auto M = alignment_matrix(f.ctx, s.size());
  const char* shades = " .:-=+*#%@";
  std::cout << "    ";
  for (Symbol x : s) std::cout << std::hex << x;
  std::cout << std::dec << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::cout << (i + 1 < 10 ? " " : "") << (i + 1) << ' ' << std::hex << s[i] << std::dec;
    for (double v : M[i]) std::cout << shades[static_cast<int>(v * 9.0 + 0.5)];
    std::cout << '\n';
  }
  std::ofstream csv("alignment.csv"), pgm("alignment.pgm", std::ios::binary);
  write_alignment_csv(csv, M, s);
  write_alignment_pgm(pgm, M);
}
