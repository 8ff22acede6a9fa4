// SPDX-License-Identifier: Apache-2.0
// Sellers matching of GATC against GATCGTCGATC with unit costs. The bottom
// row is zero exactly where a suffix of the text ends in an exact match.

#include <iostream>

#include "motif/reference_dp.hpp"

int main() {
  const std::string pattern = "GATC", text = "GATCGTCGATC";
  const auto M = motif::sellers_matrix(motif::from_letters(pattern), motif::from_letters(text), motif::unit_costs<int>());
  std::cout << "    ";
  for (char c : text) std::cout << ' ' << c;
  std::cout << '\n';
  for (std::size_t i = 0; i < M.rows; ++i) {
    std::cout << (i ? pattern[i - 1] : ' ') << ' ';
    for (std::size_t j = 0; j < M.cols; ++j) std::cout << ' ' << M(i, j);
    std::cout << '\n';
  }
  std::cout << "matches end at text positions:";
  for (std::size_t j = 1; j < M.cols; ++j)
    if (M(M.rows - 1, j) == 0) std::cout << ' ' << j;
  std::cout << '\n';
}
