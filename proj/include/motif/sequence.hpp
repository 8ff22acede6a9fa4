// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace motif {

using Symbol = int;
using Sequence = std::vector<Symbol>;

/// Maps 'A'.. to 0.. so literal strings can serve as test sequences.
inline Sequence from_letters(std::string_view s) {
  Sequence out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<Symbol>(c - 'A'));
  return out;
}

}  // namespace motif
