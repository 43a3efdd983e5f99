#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kc/types.hpp"

namespace kc {

using Clause = std::vector<Literal>;

struct Cnf {
  Var var_count = 0;
  std::vector<Clause> clauses;

  /// Throws std::invalid_argument when a literal falls outside var_count.
  void validate() const;
  bool satisfied_by(const Term& x) const;
};

Cnf parse_dimacs(std::istream& in);
Cnf parse_dimacs_string(std::string_view text);
/// Writes `p cnf` plus clauses in stored order.
void write_dimacs(std::ostream& out, const Cnf& cnf);
std::string to_dimacs(const Cnf& cnf);

/// Weights file: `c` comments, then lines `<literal> <weight>`.
WeightMap parse_weights(std::istream& in, Var var_count);
void write_weights(std::ostream& out, const WeightMap& w, Var var_count);

}  // namespace kc
