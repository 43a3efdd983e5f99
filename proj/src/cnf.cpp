#include "kc/cnf.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace kc {

void WeightMap::set(Literal l, double w) {
  if (!std::isfinite(w) || w < 0) throw std::invalid_argument("literal weights must be finite and nonnegative");
  if (l.index() >= weights_.size()) weights_.resize(2 * (static_cast<std::size_t>(l.var()) + 1), 1.0);
  weights_[l.index()] = w;
}

WeightMap WeightMap::restricted(const Term& t) const {
  WeightMap out = *this;
  for (Literal l : t.literals()) out.set(~l, 0.0);
  return out;
}

void Cnf::validate() const {
  for (const auto& clause : clauses)
    for (Literal l : clause)
      if (l.var() == 0 || l.var() > var_count)
        throw std::invalid_argument("literal " + std::to_string(l.dimacs()) + " out of range");
}

bool Cnf::satisfied_by(const Term& x) const {
  for (const auto& clause : clauses) {
    bool sat = false;
    for (Literal l : clause)
      if (x.at(l.var()) == l.positive()) {
        sat = true;
        break;
      }
    if (!sat) return false;
  }
  return true;
}

Cnf parse_dimacs(std::istream& in) {
  Cnf cnf;
  std::string line;
  bool have_header = false;
  long declared_clauses = 0;
  Clause current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c" || tok[0] == 'c' || tok == "%") continue;
    if (tok == "p") {
      std::string fmt;
      long v = -1, c = -1;
      if (have_header || !(ls >> fmt >> v >> c) || fmt != "cnf" || v < 0 || c < 0)
        throw ParseError("line " + std::to_string(line_no) + ": malformed DIMACS header");
      cnf.var_count = static_cast<Var>(v);
      declared_clauses = c;
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError("line " + std::to_string(line_no) + ": clause before `p cnf` header");
    ls.clear();
    ls.seekg(0);
    long lit;
    while (ls >> lit) {
      if (lit == 0) {
        cnf.clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      if (static_cast<unsigned long>(std::labs(lit)) > cnf.var_count)
        throw ParseError("line " + std::to_string(line_no) + ": literal " + std::to_string(lit) + " out of range");
      current.push_back(Literal::from_dimacs(static_cast<std::int32_t>(lit)));
    }
    if (!ls.eof()) throw ParseError("line " + std::to_string(line_no) + ": unexpected token");
  }
  if (!have_header) throw ParseError("missing `p cnf` header");
  if (!current.empty()) throw ParseError("last clause is missing its 0 terminator");
  if (static_cast<long>(cnf.clauses.size()) != declared_clauses)
    throw ParseError("header declares " + std::to_string(declared_clauses) + " clauses but " +
                     std::to_string(cnf.clauses.size()) + " were read");
  return cnf;
}

Cnf parse_dimacs_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

void write_dimacs(std::ostream& out, const Cnf& cnf) {
  out << "p cnf " << cnf.var_count << ' ' << cnf.clauses.size() << '\n';
  for (const auto& clause : cnf.clauses) {
    for (Literal l : clause) out << l.dimacs() << ' ';
    out << "0\n";
  }
}

std::string to_dimacs(const Cnf& cnf) {
  std::ostringstream out;
  write_dimacs(out, cnf);
  return out.str();
}

WeightMap parse_weights(std::istream& in, Var var_count) {
  WeightMap w(var_count);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == 'c') continue;
    long lit = 0;
    double weight = 0;
    try {
      std::size_t pos = 0;
      lit = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("weights line " + std::to_string(line_no) + ": bad literal `" + tok + "`");
    }
    if (!(ls >> weight) || lit == 0 || static_cast<unsigned long>(std::labs(lit)) > var_count)
      throw ParseError("weights line " + std::to_string(line_no) + ": expected `<literal> <weight>`");
    try {
      w.set(Literal::from_dimacs(static_cast<std::int32_t>(lit)), weight);
    } catch (const std::invalid_argument& e) {
      throw ParseError("weights line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return w;
}

void write_weights(std::ostream& out, const WeightMap& w, Var var_count) {
  out.precision(17);
  for (Var v = 1; v <= var_count; ++v) {
    out << static_cast<long>(v) << ' ' << w[Literal(v, true)] << '\n';
    out << -static_cast<long>(v) << ' ' << w[Literal(v, false)] << '\n';
  }
}

}  // namespace kc
