#pragma once

// Shared vocabulary: variables, literals, partial assignments, literal
// weights and the error hierarchy used across the library.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace kc {

using Var = std::uint32_t;
using BigInt = boost::multiprecision::cpp_int;

/// DIMACS-style signed literal: +v is the positive literal of variable v.
class Literal {
public:
  constexpr Literal() = default;
  constexpr Literal(Var v, bool positive)
      : code_(positive ? static_cast<std::int32_t>(v) : -static_cast<std::int32_t>(v)) {}

  static constexpr Literal from_dimacs(std::int32_t code) {
    Literal l;
    l.code_ = code;
    return l;
  }

  constexpr Var var() const { return static_cast<Var>(code_ < 0 ? -code_ : code_); }
  constexpr bool positive() const { return code_ > 0; }
  constexpr std::int32_t dimacs() const { return code_; }
  constexpr Literal operator~() const { return from_dimacs(-code_); }

  /// Dense index 2v or 2v+1, for tables indexed by literal.
  constexpr std::size_t index() const { return 2 * static_cast<std::size_t>(var()) + (positive() ? 0 : 1); }

  friend constexpr bool operator==(Literal a, Literal b) = default;
  friend constexpr auto operator<=>(Literal a, Literal b) {
    if (a.var() != b.var()) return a.var() <=> b.var();
    return b.positive() <=> a.positive();
  }

private:
  std::int32_t code_ = 0;
};

/// Partial (or complete) assignment over variables 1..var_count.
class Term {
public:
  Term() = default;
  explicit Term(Var var_count) : values_(static_cast<std::size_t>(var_count) + 1, kUnbound) {}

  /// Complete assignment whose bit i-1 of `bits` gives variable i.
  static Term from_bits(Var var_count, std::uint64_t bits) {
    Term t(var_count);
    for (Var v = 1; v <= var_count; ++v) t.set(v, (bits >> (v - 1)) & 1U);
    return t;
  }

  Var var_count() const { return values_.empty() ? 0 : static_cast<Var>(values_.size() - 1); }

  void set(Var v, bool value) {
    grow(v);
    values_[v] = value ? 1 : 0;
  }
  void set(Literal l) { set(l.var(), l.positive()); }
  void unset(Var v) {
    if (v < values_.size()) values_[v] = kUnbound;
  }

  bool bound(Var v) const { return v < values_.size() && values_[v] != kUnbound; }
  std::optional<bool> get(Var v) const {
    if (!bound(v)) return std::nullopt;
    return values_[v] == 1;
  }
  /// Value of a bound variable; throws when unbound.
  bool at(Var v) const {
    if (!bound(v)) throw std::out_of_range("variable " + std::to_string(v) + " is unbound");
    return values_[v] == 1;
  }
  /// True when the literal's variable is bound and agrees with it.
  bool satisfies(Literal l) const { return bound(l.var()) && at(l.var()) == l.positive(); }
  bool contradicts(Literal l) const { return bound(l.var()) && at(l.var()) != l.positive(); }

  bool complete() const {
    for (std::size_t v = 1; v < values_.size(); ++v)
      if (values_[v] == kUnbound) return false;
    return true;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (std::size_t v = 1; v < values_.size(); ++v) n += values_[v] != kUnbound;
    return n;
  }

  /// Bound literals in increasing variable order.
  std::vector<Literal> literals() const {
    std::vector<Literal> out;
    for (std::size_t v = 1; v < values_.size(); ++v)
      if (values_[v] != kUnbound) out.emplace_back(static_cast<Var>(v), values_[v] == 1);
    return out;
  }

  friend bool operator==(const Term& a, const Term& b) { return a.literals() == b.literals(); }

private:
  static constexpr std::int8_t kUnbound = -1;
  void grow(Var v) {
    if (v >= values_.size()) values_.resize(static_cast<std::size_t>(v) + 1, kUnbound);
  }
  std::vector<std::int8_t> values_{kUnbound};
};

/// Literal weights; every literal defaults to 1.0.
class WeightMap {
public:
  WeightMap() = default;
  explicit WeightMap(Var var_count) : weights_(2 * (static_cast<std::size_t>(var_count) + 1), 1.0) {}

  Var var_count() const { return weights_.empty() ? 0 : static_cast<Var>(weights_.size() / 2 - 1); }

  double operator[](Literal l) const { return l.index() < weights_.size() ? weights_[l.index()] : 1.0; }

  void set(Literal l, double w);

  /// Zero the weight of every literal contradicting `t`.
  WeightMap restricted(const Term& t) const;

private:
  std::vector<double> weights_;
};

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (DIMACS, nnf, vtree, sdd, json, csv ...).
class ParseError : public Error {
public:
  using Error::Error;
};

/// A structural property a query relies on does not hold.
class PropertyViolation : public Error {
public:
  using Error::Error;
};

/// Semantic failures: zero-probability evidence, data rows outside the support.
class SemanticError : public Error {
public:
  using Error::Error;
};

class ZeroProbabilityError : public SemanticError {
public:
  using SemanticError::SemanticError;
};

/// A desk-scale limit (exhaustive enumeration, variable counts) was exceeded.
class CapacityError : public Error {
public:
  using Error::Error;
};

}  // namespace kc
