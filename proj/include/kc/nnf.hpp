#pragma once

// Negation normal form circuits stored as an append-only arena in which every
// child index is smaller than its parent's. Queries are single bottom-up (and
// where needed top-down) passes over that arena.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kc/types.hpp"

namespace kc {

using NodeIndex = std::uint32_t;

enum class NnfKind : std::uint8_t { True, False, Lit, And, Or };

struct NnfNode {
  NnfKind kind = NnfKind::True;
  Literal literal;                  // Lit only
  std::vector<NodeIndex> children;  // And/Or only
};

class NnfCircuit {
public:
  NnfCircuit() = default;
  explicit NnfCircuit(Var var_count) : var_count_(var_count) {}

  NodeIndex add_true();
  NodeIndex add_false();
  NodeIndex add_literal(Literal l);
  /// Children must already exist. Empty And is true, empty Or is false.
  NodeIndex add_and(std::vector<NodeIndex> children);
  NodeIndex add_or(std::vector<NodeIndex> children);

  void set_root(NodeIndex root);
  NodeIndex root() const { return root_; }
  Var var_count() const { return var_count_; }
  void set_var_count(Var n) { var_count_ = n; }

  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const;
  const NnfNode& node(NodeIndex i) const { return nodes_.at(i); }
  std::span<const NnfNode> nodes() const { return nodes_; }

  /// Sorted variables mentioned under each node.
  std::vector<std::vector<Var>> variable_sets() const;

private:
  NodeIndex push(NnfNode n);
  Var var_count_ = 0;
  std::vector<NnfNode> nodes_;
  NodeIndex root_ = 0;
};

// --- c2d .nnf format -------------------------------------------------------

NnfCircuit parse_c2d_nnf(std::istream& in);
NnfCircuit parse_c2d_nnf_string(std::string_view text);
void write_c2d_nnf(std::ostream& out, const NnfCircuit& c);
std::string to_c2d_nnf(const NnfCircuit& c);

// --- structure -------------------------------------------------------------

/// Value of the root. Throws std::invalid_argument when a mentioned variable is unbound.
bool evaluate(const NnfCircuit& c, const Term& x);

/// Replaces literal leaves over variables bound in `t` by constants.
NnfCircuit condition(const NnfCircuit& c, const Term& t);

struct DecomposabilityViolation {
  NodeIndex node;
  Var shared;
};
std::optional<DecomposabilityViolation> check_decomposability(const NnfCircuit& c);

struct DeterminismViolation {
  NodeIndex node;
  Term witness;
};
/// Exhaustive over all 2^var_count inputs; CapacityError above 24 variables.
std::optional<DeterminismViolation> check_determinism_exhaustive(const NnfCircuit& c);

/// First or-node whose children mention different variable sets.
std::optional<NodeIndex> check_smoothness(const NnfCircuit& c);

/// Conjoins (X or not X) gadgets onto or-children missing X.
NnfCircuit smooth(const NnfCircuit& c);

// --- queries on (smooth) d-DNNF ---------------------------------------------

struct QueryOptions {
  /// Verify decomposability and smoothness, and determinism when var_count <= 24.
  bool check_properties = false;
};

/// Models over all var_count variables; variables the root never mentions are free.
BigInt model_count(const NnfCircuit& c, QueryOptions opts = {});
double wmc(const NnfCircuit& c, const WeightMap& w, QueryOptions opts = {});
/// Natural log of wmc, accumulated in log space; -inf for zero.
double log_wmc(const NnfCircuit& c, const WeightMap& w, QueryOptions opts = {});

/// marginal[l.index()] = sum of W(x) over models x containing l.
class Marginals {
public:
  explicit Marginals(Var var_count) : values_(2 * (static_cast<std::size_t>(var_count) + 1), 0.0) {}
  double operator[](Literal l) const { return values_.at(l.index()); }
  double& operator[](Literal l) { return values_.at(l.index()); }

private:
  std::vector<double> values_;
};
/// One upward value pass and one downward derivative pass.
Marginals all_marginals(const NnfCircuit& c, const WeightMap& w, QueryOptions opts = {});

/// Satisfiability of a decomposable circuit.
bool dnnf_sat(const NnfCircuit& c);

struct WeightedModel {
  Term model;
  double weight;
};
/// Complete model maximizing the product of literal weights. Lowest child wins ties.
WeightedModel max_weight_model(const NnfCircuit& c, const WeightMap& w, QueryOptions opts = {});

/// Models in lexicographic order (variable 1 most significant, false before true).
std::vector<Term> enumerate_models(const NnfCircuit& c, std::size_t limit);

}  // namespace kc
