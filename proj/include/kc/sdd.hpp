#pragma once

// Bottom-up compilation into sentential decision diagrams.
//
// Every node is normalized for a vtree node: a decision node at vtree v has
// primes over left(v) and subs over right(v). Nodes are compressed (distinct
// subs), trimmed and uniqued, so two equivalent functions built by the same
// manager share one id. Dead nodes are never reclaimed.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kc/cnf.hpp"
#include "kc/nnf.hpp"
#include "kc/types.hpp"
#include "kc/vtree.hpp"

namespace kc {

using SddId = std::uint32_t;
inline constexpr SddId kSddFalse = 0;
inline constexpr SddId kSddTrue = 1;

enum class SddKind : std::uint8_t { False, True, Literal, Decision };
enum class BoolOp : std::uint8_t { Conjoin, Disjoin };
enum class ClauseOrder : std::uint8_t { Given, ByVtree };

struct SddElement {
  SddId prime;
  SddId sub;
  friend bool operator==(const SddElement&, const SddElement&) = default;
};

class SddManager {
public:
  explicit SddManager(Vtree vtree);
  SddManager(const SddManager&) = delete;
  SddManager& operator=(const SddManager&) = delete;

  const Vtree& vtree() const { return vtree_; }
  Var var_count() const { return vtree_.max_var(); }

  SddId constant(bool value) const { return value ? kSddTrue : kSddFalse; }
  SddId literal(Literal l);

  SddId apply(SddId a, SddId b, BoolOp op);
  SddId conjoin(SddId a, SddId b) { return apply(a, b, BoolOp::Conjoin); }
  SddId disjoin(SddId a, SddId b) { return apply(a, b, BoolOp::Disjoin); }
  SddId negate(SddId a);
  /// Fixes the variables bound in `t`.
  SddId condition(SddId a, const Term& t);
  /// Existentially quantifies `v`.
  SddId exists(SddId a, Var v);

  SddId compile_clause(const Clause& clause);
  SddId compile_cnf(const Cnf& cnf, ClauseOrder order = ClauseOrder::ByVtree);

  /// Canonicalizing constructor for a decision node at vtree node `v`.
  /// Elements must have primes over left(v) that are exclusive and
  /// exhaustive and subs over right(v).
  SddId decision(VtreeId v, std::vector<SddElement> elements);

  // --- inspection -------------------------------------------------------------
  SddKind kind(SddId a) const { return node(a).kind; }
  bool is_constant(SddId a) const { return a == kSddFalse || a == kSddTrue; }
  /// Vtree node the node is normalized for (kNoVtree for constants).
  VtreeId vtree_of(SddId a) const { return node(a).vtree; }
  Literal literal_of(SddId a) const { return node(a).lit; }
  std::span<const SddElement> elements(SddId a) const;

  /// Nodes ever created, constants included.
  std::size_t node_count() const { return nodes_.size(); }
  /// Sum of element counts over decision nodes reachable from `a`.
  std::size_t size(SddId a) const;
  /// Decision nodes reachable from `a`.
  std::size_t decision_count(SddId a) const;

  bool evaluate(SddId a, const Term& x) const;
  /// Models over all vtree variables.
  BigInt model_count(SddId a) const;
  double wmc(SddId a, const WeightMap& w) const;
  /// Multiplexer expansion into a deterministic, decomposable NNF circuit.
  NnfCircuit to_nnf(SddId a) const;

  /// Nodes below `a` (inclusive) in children-before-parents order.
  std::vector<SddId> topological(SddId a) const;

  /// Throws std::invalid_argument for ids this manager never issued.
  void validate(SddId a) const;

private:
  struct Node {
    SddKind kind;
    VtreeId vtree;
    Literal lit;
    std::uint32_t elem_offset = 0;
    std::uint32_t elem_count = 0;
  };
  struct UniqueKey {
    VtreeId vtree;
    std::vector<SddElement> elements;
    friend bool operator==(const UniqueKey&, const UniqueKey&) = default;
  };
  struct UniqueHash {
    std::size_t operator()(const UniqueKey& k) const noexcept;
  };

  const Node& node(SddId a) const { return nodes_[a]; }
  std::vector<SddElement> normalized_elements(SddId a, VtreeId v);
  SddId condition_rec(SddId a, const Term& t, std::unordered_map<SddId, SddId>& memo);
  BigInt lifted_count(SddId a, VtreeId context, std::unordered_map<SddId, BigInt>& memo) const;

  Vtree vtree_;
  std::vector<Node> nodes_;
  std::vector<SddElement> element_pool_;
  std::vector<SddId> literal_ids_;  // by Literal::index()
  std::vector<SddId> negation_;     // kNone until computed
  std::unordered_map<UniqueKey, SddId, UniqueHash> unique_;
  std::unordered_map<std::uint64_t, SddId> conjoin_cache_;
  std::unordered_map<std::uint64_t, SddId> disjoin_cache_;
};

/// Counts how many SDD edges were followed from `root`; see SddManager::size.
inline std::size_t sdd_size(const SddManager& m, SddId root) { return m.size(root); }

// --- E-MajSat / MAP -----------------------------------------------------------

struct MapResult {
  Term assignment;  // over the maximized variables
  double value;
};

/// max over y of sum over z of f(y,z) W(y) W(z), with Y = `maximized` and Z
/// the remaining vtree variables. Requires the manager's vtree to be
/// constrained for Z when both sides are nonempty.
MapResult map_emajsat(const SddManager& m, SddId f, const WeightMap& w, const std::vector<Var>& maximized);

// --- SDD text format ------------------------------------------------------------

/// `sdd N`, then `F id`, `T id`, `L id vtree lit`, `D id vtree k p1 s1 ...`,
/// children first. The last node is the root.
void write_sdd(std::ostream& out, const SddManager& m, SddId root);
std::string to_sdd_string(const SddManager& m, SddId root);
/// Rebuilds the nodes in `m` (canonicalizing on the way) and returns the root.
SddId read_sdd(std::istream& in, SddManager& m);
SddId read_sdd_string(std::string_view text, SddManager& m);

}  // namespace kc
