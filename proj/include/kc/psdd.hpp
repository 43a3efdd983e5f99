#pragma once

// Probabilistic SDDs: an SDD normalized for every vtree node on its path,
// with a distribution on the elements of each decision node and a Bernoulli
// parameter on each free variable leaf.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kc/sdd.hpp"
#include "kc/types.hpp"
#include "kc/vtree.hpp"

namespace kc {

struct Dataset {
  Var var_count = 0;
  std::vector<std::string> names;  // optional, names[v-1] for variable v
  struct Row {
    Term term;  // complete over 1..var_count
    std::uint64_t count = 1;
  };
  std::vector<Row> rows;

  std::uint64_t total() const;
};

/// Header of variable names (column i is variable i+1), 0/1 cells, and an
/// optional `count` column holding multiplicities >= 1.
Dataset parse_dataset_csv(std::istream& in);
Dataset parse_dataset_csv_string(std::string_view text);
void write_dataset_csv(std::ostream& out, const Dataset& d);

using PsddId = std::uint32_t;

enum class PsddKind : std::uint8_t { Literal, Top, Decision };

struct PsddElement {
  PsddId prime;
  PsddId sub;
  double theta;
};

class Psdd {
public:
  struct Node {
    PsddKind kind;
    VtreeId vtree;
    Literal lit;           // Literal
    double theta = 0.5;    // Top: probability of the positive literal
    std::vector<PsddElement> elements;  // Decision
  };

  /// Structure of `root` normalized for the vtree root, with uniform
  /// parameters. Elements with a false sub are dropped; they always carry
  /// probability zero. Throws SemanticError when `root` is false.
  static Psdd from_sdd(const SddManager& m, SddId root);

  const Vtree& vtree() const { return vtree_; }
  Var var_count() const { return vtree_.max_var(); }
  PsddId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(PsddId id) const { return nodes_.at(id); }
  Node& node(PsddId id) { return nodes_.at(id); }

  /// Whether the base SDD accepts x.
  bool supports(const Term& x) const;
  double probability(const Term& x) const;
  /// Sum of probability over all completions of t.
  double marginal(const Term& t) const;
  struct Mpe {
    Term state;
    double probability;
  };
  /// Most likely completion of `evidence`; ties go to the lowest element.
  Mpe mpe(const Term& evidence) const;
  Dataset sample(std::uint64_t seed, std::size_t count) const;
  /// Sum of count * ln probability; SemanticError when a row has probability 0.
  double log_likelihood(const Dataset& d) const;

  /// Parameters proportional to model counts: the induced distribution is
  /// uniform over the base's models.
  void set_uniform_over_models();

private:
  friend Psdd read_psdd(std::istream&, Vtree);
  Vtree vtree_;
  std::vector<Node> nodes_;  // children before parents
  PsddId root_ = 0;
};

struct LearnOptions {
  double laplace = 0.0;
};

/// Maximum-likelihood parameters from complete data. Throws SemanticError
/// naming the first row the base rejects.
Psdd learn_ml(const SddManager& m, SddId base, const Dataset& data, LearnOptions opts = {});
/// Refits the parameters of an existing structure.
void fit_ml(Psdd& p, const Dataset& data, LearnOptions opts = {});

/// `psdd N`, then `L id vtree lit`, `T id vtree var`, `D id vtree k p1 s1 ...`,
/// then one `P id 0 w0 1 w1 ...` line per decision node and `P id 0 w 1 1-w`
/// per Top node. Children first; the last node line is the root.
void write_psdd(std::ostream& out, const Psdd& p);
std::string to_psdd_string(const Psdd& p);
Psdd read_psdd(std::istream& in, Vtree vtree);
Psdd read_psdd_string(std::string_view text, Vtree vtree);

}  // namespace kc
