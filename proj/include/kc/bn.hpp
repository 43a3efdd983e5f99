#pragma once

// Binary Bayesian networks reduced to weighted model counting: indicator
// variables for network states, one parameter variable per CPT entry, and
// marginal / MPE queries answered on the compiled encoding.

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kc/cnf.hpp"
#include "kc/nnf.hpp"
#include "kc/sdd.hpp"
#include "kc/types.hpp"

namespace kc {

class BayesNet {
public:
  struct Cpt {
    /// rows[u] = (theta_x|u, theta_not_x|u). Parent instantiations count in
    /// binary with the first parent as the most significant bit, true = 1.
    std::vector<std::pair<double, double>> rows;
  };

  /// Variables are indexed 0..n-1 in the given order.
  BayesNet(std::vector<std::string> names, std::vector<std::vector<std::size_t>> parents, std::vector<Cpt> cpts);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::size_t index_of(std::string_view name) const;
  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  const Cpt& cpt(std::size_t i) const { return cpts_.at(i); }
  /// Parents before children.
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  /// Row of `cpt(i)` selected by the parent values in `x` (indexed by network variable).
  std::size_t row_index(std::size_t i, const std::vector<bool>& x) const;

private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<Cpt> cpts_;
  std::vector<std::size_t> topo_;
};

/// JSON: {"variables": [...], "parents": {"B": ["A"], ...} or [[...], ...],
///        "cpt": {"A": [[0.3, 0.7]], ...} or [[...], ...]}.
BayesNet parse_bayes_net(std::istream& in);
BayesNet parse_bayes_net_string(std::string_view text);
std::string to_bayes_net_json(const BayesNet& bn);

struct BnEncoding {
  struct Parameter {
    std::size_t variable;  // network variable
    std::size_t row;       // parent instantiation
    bool positive;         // theta_x|u or theta_not_x|u
  };
  Cnf cnf;
  WeightMap weights;
  std::vector<Var> indicator_of;     // network variable -> CNF variable
  std::vector<Parameter> parameters;  // parameters[k] is CNF variable indicator_count + 1 + k
  Var parameter_var(std::size_t k) const { return static_cast<Var>(indicator_of.size() + 1 + k); }
};

BnEncoding encode(const BayesNet& bn);

/// Network variable states, indexed by network variable.
using Instantiation = std::vector<bool>;

/// Probability of every complete instantiation; entry b holds the state where
/// bit i gives network variable i. CapacityError above 20 variables.
std::vector<double> joint_brute_force(const BayesNet& bn);

/// Assignment of some network variables, by index.
using Evidence = std::map<std::size_t, bool>;

struct Query {
  Evidence target;
  Evidence evidence;
};

enum class BnBackend { CompileSdd, BruteForce };
enum class BnVtree { Balanced, RightLinear };

struct Mpe {
  Instantiation state;
  double probability;
};

/// Compiles the encoding once and answers many queries on the smoothed circuit.
class CompiledNetwork {
public:
  explicit CompiledNetwork(const BayesNet& bn, BnVtree shape = BnVtree::Balanced);

  const BnEncoding& encoding() const { return enc_; }
  const NnfCircuit& circuit() const { return circuit_; }
  std::size_t sdd_size() const { return sdd_size_; }

  /// Pr(evidence).
  double probability(const Evidence& evidence) const;
  /// Pr(target | evidence); ZeroProbabilityError when Pr(evidence) = 0.
  double marginal(const Query& q) const;
  Mpe mpe(const Evidence& evidence) const;

private:
  WeightMap restricted(const Evidence& e) const;
  std::size_t network_size_;
  BnEncoding enc_;
  NnfCircuit circuit_;
  std::size_t sdd_size_ = 0;
};

double query_marginal(const BayesNet& bn, const Query& q, BnBackend backend = BnBackend::CompileSdd);
Mpe query_mpe(const BayesNet& bn, const Evidence& evidence, BnBackend backend = BnBackend::CompileSdd);

/// `{"target": {...}, "evidence": {...}, "probability": p}` with variable names as keys.
std::string query_record_json(const BayesNet& bn, const Query& q, double probability);

}  // namespace kc
