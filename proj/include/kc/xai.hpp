#pragma once

// Classifiers compiled into decision diagrams and the explanation queries on
// them: prime implicants, sufficient and complete reasons, bias and
// robustness.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kc/nnf.hpp"
#include "kc/sdd.hpp"
#include "kc/types.hpp"

namespace kc {

/// A Boolean function over features 1..names.size(), held by its own manager.
struct DecisionFunction {
  std::shared_ptr<SddManager> manager;
  SddId root = kSddFalse;
  std::vector<std::string> names;  // names[v-1] names variable v

  Var var_count() const { return static_cast<Var>(names.size()); }
  bool operator()(const Term& x) const { return manager->evaluate(root, x); }
  /// Variable of a feature name; std::invalid_argument when unknown.
  Var var_of(std::string_view name) const;
};

/// Default names x1..xn.
std::vector<std::string> default_names(Var n);

/// Compiles a CNF over a right-linear vtree (an OBDD) in variable order.
DecisionFunction function_from_cnf(const Cnf& cnf, std::vector<std::string> names = {});

/// "A B ~C" in increasing variable order; "true" for the empty term.
std::string term_to_string(const Term& t, const std::vector<std::string>& names);
/// Inverse of term_to_string; tokens are names or ~names, separated by
/// spaces or commas. std::invalid_argument on unknown names or conflicts.
Term parse_term(std::string_view text, const std::vector<std::string>& names);

// --- naive Bayes ------------------------------------------------------------------

struct NaiveBayes {
  struct Feature {
    std::string name;
    double pos_likelihood;  // Pr(feature true | positive)
    double neg_likelihood;  // Pr(feature true | negative)
  };
  double prior = 0.5;  // Pr(positive)
  double threshold = 0.5;
  std::vector<Feature> features;
  std::vector<std::string> protected_features;

  void validate() const;
  std::vector<std::string> names() const;
};

NaiveBayes parse_naive_bayes(std::istream& in);
NaiveBayes parse_naive_bayes_string(std::string_view text);

/// Pr(positive | x) >= threshold, decided in exact rational arithmetic.
/// SemanticError when both classes have probability zero on x.
bool nb_decision(const NaiveBayes& nb, const Term& x);

/// OBDD of the classifier's decision function; `order` lists feature
/// indices (0-based) from the root down, defaulting to the file order.
/// At most 20 features. A supplied manager must cover variables 1..n; its
/// vtree then overrides `order` for the diagram's shape.
DecisionFunction compile_nb(const NaiveBayes& nb, std::vector<std::size_t> order = {},
                            std::shared_ptr<SddManager> manager = nullptr);

// --- decision forests -------------------------------------------------------------

struct DecisionTree {
  // A leaf when feature == 0; otherwise tests variable `feature`.
  Var feature = 0;
  bool leaf_value = false;
  std::unique_ptr<DecisionTree> low, high;
};

struct DecisionForest {
  std::vector<std::string> features;
  std::vector<DecisionTree> trees;
  std::vector<std::string> protected_features;
};

/// {"features": [...], "trees": [node, ...], "protected": [...]} where a node
/// is true/false or {"feature": name, "low": node, "high": node}.
DecisionForest parse_forest(std::istream& in);
DecisionForest parse_forest_string(std::string_view text);

bool forest_vote(const DecisionForest& forest, const Term& x);
/// Strict majority of the trees. std::invalid_argument for an even tree count.
DecisionFunction compile_forest(const DecisionForest& forest);

// --- explanations -----------------------------------------------------------------

/// Minimal terms implying f, sorted. At most 20 variables.
std::vector<Term> prime_implicants(const DecisionFunction& f);
/// Same, for the complement of f.
std::vector<Term> prime_implicants_of_negation(const DecisionFunction& f);
/// condition(f, t) is the constant `value`.
bool implies(const DecisionFunction& f, const Term& t, bool value);

/// Prime implicants of f (or of its complement when f(x) is false) whose
/// literals all agree with x.
std::vector<Term> sufficient_reasons(const DecisionFunction& f, const Term& x);

struct ReasonCircuit {
  NnfCircuit circuit;
  Term instance;
  bool decision = false;
};

/// Monotone circuit true on y iff the literals x shares with y already force
/// the decision f(x). Requires an OBDD (right-linear vtree).
ReasonCircuit complete_reason(const DecisionFunction& f, const Term& x);
bool decision_sticks(const ReasonCircuit& r, const Term& y);

/// Flipping protected features alone can change the decision on x.
bool decision_biased(const DecisionFunction& f, const Term& x, const std::vector<Var>& protected_vars);
/// Some protected feature is essential to f.
bool classifier_biased(const DecisionFunction& f, const std::vector<Var>& protected_vars);

/// Fewest feature flips that change the decision; nullopt when f is constant.
std::optional<unsigned> decision_robustness(const DecisionFunction& f, const Term& x);

struct RobustnessHistogram {
  std::map<unsigned, std::uint64_t> levels;
  std::uint64_t unbounded = 0;
};
/// Exact over all 2^n instances; CapacityError above 16 variables.
RobustnessHistogram robustness_histogram(const DecisionFunction& f);
/// Mean decision robustness over all instances; SemanticError when f is constant.
double model_robustness(const DecisionFunction& f);
/// `level,count` rows, plus `unbounded,<count>` when nonzero.
std::string histogram_csv(const RobustnessHistogram& h);

}  // namespace kc
