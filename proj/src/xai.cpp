#include "kc/xai.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace kc {

using nlohmann::json;
using Rational = boost::multiprecision::cpp_rational;

namespace {

Vtree right_linear_over(Var n) {
  std::vector<Var> order;
  for (Var v = 1; v <= n; ++v) order.push_back(v);
  return Vtree::right_linear(order);
}

SddId ite(SddManager& m, Var v, SddId high, SddId low) {
  SddId x = m.literal(Literal(v, true));
  return m.disjoin(m.conjoin(x, high), m.conjoin(m.negate(x), low));
}

void require_complete(const DecisionFunction& f, const Term& x) {
  for (Var v = 1; v <= f.var_count(); ++v)
    if (!x.bound(v)) throw std::invalid_argument("instance leaves feature `" + f.names[v - 1] + "` unset");
}

}  // namespace

Var DecisionFunction::var_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Var>(i + 1);
  throw std::invalid_argument("unknown feature `" + std::string(name) + "`");
}

std::vector<std::string> default_names(Var n) {
  std::vector<std::string> out;
  for (Var v = 1; v <= n; ++v) out.push_back("x" + std::to_string(v));
  return out;
}

DecisionFunction function_from_cnf(const Cnf& cnf, std::vector<std::string> names) {
  if (names.empty()) names = default_names(cnf.var_count);
  if (names.size() != cnf.var_count) throw std::invalid_argument("need one name per CNF variable");
  if (cnf.var_count == 0) throw std::invalid_argument("function needs at least one variable");
  DecisionFunction f{std::make_shared<SddManager>(right_linear_over(cnf.var_count)), kSddFalse, std::move(names)};
  f.root = f.manager->compile_cnf(cnf);
  return f;
}

std::string term_to_string(const Term& t, const std::vector<std::string>& names) {
  std::string out;
  for (Literal l : t.literals()) {
    if (!out.empty()) out += ' ';
    if (!l.positive()) out += '~';
    out += l.var() <= names.size() ? names[l.var() - 1] : "x" + std::to_string(l.var());
  }
  return out.empty() ? "true" : out;
}

Term parse_term(std::string_view text, const std::vector<std::string>& names) {
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  Term t(static_cast<Var>(names.size()));
  std::string tok;
  while (in >> tok) {
    bool positive = true;
    while (!tok.empty() && (tok[0] == '~' || tok[0] == '-' || tok[0] == '!')) {
      positive = !positive;
      tok.erase(0, 1);
    }
    auto it = std::find(names.begin(), names.end(), tok);
    if (it == names.end()) throw std::invalid_argument("unknown feature `" + tok + "`");
    Var v = static_cast<Var>(it - names.begin() + 1);
    if (t.bound(v) && t.at(v) != positive) throw std::invalid_argument("feature `" + tok + "` given both values");
    t.set(v, positive);
  }
  return t;
}

// --- naive Bayes ------------------------------------------------------------------

void NaiveBayes::validate() const {
  auto prob = [](double p) { return p >= 0 && p <= 1; };
  if (!(prior > 0 && prior < 1)) throw std::invalid_argument("prior must lie in (0,1)");
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("threshold must lie in (0,1)");
  if (features.empty()) throw std::invalid_argument("classifier needs at least one feature");
  for (const auto& f : features)
    if (!prob(f.pos_likelihood) || !prob(f.neg_likelihood))
      throw std::invalid_argument("likelihoods of `" + f.name + "` must lie in [0,1]");
  for (const auto& p : protected_features)
    if (std::none_of(features.begin(), features.end(), [&](const Feature& f) { return f.name == p; }))
      throw std::invalid_argument("protected feature `" + p + "` is not a feature");
}

std::vector<std::string> NaiveBayes::names() const {
  std::vector<std::string> out;
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

NaiveBayes parse_naive_bayes(std::istream& in) {
  try {
    json j = json::parse(in);
    NaiveBayes nb;
    nb.prior = j.at("prior").get<double>();
    nb.threshold = j.at("threshold").get<double>();
    for (const auto& f : j.at("features"))
      nb.features.push_back({f.at("name").get<std::string>(), f.at("pos_likelihood").get<double>(),
                             f.at("neg_likelihood").get<double>()});
    if (j.contains("protected")) nb.protected_features = j.at("protected").get<std::vector<std::string>>();
    nb.validate();
    return nb;
  } catch (const json::exception& e) {
    throw ParseError(std::string("naive Bayes JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("naive Bayes JSON: ") + e.what());
  }
}

NaiveBayes parse_naive_bayes_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_naive_bayes(in);
}

namespace {

struct NbFactors {
  Rational pos_weight, neg_weight;  // (1 - T) prior and T (1 - prior)
  std::vector<std::pair<Rational, Rational>> when_true, when_false;  // (Pr(.|+), Pr(.|-))
};

NbFactors factors_of(const NaiveBayes& nb) {
  nb.validate();
  NbFactors f;
  Rational t(nb.threshold), p(nb.prior);
  f.pos_weight = (1 - t) * p;
  f.neg_weight = t * (1 - p);
  for (const auto& ft : nb.features) {
    Rational a(ft.pos_likelihood), b(ft.neg_likelihood);
    f.when_true.emplace_back(a, b);
    f.when_false.emplace_back(1 - a, 1 - b);
  }
  return f;
}

}  // namespace

bool nb_decision(const NaiveBayes& nb, const Term& x) {
  NbFactors f = factors_of(nb);
  Rational pos = f.pos_weight, neg = f.neg_weight;
  for (std::size_t i = 0; i < nb.features.size(); ++i) {
    Var v = static_cast<Var>(i + 1);
    if (!x.bound(v)) throw std::invalid_argument("instance leaves feature `" + nb.features[i].name + "` unset");
    const auto& [a, b] = x.at(v) ? f.when_true[i] : f.when_false[i];
    pos *= a;
    neg *= b;
  }
  if (pos == 0 && neg == 0) throw SemanticError("both classes have probability zero on this instance");
  return pos >= neg;
}

DecisionFunction compile_nb(const NaiveBayes& nb, std::vector<std::size_t> order, std::shared_ptr<SddManager> manager) {
  NbFactors f = factors_of(nb);
  const std::size_t n = nb.features.size();
  if (n > 20) throw CapacityError("naive Bayes compilation limited to 20 features");
  if (order.empty())
    for (std::size_t i = 0; i < n; ++i) order.push_back(i);
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i)
      if (sorted.size() != n || sorted[i] != i) throw std::invalid_argument("feature order must be a permutation");
  }
  // Both classes vanish on some input iff one feature value kills each class.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (bool vi : {true, false})
        for (bool vj : {true, false}) {
          const auto& fi = vi ? f.when_true[i] : f.when_false[i];
          const auto& fj = vj ? f.when_true[j] : f.when_false[j];
          if (fi.first == 0 && fj.second == 0 && (i != j || vi == vj))
            throw SemanticError("both classes have probability zero on some input");
        }

  std::vector<Var> vars;
  for (std::size_t i : order) vars.push_back(static_cast<Var>(i + 1));
  if (!manager) manager = std::make_shared<SddManager>(Vtree::right_linear(vars));
  for (Var v : vars)
    if (!manager->vtree().has_var(v)) throw std::invalid_argument("manager does not cover every feature");
  DecisionFunction out{std::move(manager), kSddFalse, nb.names()};
  SddManager& m = *out.manager;
  // State: ratio of the positive to the negative weight so far (B == 0 means
  // the negative class is already ruled out).
  std::vector<std::map<Rational, SddId>> memo(n + 1);
  std::function<SddId(std::size_t, const Rational&, const Rational&)> build = [&](std::size_t depth, const Rational& a,
                                                                                  const Rational& b) -> SddId {
    if (b == 0) return kSddTrue;
    if (a == 0) return kSddFalse;
    if (depth == n) return a >= b ? kSddTrue : kSddFalse;
    Rational ratio = a / b;
    auto& table = memo[depth];
    if (auto it = table.find(ratio); it != table.end()) return it->second;
    std::size_t i = order[depth];
    const auto& [ta, tb] = f.when_true[i];
    const auto& [fa, fb] = f.when_false[i];
    SddId high = build(depth + 1, ratio * ta, tb);
    SddId low = build(depth + 1, ratio * fa, fb);
    SddId node = ite(m, static_cast<Var>(i + 1), high, low);
    table.emplace(ratio, node);
    return node;
  };
  out.root = build(0, f.pos_weight, f.neg_weight);
  return out;
}

// --- forests ----------------------------------------------------------------------

namespace {

DecisionTree tree_from_json(const json& j, const std::vector<std::string>& features) {
  DecisionTree t;
  if (j.is_boolean()) {
    t.leaf_value = j.get<bool>();
    return t;
  }
  if (!j.is_object()) throw ParseError("tree nodes must be booleans or objects");
  const json& feat = j.at("feature");
  if (feat.is_number_unsigned()) {
    auto idx = feat.get<std::size_t>();
    if (idx >= features.size()) throw ParseError("feature index out of range");
    t.feature = static_cast<Var>(idx + 1);
  } else {
    auto name = feat.get<std::string>();
    auto it = std::find(features.begin(), features.end(), name);
    if (it == features.end()) throw ParseError("unknown feature `" + name + "` in tree");
    t.feature = static_cast<Var>(it - features.begin() + 1);
  }
  t.low = std::make_unique<DecisionTree>(tree_from_json(j.at("low"), features));
  t.high = std::make_unique<DecisionTree>(tree_from_json(j.at("high"), features));
  return t;
}

bool tree_value(const DecisionTree& t, const Term& x) {
  const DecisionTree* at = &t;
  while (at->feature != 0) at = x.at(at->feature) ? at->high.get() : at->low.get();
  return at->leaf_value;
}

SddId compile_tree(SddManager& m, const DecisionTree& t) {
  if (t.feature == 0) return m.constant(t.leaf_value);
  return ite(m, t.feature, compile_tree(m, *t.high), compile_tree(m, *t.low));
}

}  // namespace

DecisionForest parse_forest(std::istream& in) {
  try {
    json j = json::parse(in);
    DecisionForest f;
    f.features = j.at("features").get<std::vector<std::string>>();
    for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t, f.features));
    if (j.contains("protected")) f.protected_features = j.at("protected").get<std::vector<std::string>>();
    for (const auto& p : f.protected_features)
      if (std::find(f.features.begin(), f.features.end(), p) == f.features.end())
        throw ParseError("protected feature `" + p + "` is not a feature");
    return f;
  } catch (const json::exception& e) {
    throw ParseError(std::string("forest JSON: ") + e.what());
  }
}

DecisionForest parse_forest_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_forest(in);
}

bool forest_vote(const DecisionForest& forest, const Term& x) {
  std::size_t yes = 0;
  for (const auto& t : forest.trees) yes += tree_value(t, x);
  return 2 * yes > forest.trees.size();
}

DecisionFunction compile_forest(const DecisionForest& forest) {
  if (forest.trees.empty() || forest.trees.size() % 2 == 0)
    throw std::invalid_argument("a forest needs an odd number of trees");
  if (forest.features.empty()) throw std::invalid_argument("a forest needs at least one feature");
  const Var n = static_cast<Var>(forest.features.size());
  DecisionFunction out{std::make_shared<SddManager>(right_linear_over(n)), kSddFalse, forest.features};
  SddManager& m = *out.manager;
  // at_least[k]: at least k of the trees seen so far vote true.
  const std::size_t need = forest.trees.size() / 2 + 1;
  std::vector<SddId> at_least(need + 1, kSddFalse);
  at_least[0] = kSddTrue;
  for (const auto& tree : forest.trees) {
    SddId vote = compile_tree(m, tree);
    for (std::size_t k = need; k >= 1; --k) at_least[k] = m.disjoin(at_least[k], m.conjoin(vote, at_least[k - 1]));
  }
  out.root = at_least[need];
  return out;
}

// --- prime implicants -------------------------------------------------------------

namespace {

using LitTerm = std::vector<Literal>;
using TermSet = std::set<LitTerm>;

std::vector<Term> implicants_of(SddManager& m, SddId root, Var n) {
  if (n > 20) throw CapacityError("prime implicant enumeration limited to 20 variables");
  const std::vector<Var> vars = m.vtree().variables();
  std::map<std::pair<SddId, std::size_t>, TermSet> memo;
  std::function<TermSet(SddId, std::size_t)> primes = [&](SddId f, std::size_t k) -> TermSet {
    if (f == kSddFalse) return {};
    if (f == kSddTrue) return {LitTerm{}};
    if (auto it = memo.find({f, k}); it != memo.end()) return it->second;
    Var x = vars.at(k);
    Term pos, neg;
    pos.set(x, true);
    neg.set(x, false);
    SddId f1 = m.condition(f, pos), f0 = m.condition(f, neg);
    TermSet out;
    if (f1 == f0) {
      out = primes(f1, k + 1);
    } else {
      TermSet both = primes(m.conjoin(f1, f0), k + 1);
      out = both;
      for (auto [g, lit] : {std::pair{f1, Literal(x, true)}, std::pair{f0, Literal(x, false)}})
        for (const auto& t : primes(g, k + 1))
          if (!both.count(t)) {
            LitTerm extended = t;
            extended.push_back(lit);
            std::sort(extended.begin(), extended.end());
            out.insert(extended);
          }
    }
    memo.emplace(std::make_pair(f, k), out);
    return out;
  };
  std::vector<Term> result;
  for (const auto& t : primes(root, 0)) {
    Term term(n);
    for (Literal l : t) term.set(l);
    result.push_back(term);
  }
  return result;
}

}  // namespace

std::vector<Term> prime_implicants(const DecisionFunction& f) { return implicants_of(*f.manager, f.root, f.var_count()); }

std::vector<Term> prime_implicants_of_negation(const DecisionFunction& f) {
  return implicants_of(*f.manager, f.manager->negate(f.root), f.var_count());
}

bool implies(const DecisionFunction& f, const Term& t, bool value) {
  return f.manager->condition(f.root, t) == f.manager->constant(value);
}

std::vector<Term> sufficient_reasons(const DecisionFunction& f, const Term& x) {
  require_complete(f, x);
  auto candidates = f(x) ? prime_implicants(f) : prime_implicants_of_negation(f);
  std::vector<Term> out;
  for (const auto& t : candidates) {
    auto lits = t.literals();
    if (std::all_of(lits.begin(), lits.end(), [&](Literal l) { return x.satisfies(l); })) out.push_back(t);
  }
  return out;
}

// --- complete reasons -------------------------------------------------------------

ReasonCircuit complete_reason(const DecisionFunction& f, const Term& x) {
  require_complete(f, x);
  const SddManager& m = *f.manager;
  const Vtree& vt = m.vtree();
  for (VtreeId v = 0; v < vt.size(); ++v)
    if (!vt.is_leaf(v) && !vt.is_leaf(vt.left(v)))
      throw std::invalid_argument("complete reasons need an OBDD (right-linear vtree)");
  ReasonCircuit r{NnfCircuit(f.var_count()), x, f(x)};
  NnfCircuit& c = r.circuit;
  const NodeIndex t = c.add_true(), fl = c.add_false();
  auto mk_and = [&](NodeIndex a, NodeIndex b) -> NodeIndex {
    if (a == fl || b == fl) return fl;
    if (a == t) return b;
    if (b == t) return a;
    if (a == b) return a;
    return c.add_and({a, b});
  };
  auto mk_or = [&](NodeIndex a, NodeIndex b) -> NodeIndex {
    if (a == t || b == t) return t;
    if (a == fl) return b;
    if (b == fl) return a;
    if (a == b) return a;
    return c.add_or({a, b});
  };
  std::map<SddId, NodeIndex> memo;
  std::function<NodeIndex(SddId)> reason = [&](SddId id) -> NodeIndex {
    if (m.is_constant(id)) return (id == kSddTrue) == r.decision ? t : fl;
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    Var var;
    SddId high, low;
    if (m.kind(id) == SddKind::Literal) {
      Literal l = m.literal_of(id);
      var = l.var();
      high = l.positive() ? kSddTrue : kSddFalse;
      low = l.positive() ? kSddFalse : kSddTrue;
    } else {
      auto elems = m.elements(id);
      Literal p0 = m.literal_of(elems[0].prime);
      var = p0.var();
      high = p0.positive() ? elems[0].sub : elems[1].sub;
      low = p0.positive() ? elems[1].sub : elems[0].sub;
    }
    const bool value = x.at(var);
    NodeIndex agree = reason(value ? high : low), disagree = reason(value ? low : high);
    NodeIndex lit = c.add_literal(Literal(var, value));
    NodeIndex out = mk_or(mk_and(lit, agree), mk_and(agree, disagree));
    memo.emplace(id, out);
    return out;
  };
  c.set_root(reason(f.root));
  return r;
}

bool decision_sticks(const ReasonCircuit& r, const Term& y) { return evaluate(r.circuit, y); }

// --- bias -------------------------------------------------------------------------

bool decision_biased(const DecisionFunction& f, const Term& x, const std::vector<Var>& protected_vars) {
  require_complete(f, x);
  Term unprotected = x;
  for (Var v : protected_vars) unprotected.unset(v);
  return !f.manager->is_constant(f.manager->condition(f.root, unprotected));
}

bool classifier_biased(const DecisionFunction& f, const std::vector<Var>& protected_vars) {
  for (Var v : protected_vars) {
    Term pos, neg;
    pos.set(v, true);
    neg.set(v, false);
    if (f.manager->condition(f.root, pos) != f.manager->condition(f.root, neg)) return true;
  }
  return false;
}

// --- robustness -------------------------------------------------------------------

namespace {

constexpr unsigned kInfinite = static_cast<unsigned>(-1);

unsigned add_costs(unsigned a, unsigned b) { return a == kInfinite || b == kInfinite ? kInfinite : a + b; }

/// Fewest flips of x making `root` evaluate to `target`, over all nodes in `order`.
unsigned flip_cost(const SddManager& m, const std::vector<SddId>& order, SddId root, const Term& x, bool target,
                   std::vector<std::array<unsigned, 2>>& cost, std::map<SddId, std::size_t>& slot) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    SddId id = order[i];
    auto& c = cost[i];
    switch (m.kind(id)) {
      case SddKind::False: c = {0, kInfinite}; break;
      case SddKind::True: c = {kInfinite, 0}; break;
      case SddKind::Literal: {
        bool sat = x.satisfies(m.literal_of(id));
        c = {sat ? 1u : 0u, sat ? 0u : 1u};
        break;
      }
      case SddKind::Decision: {
        c = {kInfinite, kInfinite};
        for (const auto& e : m.elements(id)) {
          unsigned prime = cost[slot.at(e.prime)][1];
          const auto& sub = cost[slot.at(e.sub)];
          c[0] = std::min(c[0], add_costs(prime, sub[0]));
          c[1] = std::min(c[1], add_costs(prime, sub[1]));
        }
        break;
      }
    }
  }
  return cost[slot.at(root)][target ? 1 : 0];
}

struct RobustnessPass {
  const SddManager& m;
  SddId root;
  std::vector<SddId> order;
  std::map<SddId, std::size_t> slot;
  std::vector<std::array<unsigned, 2>> cost;
  RobustnessPass(const SddManager& mgr, SddId r) : m(mgr), root(r), order(mgr.topological(r)), cost(order.size()) {
    for (std::size_t i = 0; i < order.size(); ++i) slot[order[i]] = i;
  }
  std::optional<unsigned> operator()(const Term& x) {
    if (m.is_constant(root)) return std::nullopt;
    bool decision = m.evaluate(root, x);
    unsigned c = flip_cost(m, order, root, x, !decision, cost, slot);
    if (c == kInfinite) return std::nullopt;
    return c;
  }
};

}  // namespace

std::optional<unsigned> decision_robustness(const DecisionFunction& f, const Term& x) {
  require_complete(f, x);
  RobustnessPass pass(*f.manager, f.root);
  return pass(x);
}

RobustnessHistogram robustness_histogram(const DecisionFunction& f) {
  const Var n = f.var_count();
  if (n > 16) throw CapacityError("exhaustive robustness limited to 16 variables");
  RobustnessPass pass(*f.manager, f.root);
  RobustnessHistogram h;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
    auto r = pass(Term::from_bits(n, b));
    if (r)
      ++h.levels[*r];
    else
      ++h.unbounded;
  }
  return h;
}

double model_robustness(const DecisionFunction& f) {
  if (f.manager->is_constant(f.root)) throw SemanticError("model robustness is undefined for a constant classifier");
  RobustnessHistogram h = robustness_histogram(f);
  double total = 0, count = 0;
  for (auto [level, c] : h.levels) {
    total += static_cast<double>(level) * static_cast<double>(c);
    count += static_cast<double>(c);
  }
  return total / count;
}

std::string histogram_csv(const RobustnessHistogram& h) {
  std::ostringstream out;
  out << "level,count\n";
  for (auto [level, c] : h.levels) out << level << ',' << c << '\n';
  if (h.unbounded) out << "unbounded," << h.unbounded << '\n';
  return out.str();
}

}  // namespace kc
