#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "kc/xai.hpp"
#include "oracles.hpp"

using namespace kc;

namespace {

/// Function given by a truth table, compiled over a right-linear vtree.
DecisionFunction from_table(Var n, const oracle::TruthTable& t, std::vector<std::string> names = {}) {
  if (names.empty()) names = default_names(n);
  DecisionFunction f{std::make_shared<SddManager>(Vtree::right_linear(oracle::iota_vars(n))), kSddFalse, names};
  SddManager& m = *f.manager;
  for (std::uint64_t b = 0; b < t.size(); ++b) {
    if (!t[b]) continue;
    SddId minterm = kSddTrue;
    for (Var v = 1; v <= n; ++v) minterm = m.conjoin(minterm, m.literal(Literal(v, oracle::bit(b, v))));
    f.root = m.disjoin(f.root, minterm);
  }
  return f;
}

/// Terms over n variables, as (care mask, value bits).
struct BitTerm {
  std::uint64_t care, value;
};

bool term_implies(const oracle::TruthTable& t, Var n, BitTerm term, bool target) {
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b)
    if ((b & term.care) == term.value && t[b] != target) return false;
  return true;
}

/// Prime implicants of `target`-valued region by enumeration of all 3^n terms.
std::set<std::vector<Literal>> brute_primes(const oracle::TruthTable& t, Var n, bool target) {
  std::set<std::vector<Literal>> out;
  for (std::uint64_t care = 0; care < (std::uint64_t{1} << n); ++care)
    for (std::uint64_t value = care;; value = (value - 1) & care) {
      if (term_implies(t, n, {care, value}, target)) {
        bool prime = true;
        for (Var v = 1; v <= n && prime; ++v) {
          std::uint64_t m = std::uint64_t{1} << (v - 1);
          if ((care & m) && term_implies(t, n, {care & ~m, value & ~m}, target)) prime = false;
        }
        if (prime) {
          std::vector<Literal> lits;
          for (Var v = 1; v <= n; ++v)
            if (oracle::bit(care, v)) lits.emplace_back(v, oracle::bit(value, v));
          out.insert(lits);
        }
      }
      if (value == 0) break;
    }
  return out;
}

std::set<std::vector<Literal>> as_set(const std::vector<Term>& terms) {
  std::set<std::vector<Literal>> out;
  for (const auto& t : terms) out.insert(t.literals());
  return out;
}

/// Hamming distance to the nearest instance with a different value.
std::optional<unsigned> brute_robustness(const oracle::TruthTable& t, std::uint64_t x) {
  std::optional<unsigned> best;
  for (std::uint64_t y = 0; y < t.size(); ++y)
    if (t[y] != t[x]) {
      unsigned d = static_cast<unsigned>(std::popcount(x ^ y));
      if (!best || d < *best) best = d;
    }
  return best;
}

oracle::TruthTable random_table(std::mt19937_64& rng, Var n) {
  return oracle::table_of(n, [&](std::uint64_t) { return rng() % 2 == 0; });
}

// f = AB + AC + B~C over A=1, B=2, C=3.
oracle::TruthTable admission_table() {
  return oracle::table_of(3, [](std::uint64_t b) {
    bool a = oracle::bit(b, 1), bb = oracle::bit(b, 2), c = oracle::bit(b, 3);
    return (a && bb) || (a && c) || (bb && !c);
  });
}

std::vector<Literal> lits(std::initializer_list<int> codes) {
  std::vector<Literal> out;
  for (int c : codes) out.emplace_back(static_cast<Var>(std::abs(c)), c > 0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(PrimeImplicants, ThreeVariableExample) {
  auto f = from_table(3, admission_table(), {"A", "B", "C"});
  EXPECT_EQ(as_set(prime_implicants(f)), (std::set{lits({1, 2}), lits({1, 3}), lits({2, -3})}));
  EXPECT_EQ(as_set(prime_implicants_of_negation(f)), (std::set{lits({-1, 3}), lits({-2, -3}), lits({-1, -2})}));
}

TEST(PrimeImplicants, MatchEnumerationOnRandomFunctions) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 60; ++round) {
    Var n = 1 + static_cast<Var>(rng() % 5);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    EXPECT_EQ(as_set(prime_implicants(f)), brute_primes(t, n, true)) << round;
    EXPECT_EQ(as_set(prime_implicants_of_negation(f)), brute_primes(t, n, false)) << round;
  }
}

TEST(SufficientReasons, ThreeVariableExample) {
  auto f = from_table(3, admission_table(), {"A", "B", "C"});
  Term yes = parse_term("A B ~C", f.names);
  EXPECT_TRUE(f(yes));
  EXPECT_EQ(as_set(sufficient_reasons(f, yes)), (std::set{lits({1, 2}), lits({2, -3})}));
  Term no = parse_term("~A B C", f.names);
  EXPECT_FALSE(f(no));
  EXPECT_EQ(as_set(sufficient_reasons(f, no)), (std::set{lits({-1, 3})}));
  EXPECT_THROW(sufficient_reasons(f, parse_term("A B", f.names)), std::invalid_argument);
}

TEST(SufficientReasons, EachReasonImpliesTheDecision) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 40; ++round) {
    Var n = 2 + static_cast<Var>(rng() % 4);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    std::uint64_t x = rng() % t.size();
    Term xt = Term::from_bits(n, x);
    auto reasons = sufficient_reasons(f, xt);
    EXPECT_FALSE(reasons.empty());
    for (const auto& r : reasons) {
      EXPECT_TRUE(implies(f, r, t[x]));
      for (Literal l : r.literals()) EXPECT_TRUE(xt.satisfies(l));
    }
  }
}

TEST(Terms, ParseAndPrint) {
  std::vector<std::string> names{"A", "B", "C"};
  Term t = parse_term("~C, A", names);
  EXPECT_EQ(term_to_string(t, names), "A ~C");
  EXPECT_EQ(term_to_string(Term(3), names), "true");
  EXPECT_THROW(parse_term("D", names), std::invalid_argument);
  EXPECT_THROW(parse_term("A ~A", names), std::invalid_argument);
}

TEST(CompleteReason, MatchesForcingCheck) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 40; ++round) {
    Var n = 2 + static_cast<Var>(rng() % 4);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    std::uint64_t x = rng() % t.size();
    auto r = complete_reason(f, Term::from_bits(n, x));
    EXPECT_EQ(r.decision, t[x]);
    for (std::uint64_t y = 0; y < t.size(); ++y) {
      // Literals of x kept by y: do they force the decision?
      std::uint64_t shared = ~(x ^ y) & (t.size() - 1);
      bool forced = term_implies(t, n, {shared, x & shared}, t[x]);
      EXPECT_EQ(decision_sticks(r, Term::from_bits(n, y)), forced) << round << " y=" << y;
    }
  }
}

TEST(CompleteReason, RejectsNonObddVtree) {
  DecisionFunction f{std::make_shared<SddManager>(Vtree::balanced({1, 2, 3, 4})), kSddFalse, default_names(4)};
  f.root = f.manager->literal(Literal(1, true));
  EXPECT_THROW(complete_reason(f, Term::from_bits(4, 0)), std::invalid_argument);
}

TEST(Bias, ProtectedFeatureExample) {
  // R + E W over R=1, E=2, W=3, with E protected.
  auto t = oracle::table_of(3, [](std::uint64_t b) { return oracle::bit(b, 1) || (oracle::bit(b, 2) && oracle::bit(b, 3)); });
  auto f = from_table(3, t, {"R", "E", "W"});
  EXPECT_TRUE(classifier_biased(f, {2}));
  EXPECT_FALSE(classifier_biased(f, {}));
  EXPECT_FALSE(decision_biased(f, parse_term("R E W", f.names), {2}));
  EXPECT_TRUE(decision_biased(f, parse_term("~R E W", f.names), {2}));
  EXPECT_FALSE(decision_biased(f, parse_term("~R E ~W", f.names), {2}));
}

TEST(Bias, MatchesFlipEnumeration) {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 40; ++round) {
    Var n = 2 + static_cast<Var>(rng() % 4);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    std::vector<Var> prot;
    std::uint64_t mask = 0;
    for (Var v = 1; v <= n; ++v)
      if (rng() % 3 == 0) {
        prot.push_back(v);
        mask |= std::uint64_t{1} << (v - 1);
      }
    bool any = false;
    for (std::uint64_t x = 0; x < t.size(); ++x) {
      bool flips = false;
      for (std::uint64_t y = 0; y < t.size(); ++y)
        if (((x ^ y) & ~mask) == 0 && t[x] != t[y]) flips = true;
      any = any || flips;
      EXPECT_EQ(decision_biased(f, Term::from_bits(n, x), prot), flips);
    }
    EXPECT_EQ(classifier_biased(f, prot), any);
  }
}

TEST(Robustness, MatchesHammingSearch) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 40; ++round) {
    Var n = 1 + static_cast<Var>(rng() % 6);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    RobustnessHistogram expected;
    for (std::uint64_t x = 0; x < t.size(); ++x) {
      auto want = brute_robustness(t, x);
      EXPECT_EQ(decision_robustness(f, Term::from_bits(n, x)), want);
      if (want)
        ++expected.levels[*want];
      else
        ++expected.unbounded;
    }
    auto h = robustness_histogram(f);
    EXPECT_EQ(h.levels, expected.levels);
    EXPECT_EQ(h.unbounded, expected.unbounded);
  }
}

TEST(Robustness, GeneralVtreeAndCsv) {
  // Parity of 4 variables on a balanced vtree: every instance flips with one change.
  DecisionFunction f{std::make_shared<SddManager>(Vtree::balanced({1, 2, 3, 4})), kSddFalse, default_names(4)};
  SddManager& m = *f.manager;
  SddId p = kSddFalse;
  for (Var v = 1; v <= 4; ++v) {
    SddId x = m.literal(Literal(v, true));
    p = m.disjoin(m.conjoin(p, m.negate(x)), m.conjoin(m.negate(p), x));
  }
  f.root = p;
  auto h = robustness_histogram(f);
  EXPECT_EQ(histogram_csv(h), "level,count\n1,16\n");
  EXPECT_DOUBLE_EQ(model_robustness(f), 1.0);
  f.root = kSddTrue;
  EXPECT_EQ(histogram_csv(robustness_histogram(f)), "level,count\nunbounded,16\n");
  EXPECT_THROW(model_robustness(f), SemanticError);
}

TEST(NaiveBayes, CompiledFunctionMatchesPosterior) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  int checked = 0;
  for (int round = 0; round < 30; ++round) {
    NaiveBayes nb;
    nb.prior = u(rng);
    nb.threshold = u(rng);
    std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) nb.features.push_back({"f" + std::to_string(i), u(rng), u(rng)});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto f = compile_nb(nb, order);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
      double pos = nb.prior, neg = 1 - nb.prior;
      for (std::size_t i = 0; i < n; ++i) {
        bool v = oracle::bit(b, static_cast<Var>(i + 1));
        pos *= v ? nb.features[i].pos_likelihood : 1 - nb.features[i].pos_likelihood;
        neg *= v ? nb.features[i].neg_likelihood : 1 - nb.features[i].neg_likelihood;
      }
      double posterior = pos / (pos + neg);
      Term x = Term::from_bits(static_cast<Var>(n), b);
      EXPECT_EQ(f(x), nb_decision(nb, x));
      if (std::abs(posterior - nb.threshold) > 1e-9) {
        EXPECT_EQ(f(x), posterior >= nb.threshold);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(NaiveBayes, JsonAndZeroLikelihoods) {
  auto nb = parse_naive_bayes_string(R"({"prior": 0.5, "threshold": 0.5,
    "features": [{"name": "a", "pos_likelihood": 1.0, "neg_likelihood": 0.5},
                 {"name": "b", "pos_likelihood": 0.5, "neg_likelihood": 0.0}],
    "protected": ["b"]})");
  EXPECT_EQ(nb.names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(nb.protected_features, std::vector<std::string>{"b"});
  // ~a rules out the positive class; b rules out the negative class.
  EXPECT_THROW(nb_decision(nb, parse_term("~a b", nb.names())), SemanticError);
  EXPECT_THROW(compile_nb(nb), SemanticError);
  nb.features[1].neg_likelihood = 0.25;
  auto f = compile_nb(nb);
  EXPECT_FALSE(f(parse_term("~a b", f.names)));
  EXPECT_TRUE(f(parse_term("a b", f.names)));
  EXPECT_THROW(parse_naive_bayes_string(R"({"prior": 1.5, "threshold": 0.5, "features": []})"), ParseError);
  EXPECT_THROW(parse_naive_bayes_string("{"), ParseError);
}

TEST(Forest, MajorityMatchesVote) {
  auto forest = parse_forest_string(R"({"features": ["a", "b", "c"], "trees": [
    {"feature": "a", "low": false, "high": {"feature": "b", "low": false, "high": true}},
    {"feature": "c", "low": {"feature": "a", "low": false, "high": true}, "high": true},
    {"feature": "b", "low": false, "high": {"feature": "c", "low": true, "high": false}}]})");
  auto f = compile_forest(forest);
  auto& trees = forest.trees;
  for (std::uint64_t b = 0; b < 8; ++b) {
    bool a = oracle::bit(b, 1), bb = oracle::bit(b, 2), c = oracle::bit(b, 3);
    int votes = (a && bb) + (c || a) + (bb && !c);
    Term x = Term::from_bits(3, b);
    EXPECT_EQ(forest_vote(forest, x), votes >= 2) << b;
    EXPECT_EQ(f(x), votes >= 2) << b;
  }
  EXPECT_EQ(trees.size(), 3u);
  trees.pop_back();
  EXPECT_THROW(compile_forest(forest), std::invalid_argument);
  EXPECT_THROW(parse_forest_string(R"({"features": ["a"], "trees": [{"feature": "z", "low": true, "high": false}]})"),
               ParseError);
}

TEST(Forest, RandomForestsMatchVote) {
  std::mt19937_64 rng(13);
  const Var n = 5;
  std::function<DecisionTree(int)> grow = [&](int depth) {
    DecisionTree t;
    if (depth == 0 || rng() % 4 == 0) {
      t.leaf_value = rng() % 2;
      return t;
    }
    t.feature = 1 + static_cast<Var>(rng() % n);
    t.low = std::make_unique<DecisionTree>(grow(depth - 1));
    t.high = std::make_unique<DecisionTree>(grow(depth - 1));
    return t;
  };
  for (int round = 0; round < 20; ++round) {
    DecisionForest forest;
    forest.features = default_names(n);
    std::size_t k = 1 + 2 * (rng() % 3);
    for (std::size_t i = 0; i < k; ++i) forest.trees.push_back(grow(4));
    auto f = compile_forest(forest);
    for (std::uint64_t b = 0; b < 32; ++b) EXPECT_EQ(f(Term::from_bits(n, b)), forest_vote(forest, Term::from_bits(n, b)));
  }
}

TEST(DecisionFunction, FromCnf) {
  Cnf cnf = parse_dimacs_string("p cnf 3 2\n1 2 0\n-3 0\n");
  auto f = function_from_cnf(cnf, {"p", "q", "r"});
  EXPECT_EQ(f.var_of("q"), 2u);
  EXPECT_THROW(f.var_of("z"), std::invalid_argument);
  auto t = oracle::table_of(cnf);
  for (std::uint64_t b = 0; b < 8; ++b) EXPECT_EQ(f(Term::from_bits(3, b)), t[b]);
  EXPECT_THROW(function_from_cnf(cnf, {"p"}), std::invalid_argument);
}

TEST(Bias, ProtectedRichHometown) {
  auto t = oracle::table_of(3, [](std::uint64_t b) { return oracle::bit(b, 1) || (oracle::bit(b, 2) && oracle::bit(b, 3)); });
  auto f = from_table(3, t, {"R", "E", "W"});
  EXPECT_FALSE(decision_biased(f, parse_term("R E W", f.names), {1}));
  EXPECT_TRUE(decision_biased(f, parse_term("R ~E W", f.names), {1}));
  EXPECT_TRUE(classifier_biased(f, {1}));
}

TEST(CompleteReason, EqualsDisjunctionOfSufficientReasons) {
  std::mt19937_64 rng(29);
  for (int round = 0; round < 30; ++round) {
    Var n = 2 + static_cast<Var>(rng() % 5);
    auto t = random_table(rng, n);
    auto f = from_table(n, t);
    Term x = Term::from_bits(n, rng() % t.size());
    auto r = complete_reason(f, x);
    auto reasons = sufficient_reasons(f, x);
    EXPECT_TRUE(decision_sticks(r, x));
    for (std::uint64_t y = 0; y < t.size(); ++y) {
      Term yt = Term::from_bits(n, y);
      bool any = std::any_of(reasons.begin(), reasons.end(), [&](const Term& s) {
        auto ls = s.literals();
        return std::all_of(ls.begin(), ls.end(), [&](Literal l) { return yt.satisfies(l); });
      });
      EXPECT_EQ(decision_sticks(r, yt), any);
      if (decision_sticks(r, yt)) EXPECT_EQ(t[y], r.decision);
    }
  }
}

TEST(NaiveBayes, EquivalentModelsShareNodeAndExtremeThreshold) {
  NaiveBayes a;
  a.features = {{"x", 0.8, 0.3}, {"y", 0.6, 0.4}};
  NaiveBayes b = a;
  b.features[1] = {"y", 0.55, 0.45};  // same decisions: x alone decides
  auto fa = compile_nb(a);
  auto fb = compile_nb(b, {}, fa.manager);
  for (std::uint64_t bits = 0; bits < 4; ++bits) ASSERT_EQ(fa(Term::from_bits(2, bits)), fb(Term::from_bits(2, bits)));
  EXPECT_EQ(fa.root, fb.root);
  a.threshold = 0.999;
  EXPECT_EQ(compile_nb(a).root, kSddFalse);
}
