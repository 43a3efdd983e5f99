#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kc/nnf.hpp"
#include "kc/sdd.hpp"
#include "oracles.hpp"

using namespace kc;

namespace {

// L=1, K=2, P=3, A=4 with the vtree ((L,K),(P,A)).
Cnf enrollment_constraint() {
  return parse_dimacs_string("p cnf 4 3\n3 1 0\n-4 3 0\n-2 4 1 0\n");
}

oracle::TruthTable table_of(const SddManager& m, SddId f, Var n) {
  return oracle::table_of(n, [&](std::uint64_t b) { return m.evaluate(f, oracle::term_of(n, b)); });
}

void expect_canonical_elements(SddManager& m, SddId f) {
  for (SddId id : m.topological(f)) {
    if (m.kind(id) != SddKind::Decision) continue;
    auto elems = m.elements(id);
    std::vector<SddElement> copy(elems.begin(), elems.end());
    SddId any = kSddFalse;
    for (std::size_t i = 0; i < copy.size(); ++i) {
      EXPECT_NE(copy[i].prime, kSddFalse);
      any = m.disjoin(any, copy[i].prime);
      for (std::size_t j = i + 1; j < copy.size(); ++j) {
        EXPECT_EQ(m.conjoin(copy[i].prime, copy[j].prime), kSddFalse);
        EXPECT_NE(copy[i].sub, copy[j].sub);
      }
    }
    EXPECT_EQ(any, kSddTrue);
  }
}

}  // namespace

TEST(Sdd, TerminalsAreCanonical) {
  SddManager m(Vtree::balanced({1, 2}));
  EXPECT_EQ(m.literal(Literal(1, true)), m.literal(Literal(1, true)));
  EXPECT_EQ(m.conjoin(m.constant(true), m.literal(Literal(2, false))), m.literal(Literal(2, false)));
  EXPECT_EQ(m.conjoin(m.literal(Literal(1, true)), m.literal(Literal(1, false))), kSddFalse);
  EXPECT_EQ(m.disjoin(m.literal(Literal(1, true)), m.literal(Literal(1, false))), kSddTrue);
  EXPECT_EQ(m.negate(kSddTrue), kSddFalse);
}

TEST(Sdd, UnknownVariableAndForeignIds) {
  SddManager m(Vtree::balanced({1, 2}));
  EXPECT_THROW(m.literal(Literal(3, true)), std::invalid_argument);
  EXPECT_THROW(m.negate(12345), std::invalid_argument);
  Cnf cnf = parse_dimacs_string("p cnf 3 1\n1 3 0\n");
  EXPECT_THROW(m.compile_cnf(cnf), std::invalid_argument);
}

TEST(Sdd, EnrollmentConstraintCountsNine) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId f = m.compile_cnf(enrollment_constraint());
  EXPECT_EQ(m.model_count(f), 9);
  EXPECT_EQ(model_count(smooth(m.to_nnf(f)), {true}), 9);
  expect_canonical_elements(m, f);
}

TEST(Sdd, EmptyCnfIsTrue) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  Cnf empty;
  empty.var_count = 4;
  EXPECT_EQ(m.compile_cnf(empty), kSddTrue);
  EXPECT_EQ(m.model_count(kSddTrue), 16);
  EXPECT_EQ(sdd_size(m, kSddTrue), 0u);
}

TEST(Sdd, SizeOfSingleDecision) {
  SddManager m(Vtree::balanced({1, 2}));
  // (1 and 2) or (not 1 and not 2): elements (1,2), (~1,~2).
  SddId a = m.literal(Literal(1, true)), b = m.literal(Literal(2, true));
  SddId eq = m.disjoin(m.conjoin(a, b), m.conjoin(m.negate(a), m.negate(b)));
  EXPECT_EQ(sdd_size(m, eq), 2u);
  EXPECT_EQ(m.decision_count(eq), 1u);
}

TEST(Sdd, ConditionExamples) {
  SddManager m(Vtree::balanced({1, 2}));
  SddId a = m.literal(Literal(1, true)), b = m.literal(Literal(2, true));
  Term t;
  t.set(1, true);
  EXPECT_EQ(m.condition(m.conjoin(a, b), t), b);
  t.set(2, true);
  EXPECT_EQ(m.condition(m.conjoin(a, b), t), kSddTrue);
}

TEST(Sdd, NegationIsInvolutive) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    SddManager m(Vtree::random(oracle::iota_vars(8), rng()));
    Cnf cnf = oracle::random_cnf(rng, 8, 10, 3);
    SddId f = m.compile_cnf(cnf);
    SddId g = m.negate(f);
    EXPECT_EQ(m.negate(g), f);
    EXPECT_EQ(m.model_count(f) + m.model_count(g), 256);
  }
}

TEST(Sdd, RandomCnfsMatchTruthTables) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 100; ++round) {
    Var n = 2 + static_cast<Var>(rng() % 9);
    Cnf cnf = oracle::random_cnf(rng, n, 1 + rng() % (2 * n), 1 + rng() % 3);
    auto vars = oracle::iota_vars(n);
    Vtree vt = round % 3 == 0 ? Vtree::right_linear(vars) : round % 3 == 1 ? Vtree::balanced(vars) : Vtree::random(vars, rng());
    SddManager m(vt);
    SddId f = m.compile_cnf(cnf, round % 2 ? ClauseOrder::Given : ClauseOrder::ByVtree);
    auto expected = oracle::table_of(cnf);
    ASSERT_EQ(table_of(m, f, n), expected);
    EXPECT_EQ(m.model_count(f), oracle::count(expected));
    NnfCircuit c = m.to_nnf(f);
    EXPECT_FALSE(check_decomposability(c).has_value());
    EXPECT_FALSE(check_determinism_exhaustive(c).has_value());
    EXPECT_EQ(model_count(smooth(c)), oracle::count(expected));
    expect_canonical_elements(m, f);
  }
}

TEST(Sdd, ApplyMatchesSetOperations) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 40; ++round) {
    SddManager m(Vtree::random(oracle::iota_vars(8), rng()));
    Cnf c1 = oracle::random_cnf(rng, 8, 6, 3), c2 = oracle::random_cnf(rng, 8, 6, 3);
    SddId a = m.compile_cnf(c1), b = m.compile_cnf(c2);
    auto ta = oracle::table_of(c1), tb = oracle::table_of(c2);
    auto conj = table_of(m, m.conjoin(a, b), 8);
    auto disj = table_of(m, m.disjoin(a, b), 8);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      ASSERT_EQ(conj[i], ta[i] && tb[i]);
      ASSERT_EQ(disj[i], ta[i] || tb[i]);
    }
    EXPECT_EQ(m.conjoin(a, b), m.conjoin(b, a));
    EXPECT_EQ(m.disjoin(a, b), m.disjoin(b, a));
  }
}

TEST(Sdd, ConditionMatchesTruthTable) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 40; ++round) {
    SddManager m(Vtree::balanced(oracle::iota_vars(7)));
    Cnf cnf = oracle::random_cnf(rng, 7, 8, 3);
    SddId f = m.compile_cnf(cnf);
    Term t(7);
    for (Var v = 1; v <= 7; ++v)
      if (rng() % 3 == 0) t.set(v, rng() & 1U);
    SddId g = m.condition(f, t);
    for (std::uint64_t b = 0; b < 128; ++b) {
      std::uint64_t fixed = b;
      for (Var v = 1; v <= 7; ++v)
        if (t.bound(v)) fixed = t.at(v) ? fixed | (1ULL << (v - 1)) : fixed & ~(1ULL << (v - 1));
      ASSERT_EQ(m.evaluate(g, oracle::term_of(7, b)), oracle::cnf_true(cnf, fixed));
    }
  }
}

TEST(Sdd, ExistsMatchesTruthTable) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 20; ++round) {
    SddManager m(Vtree::random(oracle::iota_vars(6), rng()));
    Cnf cnf = oracle::random_cnf(rng, 6, 6, 3);
    Var v = 1 + static_cast<Var>(rng() % 6);
    SddId g = m.exists(m.compile_cnf(cnf), v);
    for (std::uint64_t b = 0; b < 64; ++b) {
      std::uint64_t mask = 1ULL << (v - 1);
      bool expected = oracle::cnf_true(cnf, b | mask) || oracle::cnf_true(cnf, b & ~mask);
      ASSERT_EQ(m.evaluate(g, oracle::term_of(6, b)), expected);
    }
  }
}

TEST(Sdd, WmcMatchesEnumeration) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int round = 0; round < 30; ++round) {
    Var n = 3 + static_cast<Var>(rng() % 6);
    SddManager m(Vtree::random(oracle::iota_vars(n), rng()));
    Cnf cnf = oracle::random_cnf(rng, n, n, 2);
    SddId f = m.compile_cnf(cnf);
    WeightMap w(n);
    std::vector<double> pos(n + 1), neg(n + 1);
    for (Var v = 1; v <= n; ++v) {
      pos[v] = u(rng);
      neg[v] = u(rng);
      w.set(Literal(v, true), pos[v]);
      w.set(Literal(v, false), neg[v]);
    }
    double expected = 0;
    for (std::uint64_t b = 0; b < (1ULL << n); ++b)
      if (oracle::cnf_true(cnf, b)) expected += oracle::weight_of(b, n, pos, neg);
    EXPECT_NEAR(m.wmc(f, w), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(Sdd, CanonicityUnderRewriting) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId l = m.literal(Literal(1, true)), k = m.literal(Literal(2, true));
  SddId p = m.literal(Literal(3, true)), a = m.literal(Literal(4, true));
  SddId direct = m.compile_cnf(enrollment_constraint());
  // (P or L) and (not A or P) and (not K or A or L), built in a different order.
  SddId other = m.conjoin(m.disjoin(m.negate(k), m.disjoin(l, a)), m.conjoin(m.disjoin(m.negate(a), p), m.disjoin(l, p)));
  EXPECT_EQ(direct, other);
}

TEST(Sdd, FileRoundTrip) {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 10; ++round) {
    Vtree vt = Vtree::random(oracle::iota_vars(7), rng());
    SddManager m(vt);
    SddId f = m.compile_cnf(oracle::random_cnf(rng, 7, 7, 3));
    std::string text = to_sdd_string(m, f);
    SddManager fresh(vt);
    SddId g = read_sdd_string(text, fresh);
    EXPECT_EQ(fresh.model_count(g), m.model_count(f));
    EXPECT_EQ(table_of(fresh, g, 7), table_of(m, f, 7));
    EXPECT_EQ(read_sdd_string(text, m), f);
    EXPECT_EQ(to_sdd_string(m, f), text);
  }
}

TEST(Sdd, ReaderRejectsMisplacedPrimes) {
  SddManager m(Vtree::balanced({1, 2}));
  // vtree ids: leaf 1 = 0, root = 1, leaf 2 = 2. A prime over variable 2 is misplaced.
  EXPECT_THROW(read_sdd_string("sdd 3\nL 0 2 2\nL 1 2 -2\nD 2 1 2 0 1 1 0\n", m), ParseError);
  EXPECT_THROW(read_sdd_string("sdd 2\nL 0 0 1\n", m), ParseError);
  EXPECT_THROW(read_sdd_string("sdd 1\nD 0 1 1 7 8\n", m), ParseError);
}

// --- E-MajSat ---------------------------------------------------------------

TEST(SddMap, EmptyYIsWmcAndFullYIsMpe) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int round = 0; round < 20; ++round) {
    Var n = 6;
    SddManager m(Vtree::random(oracle::iota_vars(n), rng()));
    Cnf cnf = oracle::random_cnf(rng, n, 5, 3);
    SddId f = m.compile_cnf(cnf);
    WeightMap w(n);
    std::vector<double> pos(n + 1), neg(n + 1);
    for (Var v = 1; v <= n; ++v) {
      w.set(Literal(v, true), pos[v] = u(rng));
      w.set(Literal(v, false), neg[v] = u(rng));
    }
    EXPECT_NEAR(map_emajsat(m, f, w, {}).value, m.wmc(f, w), 1e-9);
    double best = 0;
    for (std::uint64_t b = 0; b < 64; ++b)
      if (oracle::cnf_true(cnf, b)) best = std::max(best, oracle::weight_of(b, n, pos, neg));
    auto r = map_emajsat(m, f, w, oracle::iota_vars(n));
    EXPECT_NEAR(r.value, best, 1e-12);
    if (best > 0) {
      std::uint64_t bits = 0;
      for (Var v = 1; v <= n; ++v) bits |= static_cast<std::uint64_t>(r.assignment.at(v)) << (v - 1);
      EXPECT_TRUE(oracle::cnf_true(cnf, bits));
      EXPECT_NEAR(oracle::weight_of(bits, n, pos, neg), best, 1e-12);
    }
  }
}

TEST(SddMap, RejectsUnconstrainedVtree) {
  SddManager m(Vtree::right_linear({1, 2, 3}));
  SddId f = m.literal(Literal(1, true));
  EXPECT_THROW(map_emajsat(m, f, WeightMap(3), {3}), std::invalid_argument);
  EXPECT_NO_THROW(map_emajsat(m, f, WeightMap(3), {1}));
}
