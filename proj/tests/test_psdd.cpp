#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kc/psdd.hpp"
#include "kc/sdd.hpp"
#include "oracles.hpp"

using namespace kc;

namespace {

Cnf enrollment_constraint() { return parse_dimacs_string("p cnf 4 3\n3 1 0\n-4 3 0\n-2 4 1 0\n"); }

Dataset models_of(const Cnf& cnf, std::uint64_t count_each = 1) {
  Dataset d;
  d.var_count = cnf.var_count;
  for (std::uint64_t b = 0; b < (1ULL << cnf.var_count); ++b)
    if (oracle::cnf_true(cnf, b)) d.rows.push_back({oracle::term_of(cnf.var_count, b), count_each});
  return d;
}

double total_probability(const Psdd& p, Var n) {
  double total = 0;
  for (std::uint64_t b = 0; b < (1ULL << n); ++b) total += p.probability(oracle::term_of(n, b));
  return total;
}

void randomize(Psdd& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (PsddId i = 0; i < p.size(); ++i) {
    auto& n = p.node(i);
    if (n.kind == PsddKind::Top) n.theta = u(rng);
    if (n.kind != PsddKind::Decision) continue;
    double total = 0;
    for (auto& e : n.elements) total += e.theta = u(rng);
    for (auto& e : n.elements) e.theta /= total;
  }
}

}  // namespace

TEST(Dataset, CsvParsingAndErrors) {
  Dataset d = parse_dataset_csv_string("L,K,count,P\n1,0,3,1\n0,0,1,1\n");
  EXPECT_EQ(d.var_count, 3u);
  EXPECT_EQ(d.names, (std::vector<std::string>{"L", "K", "P"}));
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_EQ(d.rows[0].count, 3u);
  EXPECT_TRUE(d.rows[0].term.at(3));
  EXPECT_FALSE(d.rows[0].term.at(2));
  EXPECT_EQ(d.total(), 4u);
  EXPECT_THROW(parse_dataset_csv_string("A,B\n1\n"), ParseError);
  EXPECT_THROW(parse_dataset_csv_string("A,B\n1,2\n"), ParseError);
  EXPECT_THROW(parse_dataset_csv_string("A,count\n1,0\n"), ParseError);
  EXPECT_THROW(parse_dataset_csv_string(""), ParseError);
  std::ostringstream out;
  write_dataset_csv(out, d);
  EXPECT_EQ(out.str(), "L,K,P,count\n1,0,1,3\n0,0,1,1\n");
}

TEST(Psdd, UniformEmpiricalDistributionOverNineModels) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  Cnf cnf = enrollment_constraint();
  SddId f = m.compile_cnf(cnf);
  Psdd p = learn_ml(m, f, models_of(cnf));
  for (std::uint64_t b = 0; b < 16; ++b) {
    double expected = oracle::cnf_true(cnf, b) ? 1.0 / 9 : 0.0;
    EXPECT_NEAR(p.probability(oracle::term_of(4, b)), expected, 1e-12);
  }
  EXPECT_NEAR(p.log_likelihood(models_of(cnf)), 9 * std::log(1.0 / 9), 1e-9);
  auto mpe = p.mpe(Term(4));
  EXPECT_NEAR(mpe.probability, 1.0 / 9, 1e-12);
}

TEST(Psdd, SingleRepeatedExampleGetsProbabilityOne) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId f = m.compile_cnf(enrollment_constraint());
  Dataset d;
  d.var_count = 4;
  Term x = oracle::term_of(4, 0b0101);  // L, P
  d.rows.push_back({x, 7});
  Psdd p = learn_ml(m, f, d);
  EXPECT_NEAR(p.probability(x), 1.0, 1e-12);
  EXPECT_NEAR(p.log_likelihood(d), 0.0, 1e-12);
}

TEST(Psdd, FalsifyingRowIsNamed) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId f = m.compile_cnf(enrollment_constraint());
  Dataset d;
  d.var_count = 4;
  d.rows.push_back({oracle::term_of(4, 0b0101), 1});
  d.rows.push_back({oracle::term_of(4, 0b0000), 1});
  try {
    learn_ml(m, f, d);
    FAIL() << "expected a SemanticError";
  } catch (const SemanticError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(Psdd::from_sdd(m, kSddFalse), SemanticError);
}

TEST(Psdd, NormalizationSupportAndOptimality) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 15; ++round) {
    Var n = 4 + static_cast<Var>(rng() % 7);
    Cnf cnf = oracle::random_cnf(rng, n, n / 2 + 1, 3);
    auto vars = oracle::iota_vars(n);
    SddManager m(round % 2 ? Vtree::random(vars, rng()) : Vtree::right_linear(vars));
    SddId f = m.compile_cnf(cnf);
    if (f == kSddFalse) continue;
    auto models = oracle::table_of(cnf);
    Dataset data;
    data.var_count = n;
    std::vector<std::uint64_t> support;
    for (std::uint64_t b = 0; b < models.size(); ++b)
      if (models[b]) support.push_back(b);
    for (int r = 0; r < 30; ++r) data.rows.push_back({oracle::term_of(n, support[rng() % support.size()]), 1 + rng() % 3});

    for (double laplace : {0.0, 1.0}) {
      Psdd p = learn_ml(m, f, data, {laplace});
      EXPECT_NEAR(total_probability(p, n), 1.0, 1e-9);
      for (std::uint64_t b = 0; b < models.size(); ++b) {
        double pr = p.probability(oracle::term_of(n, b));
        if (!models[b]) EXPECT_EQ(pr, 0.0);
        EXPECT_EQ(p.supports(oracle::term_of(n, b)), static_cast<bool>(models[b]));
      }
    }
    Psdd best = learn_ml(m, f, data);
    double ll = best.log_likelihood(data);
    for (int k = 0; k < 20; ++k) {
      Psdd other = best;
      randomize(other, rng);
      EXPECT_NEAR(total_probability(other, n), 1.0, 1e-9);
      EXPECT_GE(ll + 1e-9, other.log_likelihood(data));
    }
  }
}

TEST(Psdd, SmoothingMovesTowardUniform) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  Cnf cnf = enrollment_constraint();
  SddId f = m.compile_cnf(cnf);
  Dataset d;
  d.var_count = 4;
  d.rows.push_back({oracle::term_of(4, 0b0101), 5});
  d.rows.push_back({oracle::term_of(4, 0b0100), 1});
  // Every parameter moves monotonically toward its node's uniform value.
  std::vector<double> previous;
  for (double a : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
    Psdd p = learn_ml(m, f, d, {a});
    std::vector<double> gaps;
    for (PsddId i = 0; i < p.size(); ++i) {
      const auto& n = p.node(i);
      if (n.kind == PsddKind::Top) gaps.push_back(std::abs(n.theta - 0.5));
      for (const auto& e : n.elements) gaps.push_back(std::abs(e.theta - 1.0 / static_cast<double>(n.elements.size())));
    }
    if (!previous.empty())
      for (std::size_t k = 0; k < gaps.size(); ++k) EXPECT_LE(gaps[k], previous[k] + 1e-15);
    previous = gaps;
  }
  EXPECT_GT(*std::max_element(previous.begin(), previous.end()), 0.0);
}

TEST(Psdd, MarginalAndMpeMatchEnumeration) {
  std::mt19937_64 rng(43);
  for (int round = 0; round < 15; ++round) {
    Var n = 3 + static_cast<Var>(rng() % 8);
    Cnf cnf = oracle::random_cnf(rng, n, n / 2, 3);
    SddManager m(Vtree::random(oracle::iota_vars(n), rng()));
    SddId f = m.compile_cnf(cnf);
    if (f == kSddFalse) continue;
    Psdd p = Psdd::from_sdd(m, f);
    randomize(p, rng);
    std::vector<double> table(1ULL << n);
    for (std::uint64_t b = 0; b < table.size(); ++b) table[b] = p.probability(oracle::term_of(n, b));
    EXPECT_NEAR(p.marginal(Term(n)), 1.0, 1e-9);
    for (int q = 0; q < 10; ++q) {
      Term t(n);
      std::uint64_t mask = 0, value = 0;
      for (Var v = 1; v <= n; ++v)
        if (rng() % 3 == 0) {
          bool b = rng() & 1U;
          t.set(v, b);
          mask |= 1ULL << (v - 1);
          value |= static_cast<std::uint64_t>(b) << (v - 1);
        }
      double expected = 0, best = 0;
      for (std::uint64_t b = 0; b < table.size(); ++b)
        if ((b & mask) == value) {
          expected += table[b];
          best = std::max(best, table[b]);
        }
      EXPECT_NEAR(p.marginal(t), expected, 1e-9);
      for (Var v = 1; v <= n; ++v)
        if (!t.bound(v)) {
          Term t1 = t, t0 = t;
          t1.set(v, true);
          t0.set(v, false);
          EXPECT_NEAR(p.marginal(t), p.marginal(t1) + p.marginal(t0), 1e-9);
          break;
        }
      if (best == 0) {
        EXPECT_THROW(p.mpe(t), ZeroProbabilityError);
        continue;
      }
      auto mpe = p.mpe(t);
      EXPECT_NEAR(mpe.probability, best, 1e-12);
      EXPECT_NEAR(p.probability(mpe.state), best, 1e-12);
      for (Literal l : t.literals()) EXPECT_TRUE(mpe.state.satisfies(l));
    }
  }
}

TEST(Psdd, MpeOfCompleteEvidenceIsItself) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId f = m.compile_cnf(enrollment_constraint());
  Psdd p = Psdd::from_sdd(m, f);
  Term x = oracle::term_of(4, 0b1101);
  EXPECT_EQ(p.mpe(x).state, x);
}

TEST(Psdd, SamplesStayInSupportAndMatchParameters) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  Cnf cnf = enrollment_constraint();
  SddId f = m.compile_cnf(cnf);
  Psdd p = Psdd::from_sdd(m, f);
  std::mt19937_64 rng(47);
  randomize(p, rng);
  const std::size_t n = 10000;
  Dataset s = p.sample(7, n);
  EXPECT_EQ(s.rows.size(), n);
  std::vector<double> freq(16, 0);
  for (const auto& r : s.rows) {
    std::uint64_t b = 0;
    for (Var v = 1; v <= 4; ++v) b |= static_cast<std::uint64_t>(r.term.at(v)) << (v - 1);
    ASSERT_TRUE(oracle::cnf_true(cnf, b));
    freq[b] += 1;
  }
  for (std::uint64_t b = 0; b < 16; ++b) {
    double pr = p.probability(oracle::term_of(4, b));
    double sigma = std::sqrt(pr * (1 - pr) / n);
    EXPECT_NEAR(freq[b] / n, pr, 3 * sigma + 1e-12);
  }
  Dataset again = p.sample(7, n);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(again.rows[i].term, s.rows[i].term);
}

TEST(Psdd, UniformOverModels) {
  SddManager m(Vtree::random(oracle::iota_vars(6), 5));
  Cnf cnf = parse_dimacs_string("p cnf 6 3\n1 2 0\n-3 4 5 0\n-6 -1 0\n");
  SddId f = m.compile_cnf(cnf);
  Psdd p = Psdd::from_sdd(m, f);
  p.set_uniform_over_models();
  double count = static_cast<double>(oracle::count(oracle::table_of(cnf)));
  for (std::uint64_t b = 0; b < 64; ++b)
    EXPECT_NEAR(p.probability(oracle::term_of(6, b)), oracle::cnf_true(cnf, b) ? 1.0 / count : 0.0, 1e-12);
}

TEST(Psdd, FileRoundTrip) {
  SddManager m(Vtree::balanced({1, 2, 3, 4}));
  SddId f = m.compile_cnf(enrollment_constraint());
  Psdd p = Psdd::from_sdd(m, f);
  std::mt19937_64 rng(53);
  randomize(p, rng);
  std::string text = to_psdd_string(p);
  Psdd q = read_psdd_string(text, m.vtree());
  EXPECT_EQ(to_psdd_string(q), text);
  for (std::uint64_t b = 0; b < 16; ++b)
    EXPECT_NEAR(q.probability(oracle::term_of(4, b)), p.probability(oracle::term_of(4, b)), 1e-15);
  EXPECT_THROW(read_psdd_string("psdd 1\nL 0 2 1\n", m.vtree()), ParseError);
  EXPECT_THROW(read_psdd_string("psdd 2\nT 0 0 1\nP 0 0 0.7 1 0.2\n", m.vtree()), ParseError);
}
