#include "kc/nnf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace kc {

namespace {

constexpr Var kMaxEnumerationVars = 24;

std::vector<char> reachable_mask(const NnfCircuit& c) {
  std::vector<char> reach(c.size(), 0);
  if (c.size() == 0) return reach;
  reach[c.root()] = 1;
  for (std::size_t i = c.size(); i-- > 0;) {
    if (!reach[i]) continue;
    for (NodeIndex ch : c.node(static_cast<NodeIndex>(i)).children) reach[ch] = 1;
  }
  return reach;
}

/// Variables mentioned anywhere below the root.
std::vector<char> root_mentions(const NnfCircuit& c) {
  std::vector<char> mentioned(static_cast<std::size_t>(c.var_count()) + 1, 0);
  auto reach = reachable_mask(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    if (reach[i] && n.kind == NnfKind::Lit && n.literal.var() <= c.var_count()) mentioned[n.literal.var()] = 1;
  }
  return mentioned;
}

std::vector<Var> unmentioned_vars(const NnfCircuit& c) {
  auto mentioned = root_mentions(c);
  std::vector<Var> out;
  for (Var v = 1; v <= c.var_count(); ++v)
    if (!mentioned[v]) out.push_back(v);
  return out;
}

/// Truth value of every node. Unreachable leaves over unbound variables read as false.
std::vector<char> evaluate_all(const NnfCircuit& c, const Term& x, const std::vector<char>& reach) {
  std::vector<char> val(c.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: val[i] = 1; break;
      case NnfKind::False: val[i] = 0; break;
      case NnfKind::Lit:
        if (!x.bound(n.literal.var())) {
          if (reach[i])
            throw std::invalid_argument("variable " + std::to_string(n.literal.var()) + " is unassigned");
          val[i] = 0;
        } else {
          val[i] = x.at(n.literal.var()) == n.literal.positive();
        }
        break;
      case NnfKind::And:
        val[i] = 1;
        for (NodeIndex ch : n.children)
          if (!val[ch]) {
            val[i] = 0;
            break;
          }
        break;
      case NnfKind::Or:
        val[i] = 0;
        for (NodeIndex ch : n.children)
          if (val[ch]) {
            val[i] = 1;
            break;
          }
        break;
    }
  }
  return val;
}

void check_query_properties(const NnfCircuit& c, QueryOptions opts) {
  if (!opts.check_properties) return;
  if (auto v = check_decomposability(c))
    throw PropertyViolation("and-node " + std::to_string(v->node) + " shares variable " + std::to_string(v->shared));
  if (auto v = check_smoothness(c)) throw PropertyViolation("or-node " + std::to_string(*v) + " is not smooth");
  if (c.var_count() <= kMaxEnumerationVars)
    if (auto v = check_determinism_exhaustive(c))
      throw PropertyViolation("or-node " + std::to_string(v->node) + " is not deterministic");
}

template <typename T, typename Leaf, typename Combine>
std::vector<T> upward(const NnfCircuit& c, Leaf leaf, T one, T zero, Combine sum_or_max) {
  std::vector<T> val(c.size(), zero);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: val[i] = one; break;
      case NnfKind::False: val[i] = zero; break;
      case NnfKind::Lit: val[i] = leaf(n.literal); break;
      case NnfKind::And: {
        T acc = one;
        for (NodeIndex ch : n.children) acc *= val[ch];
        val[i] = acc;
        break;
      }
      case NnfKind::Or: {
        T acc = zero;
        for (NodeIndex ch : n.children) acc = sum_or_max(acc, val[ch]);
        val[i] = acc;
        break;
      }
    }
  }
  return val;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

// --- construction ------------------------------------------------------------

NodeIndex NnfCircuit::push(NnfNode n) {
  for (NodeIndex ch : n.children)
    if (ch >= nodes_.size()) throw std::invalid_argument("child index " + std::to_string(ch) + " does not exist yet");
  nodes_.push_back(std::move(n));
  root_ = static_cast<NodeIndex>(nodes_.size() - 1);
  return root_;
}

NodeIndex NnfCircuit::add_true() { return push({NnfKind::True, {}, {}}); }
NodeIndex NnfCircuit::add_false() { return push({NnfKind::False, {}, {}}); }

NodeIndex NnfCircuit::add_literal(Literal l) {
  if (l.var() == 0) throw std::invalid_argument("variable 0 is not a valid literal");
  if (l.var() > var_count_) var_count_ = l.var();
  return push({NnfKind::Lit, l, {}});
}

NodeIndex NnfCircuit::add_and(std::vector<NodeIndex> children) {
  return push({NnfKind::And, {}, std::move(children)});
}

NodeIndex NnfCircuit::add_or(std::vector<NodeIndex> children) {
  return push({NnfKind::Or, {}, std::move(children)});
}

void NnfCircuit::set_root(NodeIndex root) {
  if (root >= nodes_.size()) throw std::invalid_argument("root index out of range");
  root_ = root;
}

std::size_t NnfCircuit::edge_count() const {
  std::size_t e = 0;
  for (const auto& n : nodes_) e += n.children.size();
  return e;
}

std::vector<std::vector<Var>> NnfCircuit::variable_sets() const {
  std::vector<std::vector<Var>> sets(nodes_.size());
  std::vector<Var> merged;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.kind == NnfKind::Lit) {
      sets[i] = {n.literal.var()};
    } else if (!n.children.empty()) {
      for (NodeIndex ch : n.children) {
        merged.clear();
        std::set_union(sets[i].begin(), sets[i].end(), sets[ch].begin(), sets[ch].end(), std::back_inserter(merged));
        sets[i].swap(merged);
      }
    }
  }
  return sets;
}

// --- c2d format --------------------------------------------------------------

NnfCircuit parse_c2d_nnf(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  long declared_nodes = -1, declared_edges = -1, declared_vars = -1;
  NnfCircuit c;
  auto fail = [&](const std::string& what) { throw ParseError("nnf line " + std::to_string(line_no) + ": " + what); };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag == "c") continue;
    if (tag == "nnf") {
      if (declared_nodes >= 0) fail("duplicate header");
      if (!(ls >> declared_nodes >> declared_edges >> declared_vars) || declared_nodes < 0 || declared_edges < 0 ||
          declared_vars < 0)
        fail("malformed header");
      c.set_var_count(static_cast<Var>(declared_vars));
      continue;
    }
    if (declared_nodes < 0) fail("node before `nnf` header");
    auto read_children = [&](long k) {
      std::vector<NodeIndex> kids;
      for (long j = 0; j < k; ++j) {
        long ch;
        if (!(ls >> ch)) fail("missing child index");
        if (ch < 0 || static_cast<std::size_t>(ch) >= c.size()) fail("forward or invalid child reference " + std::to_string(ch));
        kids.push_back(static_cast<NodeIndex>(ch));
      }
      return kids;
    };
    if (tag == "L") {
      long lit;
      if (!(ls >> lit) || lit == 0 || std::labs(lit) > declared_vars) fail("bad literal");
      c.add_literal(Literal::from_dimacs(static_cast<std::int32_t>(lit)));
    } else if (tag == "A") {
      long k;
      if (!(ls >> k) || k < 0) fail("bad and-node arity");
      auto kids = read_children(k);
      if (kids.empty())
        c.add_true();
      else
        c.add_and(std::move(kids));
    } else if (tag == "O") {
      long j, k;
      if (!(ls >> j >> k) || k < 0 || j < 0) fail("bad or-node header");
      auto kids = read_children(k);
      if (kids.empty())
        c.add_false();
      else
        c.add_or(std::move(kids));
    } else {
      fail("unknown node type `" + tag + "`");
    }
    std::string extra;
    if (ls >> extra) fail("trailing tokens");
  }
  if (declared_nodes < 0) throw ParseError("missing `nnf` header");
  if (static_cast<std::size_t>(declared_nodes) != c.size())
    throw ParseError("header declares " + std::to_string(declared_nodes) + " nodes but " + std::to_string(c.size()) +
                     " were read");
  if (static_cast<std::size_t>(declared_edges) != c.edge_count())
    throw ParseError("header declares " + std::to_string(declared_edges) + " edges but " +
                     std::to_string(c.edge_count()) + " were read");
  if (c.size() == 0) throw ParseError("empty circuit");
  c.set_var_count(static_cast<Var>(declared_vars));
  c.set_root(static_cast<NodeIndex>(c.size() - 1));
  return c;
}

NnfCircuit parse_c2d_nnf_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_c2d_nnf(in);
}

void write_c2d_nnf(std::ostream& out, const NnfCircuit& c) {
  // Only nodes reachable from the root are written, so the root ends up last.
  auto reach = reachable_mask(c);
  std::vector<NodeIndex> renum(c.size(), 0);
  std::size_t count = 0, edges = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (reach[i]) {
      renum[i] = static_cast<NodeIndex>(count++);
      edges += c.node(static_cast<NodeIndex>(i)).children.size();
    }
  out << "nnf " << count << ' ' << edges << ' ' << c.var_count() << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!reach[i]) continue;
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: out << "A 0"; break;
      case NnfKind::False: out << "O 0 0"; break;
      case NnfKind::Lit: out << "L " << n.literal.dimacs(); break;
      case NnfKind::And: out << "A " << n.children.size(); break;
      case NnfKind::Or: out << "O 0 " << n.children.size(); break;
    }
    for (NodeIndex ch : n.children) out << ' ' << renum[ch];
    out << '\n';
  }
}

std::string to_c2d_nnf(const NnfCircuit& c) {
  std::ostringstream out;
  write_c2d_nnf(out, c);
  return out.str();
}

// --- structure ---------------------------------------------------------------

bool evaluate(const NnfCircuit& c, const Term& x) {
  if (c.size() == 0) throw std::invalid_argument("empty circuit");
  auto reach = reachable_mask(c);
  return evaluate_all(c, x, reach)[c.root()];
}

NnfCircuit condition(const NnfCircuit& c, const Term& t) {
  NnfCircuit out(c.var_count());
  for (const auto& n : c.nodes()) {
    if (n.kind == NnfKind::Lit && t.bound(n.literal.var())) {
      if (t.satisfies(n.literal))
        out.add_true();
      else
        out.add_false();
      continue;
    }
    switch (n.kind) {
      case NnfKind::True: out.add_true(); break;
      case NnfKind::False: out.add_false(); break;
      case NnfKind::Lit: out.add_literal(n.literal); break;
      case NnfKind::And: out.add_and(n.children); break;
      case NnfKind::Or: out.add_or(n.children); break;
    }
  }
  if (c.size() > 0) out.set_root(c.root());
  out.set_var_count(c.var_count());
  return out;
}

std::optional<DecomposabilityViolation> check_decomposability(const NnfCircuit& c) {
  auto sets = c.variable_sets();
  std::vector<NodeIndex> owner(static_cast<std::size_t>(c.var_count()) + 1);
  std::vector<std::size_t> stamp(owner.size(), 0);
  std::size_t epoch = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    if (n.kind != NnfKind::And) continue;
    ++epoch;
    for (std::size_t j = 0; j < n.children.size(); ++j) {
      for (Var v : sets[n.children[j]]) {
        if (v >= stamp.size()) {
          stamp.resize(v + 1, 0);
          owner.resize(v + 1);
        }
        if (stamp[v] == epoch && owner[v] != j) return DecomposabilityViolation{static_cast<NodeIndex>(i), v};
        stamp[v] = epoch;
        owner[v] = static_cast<NodeIndex>(j);
      }
    }
  }
  return std::nullopt;
}

std::optional<DeterminismViolation> check_determinism_exhaustive(const NnfCircuit& c) {
  const Var n = c.var_count();
  if (n > kMaxEnumerationVars)
    throw CapacityError("exhaustive determinism check supports at most 24 variables, circuit has " +
                        std::to_string(n));
  auto reach = reachable_mask(c);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    Term x = Term::from_bits(n, bits);
    auto val = evaluate_all(c, x, reach);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& node = c.node(static_cast<NodeIndex>(i));
      if (!reach[i] || node.kind != NnfKind::Or) continue;
      int high = 0;
      for (NodeIndex ch : node.children) high += val[ch];
      if (high >= 2) return DeterminismViolation{static_cast<NodeIndex>(i), x};
    }
  }
  return std::nullopt;
}

std::optional<NodeIndex> check_smoothness(const NnfCircuit& c) {
  auto sets = c.variable_sets();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    if (n.kind != NnfKind::Or) continue;
    for (NodeIndex ch : n.children)
      if (sets[ch] != sets[i]) return static_cast<NodeIndex>(i);
  }
  return std::nullopt;
}

NnfCircuit smooth(const NnfCircuit& c) {
  auto sets = c.variable_sets();
  NnfCircuit out(c.var_count());
  std::vector<NodeIndex> map(c.size());
  std::unordered_map<Var, NodeIndex> gadgets;
  auto gadget = [&](Var v) {
    auto it = gadgets.find(v);
    if (it != gadgets.end()) return it->second;
    NodeIndex pos = out.add_literal(Literal(v, true));
    NodeIndex neg = out.add_literal(Literal(v, false));
    NodeIndex g = out.add_or({pos, neg});
    gadgets.emplace(v, g);
    return g;
  };
  std::vector<Var> missing;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: map[i] = out.add_true(); break;
      case NnfKind::False: map[i] = out.add_false(); break;
      case NnfKind::Lit: map[i] = out.add_literal(n.literal); break;
      case NnfKind::And: {
        std::vector<NodeIndex> kids;
        for (NodeIndex ch : n.children) kids.push_back(map[ch]);
        map[i] = out.add_and(std::move(kids));
        break;
      }
      case NnfKind::Or: {
        std::vector<NodeIndex> kids;
        for (NodeIndex ch : n.children) {
          missing.clear();
          std::set_difference(sets[i].begin(), sets[i].end(), sets[ch].begin(), sets[ch].end(),
                              std::back_inserter(missing));
          if (missing.empty()) {
            kids.push_back(map[ch]);
            continue;
          }
          std::vector<NodeIndex> conj{map[ch]};
          for (Var v : missing) conj.push_back(gadget(v));
          kids.push_back(out.add_and(std::move(conj)));
        }
        map[i] = out.add_or(std::move(kids));
        break;
      }
    }
  }
  if (c.size() > 0) out.set_root(map[c.root()]);
  out.set_var_count(c.var_count());
  return out;
}

// --- queries -----------------------------------------------------------------

BigInt model_count(const NnfCircuit& c, QueryOptions opts) {
  check_query_properties(c, opts);
  if (c.size() == 0) return 0;
  auto val = upward<BigInt>(
      c, [](Literal) { return BigInt(1); }, BigInt(1), BigInt(0), [](const BigInt& a, const BigInt& b) { return a + b; });
  BigInt count = val[c.root()];
  return count << unmentioned_vars(c).size();
}

double wmc(const NnfCircuit& c, const WeightMap& w, QueryOptions opts) {
  check_query_properties(c, opts);
  if (c.size() == 0) return 0.0;
  auto val = upward<double>(
      c, [&](Literal l) { return w[l]; }, 1.0, 0.0, [](double a, double b) { return a + b; });
  double total = val[c.root()];
  for (Var v : unmentioned_vars(c)) total *= w[Literal(v, true)] + w[Literal(v, false)];
  return total;
}

double log_wmc(const NnfCircuit& c, const WeightMap& w, QueryOptions opts) {
  check_query_properties(c, opts);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (c.size() == 0) return kNegInf;
  std::vector<double> val(c.size(), kNegInf);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: val[i] = 0.0; break;
      case NnfKind::False: val[i] = kNegInf; break;
      case NnfKind::Lit: val[i] = std::log(w[n.literal]); break;
      case NnfKind::And: {
        double acc = 0.0;
        for (NodeIndex ch : n.children) acc += val[ch];
        val[i] = std::isnan(acc) ? kNegInf : acc;
        break;
      }
      case NnfKind::Or: {
        double acc = kNegInf;
        for (NodeIndex ch : n.children) acc = log_add(acc, val[ch]);
        val[i] = acc;
        break;
      }
    }
  }
  double total = val[c.root()];
  for (Var v : unmentioned_vars(c)) total += std::log(w[Literal(v, true)] + w[Literal(v, false)]);
  return total;
}

Marginals all_marginals(const NnfCircuit& c, const WeightMap& w, QueryOptions opts) {
  check_query_properties(c, opts);
  Marginals out(c.var_count());
  if (c.size() == 0) return out;
  auto val = upward<double>(
      c, [&](Literal l) { return w[l]; }, 1.0, 0.0, [](double a, double b) { return a + b; });

  auto gaps = unmentioned_vars(c);
  // prefix[i] * suffix[i+1] = product of gap factors other than gaps[i]
  std::vector<double> prefix(gaps.size() + 1, 1.0), suffix(gaps.size() + 1, 1.0);
  for (std::size_t i = 0; i < gaps.size(); ++i)
    prefix[i + 1] = prefix[i] * (w[Literal(gaps[i], true)] + w[Literal(gaps[i], false)]);
  for (std::size_t i = gaps.size(); i-- > 0;)
    suffix[i] = suffix[i + 1] * (w[Literal(gaps[i], true)] + w[Literal(gaps[i], false)]);

  std::vector<double> deriv(c.size(), 0.0);
  deriv[c.root()] = prefix.back();
  std::vector<double> left;
  for (std::size_t i = c.size(); i-- > 0;) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    if (deriv[i] == 0.0 || n.children.empty()) continue;
    if (n.kind == NnfKind::Or) {
      for (NodeIndex ch : n.children) deriv[ch] += deriv[i];
    } else if (n.kind == NnfKind::And) {
      // Products of siblings without division, so zero weights are safe.
      const std::size_t k = n.children.size();
      left.assign(k + 1, 1.0);
      for (std::size_t j = 0; j < k; ++j) left[j + 1] = left[j] * val[n.children[j]];
      double right = 1.0;
      for (std::size_t j = k; j-- > 0;) {
        deriv[n.children[j]] += deriv[i] * left[j] * right;
        right *= val[n.children[j]];
      }
    }
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    if (n.kind == NnfKind::Lit && n.literal.var() <= c.var_count()) out[n.literal] += deriv[i] * val[i];
  }
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    double others = prefix[g] * suffix[g + 1] * val[c.root()];
    out[Literal(gaps[g], true)] = others * w[Literal(gaps[g], true)];
    out[Literal(gaps[g], false)] = others * w[Literal(gaps[g], false)];
  }
  return out;
}

bool dnnf_sat(const NnfCircuit& c) {
  if (c.size() == 0) return false;
  std::vector<char> val(c.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True:
      case NnfKind::Lit: val[i] = 1; break;
      case NnfKind::False: val[i] = 0; break;
      case NnfKind::And:
        val[i] = std::all_of(n.children.begin(), n.children.end(), [&](NodeIndex ch) { return val[ch] != 0; });
        break;
      case NnfKind::Or:
        val[i] = std::any_of(n.children.begin(), n.children.end(), [&](NodeIndex ch) { return val[ch] != 0; });
        break;
    }
  }
  return val[c.root()] != 0;
}

WeightedModel max_weight_model(const NnfCircuit& c, const WeightMap& w, QueryOptions opts) {
  check_query_properties(c, opts);
  if (c.size() == 0) throw SemanticError("empty circuit has no model");
  std::vector<double> val(c.size(), 0.0);
  std::vector<NodeIndex> best(c.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& n = c.node(static_cast<NodeIndex>(i));
    switch (n.kind) {
      case NnfKind::True: val[i] = 1.0; break;
      case NnfKind::False: val[i] = 0.0; break;
      case NnfKind::Lit: val[i] = w[n.literal]; break;
      case NnfKind::And: {
        double acc = 1.0;
        for (NodeIndex ch : n.children) acc *= val[ch];
        val[i] = acc;
        break;
      }
      case NnfKind::Or: {
        double acc = 0.0;
        bool first = true;
        for (NodeIndex ch : n.children)
          if (first || val[ch] > acc) {
            acc = val[ch];
            best[i] = ch;
            first = false;
          }
        val[i] = acc;
        break;
      }
    }
  }
  if (val[c.root()] <= 0.0) throw SemanticError("circuit has no model of positive weight");

  Term model(c.var_count());
  std::vector<NodeIndex> stack{c.root()};
  std::vector<char> seen(c.size(), 0);
  while (!stack.empty()) {
    NodeIndex i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = 1;
    const auto& n = c.node(i);
    if (n.kind == NnfKind::Lit) {
      model.set(n.literal);
    } else if (n.kind == NnfKind::And) {
      for (NodeIndex ch : n.children) stack.push_back(ch);
    } else if (n.kind == NnfKind::Or) {
      stack.push_back(best[i]);
    }
  }
  double weight = val[c.root()];
  for (Var v = 1; v <= c.var_count(); ++v) {
    if (model.bound(v)) continue;
    double pos = w[Literal(v, true)], neg = w[Literal(v, false)];
    model.set(v, pos >= neg);
    weight *= std::max(pos, neg);
  }
  return {std::move(model), weight};
}

std::vector<Term> enumerate_models(const NnfCircuit& c, std::size_t limit) {
  const Var n = c.var_count();
  if (n > kMaxEnumerationVars)
    throw CapacityError("model enumeration supports at most 24 variables, circuit has " + std::to_string(n));
  std::vector<Term> out;
  if (c.size() == 0) return out;
  auto reach = reachable_mask(c);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 0; k < total && out.size() < limit; ++k) {
    Term x(n);
    for (Var v = 1; v <= n; ++v) x.set(v, (k >> (n - v)) & 1U);
    if (evaluate_all(c, x, reach)[c.root()]) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace kc
