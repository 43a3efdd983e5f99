#include "kc/sdd.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace kc {

namespace {

constexpr SddId kNone = static_cast<SddId>(-1);

std::uint64_t pair_key(SddId a, SddId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

std::size_t SddManager::UniqueHash::operator()(const UniqueKey& k) const noexcept {
  std::size_t h = std::hash<std::uint32_t>{}(k.vtree);
  for (const auto& e : k.elements) {
    h ^= std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(e.prime) << 32) | e.sub) + 0x9e3779b97f4a7c15ULL +
         (h << 6) + (h >> 2);
  }
  return h;
}

SddManager::SddManager(Vtree vtree) : vtree_(std::move(vtree)) {
  if (vtree_.size() == 0) throw std::invalid_argument("SDD manager needs a nonempty vtree");
  nodes_.push_back(Node{SddKind::False, kNoVtree, {}, 0, 0});
  nodes_.push_back(Node{SddKind::True, kNoVtree, {}, 0, 0});
  negation_ = {kSddTrue, kSddFalse};
  literal_ids_.assign(2 * (static_cast<std::size_t>(vtree_.max_var()) + 1), kNone);
}

void SddManager::validate(SddId a) const {
  if (a >= nodes_.size()) throw std::invalid_argument("SDD id " + std::to_string(a) + " does not belong to this manager");
}

std::span<const SddElement> SddManager::elements(SddId a) const {
  const auto& n = node(a);
  return {element_pool_.data() + n.elem_offset, n.elem_count};
}

SddId SddManager::literal(Literal l) {
  if (!vtree_.has_var(l.var()))
    throw std::invalid_argument("variable " + std::to_string(l.var()) + " is not in the manager's vtree");
  SddId& slot = literal_ids_[l.index()];
  if (slot != kNone) return slot;
  slot = static_cast<SddId>(nodes_.size());
  nodes_.push_back(Node{SddKind::Literal, vtree_.leaf_of(l.var()), l, 0, 0});
  negation_.push_back(kNone);
  return slot;
}

SddId SddManager::decision(VtreeId v, std::vector<SddElement> elements) {
  // Drop unsatisfiable elements.
  std::erase_if(elements, [](const SddElement& e) { return e.prime == kSddFalse; });
  // Compress: one element per distinct sub, primes disjoined.
  std::vector<SddElement> compressed;
  compressed.reserve(elements.size());
  for (const auto& e : elements) {
    auto it = std::find_if(compressed.begin(), compressed.end(), [&](const SddElement& c) { return c.sub == e.sub; });
    if (it == compressed.end())
      compressed.push_back(e);
    else
      it->prime = disjoin(it->prime, e.prime);
  }
  if (compressed.empty()) return kSddFalse;
  // Trim.
  if (compressed.size() == 1) return compressed[0].sub;
  if (compressed.size() == 2) {
    if (compressed[0].sub == kSddTrue && compressed[1].sub == kSddFalse) return compressed[0].prime;
    if (compressed[1].sub == kSddTrue && compressed[0].sub == kSddFalse) return compressed[1].prime;
  }
  std::sort(compressed.begin(), compressed.end(),
            [](const SddElement& a, const SddElement& b) { return a.prime < b.prime; });
  UniqueKey key{v, std::move(compressed)};
  if (auto it = unique_.find(key); it != unique_.end()) return it->second;
  auto id = static_cast<SddId>(nodes_.size());
  nodes_.push_back(Node{SddKind::Decision, v, {}, static_cast<std::uint32_t>(element_pool_.size()),
                        static_cast<std::uint32_t>(key.elements.size())});
  element_pool_.insert(element_pool_.end(), key.elements.begin(), key.elements.end());
  negation_.push_back(kNone);
  unique_.emplace(std::move(key), id);
  return id;
}

std::vector<SddElement> SddManager::normalized_elements(SddId a, VtreeId v) {
  VtreeId va = vtree_of(a);
  if (va == v) {
    auto span = elements(a);
    return {span.begin(), span.end()};
  }
  if (vtree_.in_left(v, va)) return {{a, kSddTrue}, {negate(a), kSddFalse}};
  return {{kSddTrue, a}};
}

SddId SddManager::apply(SddId a, SddId b, BoolOp op) {
  validate(a);
  validate(b);
  const bool conj = op == BoolOp::Conjoin;
  const SddId absorbing = conj ? kSddFalse : kSddTrue;
  const SddId identity = conj ? kSddTrue : kSddFalse;
  if (a == absorbing || b == absorbing) return absorbing;
  if (a == identity) return b;
  if (b == identity) return a;
  if (a == b) return a;
  if (negation_[a] == b) return absorbing;

  auto& cache = conj ? conjoin_cache_ : disjoin_cache_;
  const auto key = pair_key(a, b);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  VtreeId va = vtree_of(a), vb = vtree_of(b);
  SddId result;
  if (va == vb && vtree_.is_leaf(va)) {
    // Two distinct literals over one variable are complementary.
    result = absorbing;
  } else {
    VtreeId v = va == vb ? va : vtree_.lca(va, vb);
    auto ea = normalized_elements(a, v);
    auto eb = normalized_elements(b, v);
    std::vector<SddElement> out;
    out.reserve(ea.size() * eb.size());
    for (const auto& x : ea)
      for (const auto& y : eb) {
        SddId p = conjoin(x.prime, y.prime);
        if (p == kSddFalse) continue;
        out.push_back({p, apply(x.sub, y.sub, op)});
      }
    result = decision(v, std::move(out));
  }
  cache.emplace(key, result);
  return result;
}

SddId SddManager::negate(SddId a) {
  validate(a);
  if (negation_[a] != kNone) return negation_[a];
  SddId result;
  const Node n = node(a);
  if (n.kind == SddKind::Literal) {
    result = literal(~n.lit);
  } else {
    std::vector<SddElement> out;
    for (const auto& e : elements(a)) out.push_back(e);
    for (auto& e : out) e.sub = negate(e.sub);
    result = decision(n.vtree, std::move(out));
  }
  negation_[a] = result;
  negation_[result] = a;
  return result;
}

SddId SddManager::condition(SddId a, const Term& t) {
  validate(a);
  std::unordered_map<SddId, SddId> memo;
  return condition_rec(a, t, memo);
}

SddId SddManager::condition_rec(SddId a, const Term& t, std::unordered_map<SddId, SddId>& memo) {
  if (is_constant(a)) return a;
  if (auto it = memo.find(a); it != memo.end()) return it->second;
  SddId result;
  const Node n = node(a);
  if (n.kind == SddKind::Literal) {
    if (t.bound(n.lit.var()))
      result = t.satisfies(n.lit) ? kSddTrue : kSddFalse;
    else
      result = a;
  } else {
    std::vector<SddElement> src(elements(a).begin(), elements(a).end());
    std::vector<SddElement> out;
    out.reserve(src.size());
    for (const auto& e : src) out.push_back({condition_rec(e.prime, t, memo), condition_rec(e.sub, t, memo)});
    result = decision(n.vtree, std::move(out));
  }
  memo.emplace(a, result);
  return result;
}

SddId SddManager::exists(SddId a, Var v) {
  Term pos, neg;
  pos.set(v, true);
  neg.set(v, false);
  return disjoin(condition(a, pos), condition(a, neg));
}

SddId SddManager::compile_clause(const Clause& clause) {
  SddId acc = kSddFalse;
  for (Literal l : clause) acc = disjoin(acc, literal(l));
  return acc;
}

SddId SddManager::compile_cnf(const Cnf& cnf, ClauseOrder order) {
  for (const auto& clause : cnf.clauses)
    for (Literal l : clause)
      if (!vtree_.has_var(l.var()))
        throw std::invalid_argument("CNF variable " + std::to_string(l.var()) + " is not in the manager's vtree");
  std::vector<std::size_t> idx(cnf.clauses.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (order == ClauseOrder::ByVtree) {
    std::vector<VtreeId> key(cnf.clauses.size(), 0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (Literal l : cnf.clauses[i]) key[i] = std::max(key[i], vtree_.leaf_of(l.var()));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  }
  SddId acc = kSddTrue;
  for (std::size_t i : idx) {
    acc = conjoin(acc, compile_clause(cnf.clauses[i]));
    if (acc == kSddFalse) break;
  }
  return acc;
}

std::vector<SddId> SddManager::topological(SddId a) const {
  validate(a);
  std::vector<SddId> order;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<std::pair<SddId, bool>> stack{{a, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(id);
      continue;
    }
    if (seen[id]) continue;
    seen[id] = 1;
    stack.push_back({id, true});
    if (kind(id) == SddKind::Decision) {
      auto elems = elements(id);
      for (auto it = elems.rbegin(); it != elems.rend(); ++it) {
        if (!seen[it->sub]) stack.push_back({it->sub, false});
        if (!seen[it->prime]) stack.push_back({it->prime, false});
      }
    }
  }
  return order;
}

std::size_t SddManager::size(SddId a) const {
  std::size_t total = 0;
  for (SddId id : topological(a))
    if (kind(id) == SddKind::Decision) total += node(id).elem_count;
  return total;
}

std::size_t SddManager::decision_count(SddId a) const {
  std::size_t total = 0;
  for (SddId id : topological(a)) total += kind(id) == SddKind::Decision;
  return total;
}

bool SddManager::evaluate(SddId a, const Term& x) const {
  validate(a);
  while (true) {
    const Node& n = node(a);
    switch (n.kind) {
      case SddKind::False: return false;
      case SddKind::True: return true;
      case SddKind::Literal: return x.at(n.lit.var()) == n.lit.positive();
      case SddKind::Decision: {
        SddId next = kNone;
        for (const auto& e : elements(a))
          if (evaluate(e.prime, x)) {
            next = e.sub;
            break;
          }
        if (next == kNone) return false;
        a = next;
      }
    }
  }
}

BigInt SddManager::lifted_count(SddId a, VtreeId context, std::unordered_map<SddId, BigInt>& memo) const {
  const unsigned ctx_vars = vtree_.node(context).var_count;
  if (a == kSddFalse) return 0;
  if (a == kSddTrue) return BigInt(1) << ctx_vars;
  const Node& n = node(a);
  BigInt own;
  if (n.kind == SddKind::Literal) {
    own = 1;
  } else if (auto it = memo.find(a); it != memo.end()) {
    own = it->second;
  } else {
    own = 0;
    for (const auto& e : elements(a))
      own += lifted_count(e.prime, vtree_.left(n.vtree), memo) * lifted_count(e.sub, vtree_.right(n.vtree), memo);
    memo.emplace(a, own);
  }
  return own << (ctx_vars - vtree_.node(n.vtree).var_count);
}

BigInt SddManager::model_count(SddId a) const {
  validate(a);
  std::unordered_map<SddId, BigInt> memo;
  return lifted_count(a, vtree_.root(), memo);
}

double SddManager::wmc(SddId a, const WeightMap& w) const {
  validate(a);
  // full[v]: product of (W(x) + W(~x)) over the variables of v.
  std::vector<double> full(vtree_.size(), 1.0);
  for (VtreeId v = 0; v < vtree_.size(); ++v)
    if (vtree_.is_leaf(v)) {
      Var x = vtree_.node(v).var;
      full[v] = w[Literal(x, true)] + w[Literal(x, false)];
    }
  std::function<double(VtreeId)> fill = [&](VtreeId v) -> double {
    if (vtree_.is_leaf(v)) return full[v];
    return full[v] = fill(vtree_.left(v)) * fill(vtree_.right(v));
  };
  fill(vtree_.root());
  auto lift = [&](VtreeId from, VtreeId to) {
    double f = 1.0;
    for (VtreeId p = from; p != to; p = vtree_.parent(p)) {
      VtreeId up = vtree_.parent(p);
      f *= full[vtree_.left(up) == p ? vtree_.right(up) : vtree_.left(up)];
    }
    return f;
  };
  std::unordered_map<SddId, double> value;
  auto lifted = [&](SddId id, VtreeId ctx) -> double {
    if (id == kSddFalse) return 0.0;
    if (id == kSddTrue) return full[ctx];
    return value.at(id) * lift(vtree_of(id), ctx);
  };
  for (SddId id : topological(a)) {
    const Node& n = node(id);
    if (n.kind == SddKind::Literal) {
      value[id] = w[n.lit];
    } else if (n.kind == SddKind::Decision) {
      double acc = 0.0;
      for (const auto& e : elements(id))
        acc += lifted(e.prime, vtree_.left(n.vtree)) * lifted(e.sub, vtree_.right(n.vtree));
      value[id] = acc;
    }
  }
  return lifted(a, vtree_.root());
}

NnfCircuit SddManager::to_nnf(SddId a) const {
  NnfCircuit c(vtree_.max_var());
  std::unordered_map<SddId, NodeIndex> map;
  for (SddId id : topological(a)) {
    const Node& n = node(id);
    switch (n.kind) {
      case SddKind::False: map[id] = c.add_false(); break;
      case SddKind::True: map[id] = c.add_true(); break;
      case SddKind::Literal: map[id] = c.add_literal(n.lit); break;
      case SddKind::Decision: {
        std::vector<NodeIndex> kids;
        for (const auto& e : elements(id)) kids.push_back(c.add_and({map.at(e.prime), map.at(e.sub)}));
        map[id] = c.add_or(std::move(kids));
        break;
      }
    }
  }
  c.set_root(map.at(a));
  c.set_var_count(vtree_.max_var());
  return c;
}

// --- E-MajSat ------------------------------------------------------------------

MapResult map_emajsat(const SddManager& m, SddId f, const WeightMap& w, const std::vector<Var>& maximized) {
  m.validate(f);
  const Vtree& vt = m.vtree();
  const Var n = vt.max_var();
  std::vector<char> is_max(static_cast<std::size_t>(n) + 1, 0);
  for (Var v : maximized) {
    if (!vt.has_var(v)) throw std::invalid_argument("variable " + std::to_string(v) + " is not in the vtree");
    is_max[v] = 1;
  }
  std::vector<Var> summed;
  for (Var v : vt.variables())
    if (!is_max[v]) summed.push_back(v);
  if (!summed.empty() && summed.size() != vt.variables().size() && !is_constrained_for(vt, summed))
    throw std::invalid_argument("vtree is not constrained for the summed-out variables");

  // Per vtree node: whether it mixes both kinds, whether it is pure max, and
  // the value of the constant true over its variables.
  std::vector<int> max_vars(vt.size(), 0);
  std::vector<double> full(vt.size(), 1.0);
  std::function<void(VtreeId)> fill = [&](VtreeId v) {
    if (vt.is_leaf(v)) {
      Var x = vt.node(v).var;
      double pos = w[Literal(x, true)], neg = w[Literal(x, false)];
      max_vars[v] = is_max[x];
      full[v] = is_max[x] ? std::max(pos, neg) : pos + neg;
      return;
    }
    fill(vt.left(v));
    fill(vt.right(v));
    max_vars[v] = max_vars[vt.left(v)] + max_vars[vt.right(v)];
    full[v] = full[vt.left(v)] * full[vt.right(v)];
  };
  fill(vt.root());
  auto maximizes = [&](VtreeId v) { return max_vars[v] > 0; };

  auto lift = [&](VtreeId from, VtreeId to) {
    double factor = 1.0;
    for (VtreeId p = from; p != to; p = vt.parent(p)) {
      VtreeId up = vt.parent(p);
      factor *= full[vt.left(up) == p ? vt.right(up) : vt.left(up)];
    }
    return factor;
  };

  std::unordered_map<SddId, double> value;
  std::unordered_map<SddId, std::size_t> choice;
  auto lifted = [&](SddId id, VtreeId ctx) -> double {
    if (id == kSddFalse) return 0.0;
    if (id == kSddTrue) return full[ctx];
    return value.at(id) * lift(m.vtree_of(id), ctx);
  };
  for (SddId id : m.topological(f)) {
    switch (m.kind(id)) {
      case SddKind::False:
      case SddKind::True: break;
      case SddKind::Literal: value[id] = w[m.literal_of(id)]; break;
      case SddKind::Decision: {
        VtreeId v = m.vtree_of(id);
        auto elems = m.elements(id);
        double acc = 0.0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < elems.size(); ++i) {
          double term = lifted(elems[i].prime, vt.left(v)) * lifted(elems[i].sub, vt.right(v));
          if (!maximizes(v)) {
            acc += term;
          } else if (i == 0 || term > acc) {
            acc = term;
            best = i;
          }
        }
        value[id] = acc;
        choice[id] = best;
        break;
      }
    }
  }

  MapResult result{Term(n), lifted(f, vt.root())};
  Term& y = result.assignment;
  auto assign_free = [&](VtreeId v) {
    for (Var x : vt.variables(v))
      if (is_max[x] && !y.bound(x)) y.set(x, w[Literal(x, true)] >= w[Literal(x, false)]);
  };
  std::function<void(SddId, VtreeId)> extract = [&](SddId id, VtreeId ctx) {
    if (id == kSddFalse) return;
    if (id == kSddTrue) {
      assign_free(ctx);
      return;
    }
    VtreeId own = m.vtree_of(id);
    for (VtreeId p = own; p != ctx; p = vt.parent(p)) {
      VtreeId up = vt.parent(p);
      assign_free(vt.left(up) == p ? vt.right(up) : vt.left(up));
    }
    if (!maximizes(own)) return;
    if (m.kind(id) == SddKind::Literal) {
      y.set(m.literal_of(id));
      return;
    }
    const auto& e = m.elements(id)[choice.at(id)];
    extract(e.prime, vt.left(own));
    extract(e.sub, vt.right(own));
  };
  extract(f, vt.root());
  for (Var x : maximized)
    if (!y.bound(x)) y.set(x, w[Literal(x, true)] >= w[Literal(x, false)]);
  return result;
}

// --- file format -----------------------------------------------------------------

void write_sdd(std::ostream& out, const SddManager& m, SddId root) {
  auto order = m.topological(root);
  std::unordered_map<SddId, std::size_t> renum;
  for (std::size_t i = 0; i < order.size(); ++i) renum[order[i]] = i;
  out << "sdd " << order.size() << '\n';
  for (std::size_t i = 0; i < order.size(); ++i) {
    SddId id = order[i];
    switch (m.kind(id)) {
      case SddKind::False: out << "F " << i << '\n'; break;
      case SddKind::True: out << "T " << i << '\n'; break;
      case SddKind::Literal: out << "L " << i << ' ' << m.vtree_of(id) << ' ' << m.literal_of(id).dimacs() << '\n'; break;
      case SddKind::Decision: {
        auto elems = m.elements(id);
        out << "D " << i << ' ' << m.vtree_of(id) << ' ' << elems.size();
        for (const auto& e : elems) out << ' ' << renum.at(e.prime) << ' ' << renum.at(e.sub);
        out << '\n';
        break;
      }
    }
  }
}

std::string to_sdd_string(const SddManager& m, SddId root) {
  std::ostringstream out;
  write_sdd(out, m, root);
  return out.str();
}

SddId read_sdd(std::istream& in, SddManager& m) {
  std::string line;
  std::size_t line_no = 0;
  long declared = -1;
  std::unordered_map<long, SddId> ids;
  SddId last = kNone;
  const Vtree& vt = m.vtree();
  auto fail = [&](const std::string& what) { throw ParseError("sdd line " + std::to_string(line_no) + ": " + what); };
  auto lookup = [&](long id) {
    auto it = ids.find(id);
    if (it == ids.end()) fail("reference to unknown node " + std::to_string(id));
    return it->second;
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag == "c") continue;
    if (tag == "sdd") {
      if (declared >= 0 || !(ls >> declared) || declared < 0) fail("malformed header");
      continue;
    }
    if (declared < 0) fail("node before `sdd` header");
    long id;
    if (!(ls >> id)) fail("missing node id");
    SddId made;
    if (tag == "F") {
      made = kSddFalse;
    } else if (tag == "T") {
      made = kSddTrue;
    } else if (tag == "L") {
      long v, lit;
      if (!(ls >> v >> lit) || lit == 0) fail("malformed literal line");
      Literal l = Literal::from_dimacs(static_cast<std::int32_t>(lit));
      if (!vt.has_var(l.var())) fail("literal over a variable outside the vtree");
      if (static_cast<VtreeId>(v) != vt.leaf_of(l.var())) fail("literal attached to the wrong vtree node");
      made = m.literal(l);
    } else if (tag == "D") {
      long v, k;
      if (!(ls >> v >> k) || k <= 0 || v < 0 || static_cast<std::size_t>(v) >= vt.size() || vt.is_leaf(static_cast<VtreeId>(v)))
        fail("malformed decision line");
      std::vector<SddElement> elems;
      for (long j = 0; j < k; ++j) {
        long p, s;
        if (!(ls >> p >> s)) fail("missing element");
        SddElement e{lookup(p), lookup(s)};
        auto vv = static_cast<VtreeId>(v);
        if (!m.is_constant(e.prime) && !vt.in_left(vv, m.vtree_of(e.prime))) fail("prime outside the left vtree");
        if (!m.is_constant(e.sub) && !vt.in_right(vv, m.vtree_of(e.sub))) fail("sub outside the right vtree");
        elems.push_back(e);
      }
      made = m.decision(static_cast<VtreeId>(v), std::move(elems));
    } else {
      fail("unknown line type `" + tag + "`");
    }
    if (!ids.emplace(id, made).second) fail("duplicate node id");
    last = made;
  }
  if (declared < 0) throw ParseError("missing `sdd` header");
  if (static_cast<long>(ids.size()) != declared) throw ParseError("node count does not match the header");
  if (last == kNone) throw ParseError("empty SDD");
  return last;
}

SddId read_sdd_string(std::string_view text, SddManager& m) {
  std::istringstream in{std::string(text)};
  return read_sdd(in, m);
}

}  // namespace kc
