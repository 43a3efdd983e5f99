#include "kc/psdd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

namespace kc {

namespace {

constexpr PsddId kNoPsdd = static_cast<PsddId>(-1);

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// --- datasets -------------------------------------------------------------------

std::uint64_t Dataset::total() const {
  std::uint64_t n = 0;
  for (const auto& r : rows) n += r.count;
  return n;
}

Dataset parse_dataset_csv(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  long count_col = -1;
  std::size_t width = 0;
  auto fail = [&](const std::string& what) { throw ParseError("dataset line " + std::to_string(line_no) + ": " + what); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (width == 0) {
      width = cells.size();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "count") {
          if (count_col >= 0) fail("two `count` columns");
          count_col = static_cast<long>(i);
        } else {
          if (cells[i].empty()) fail("empty column name");
          d.names.push_back(cells[i]);
        }
      }
      d.var_count = static_cast<Var>(d.names.size());
      continue;
    }
    if (cells.size() != width) fail("expected " + std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    Dataset::Row row{Term(d.var_count), 1};
    Var v = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<long>(i) == count_col) {
        std::size_t used = 0;
        unsigned long long c = 0;
        try {
          c = std::stoull(cells[i], &used);
        } catch (const std::exception&) {
          fail("bad count `" + cells[i] + "`");
        }
        if (used != cells[i].size() || c == 0 || cells[i][0] == '-') fail("count must be a positive integer");
        row.count = c;
        continue;
      }
      ++v;
      if (cells[i] == "1" || cells[i] == "true")
        row.term.set(v, true);
      else if (cells[i] == "0" || cells[i] == "false")
        row.term.set(v, false);
      else
        fail("cell `" + cells[i] + "` is not 0 or 1");
    }
    d.rows.push_back(std::move(row));
  }
  if (width == 0) throw ParseError("dataset has no header");
  return d;
}

Dataset parse_dataset_csv_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  bool counts = std::any_of(d.rows.begin(), d.rows.end(), [](const Dataset::Row& r) { return r.count != 1; });
  for (Var v = 1; v <= d.var_count; ++v) {
    if (v > 1) out << ',';
    out << (v <= d.names.size() ? d.names[v - 1] : "x" + std::to_string(v));
  }
  if (counts) out << (d.var_count ? ",count" : "count");
  out << '\n';
  for (const auto& r : d.rows) {
    for (Var v = 1; v <= d.var_count; ++v) {
      if (v > 1) out << ',';
      out << (r.term.get(v).value_or(false) ? '1' : '0');
    }
    if (counts) out << (d.var_count ? "," : "") << r.count;
    out << '\n';
  }
}

// --- structure ------------------------------------------------------------------

Psdd Psdd::from_sdd(const SddManager& m, SddId root) {
  m.validate(root);
  if (root == kSddFalse) throw SemanticError("cannot parameterize an unsatisfiable SDD");
  Psdd p;
  p.vtree_ = m.vtree();
  const Vtree& vt = p.vtree_;
  std::map<std::pair<SddId, VtreeId>, PsddId> memo;
  auto add = [&](Node n) {
    p.nodes_.push_back(std::move(n));
    return static_cast<PsddId>(p.nodes_.size() - 1);
  };
  std::function<PsddId(SddId, VtreeId)> norm = [&](SddId a, VtreeId v) -> PsddId {
    if (a == kSddFalse) return kNoPsdd;
    if (auto it = memo.find({a, v}); it != memo.end()) return it->second;
    PsddId out;
    if (vt.is_leaf(v) && a == kSddTrue) {
      out = add(Node{PsddKind::Top, v, Literal(vt.node(v).var, true), 0.5, {}});
    } else if (a == kSddTrue) {
      out = add(Node{PsddKind::Decision, v, {}, 0, {{norm(kSddTrue, vt.left(v)), norm(kSddTrue, vt.right(v)), 1.0}}});
    } else if (m.vtree_of(a) == v) {
      if (m.kind(a) == SddKind::Literal) {
        out = add(Node{PsddKind::Literal, v, m.literal_of(a), 0, {}});
      } else {
        std::vector<PsddElement> elems;
        for (const auto& e : m.elements(a)) {
          if (e.sub == kSddFalse) continue;
          PsddId pr = norm(e.prime, vt.left(v));
          PsddId su = norm(e.sub, vt.right(v));
          elems.push_back({pr, su, 0});
        }
        for (auto& e : elems) e.theta = 1.0 / static_cast<double>(elems.size());
        out = add(Node{PsddKind::Decision, v, {}, 0, std::move(elems)});
      }
    } else if (vt.in_left(v, m.vtree_of(a))) {
      PsddId pr = norm(a, vt.left(v));
      out = add(Node{PsddKind::Decision, v, {}, 0, {{pr, norm(kSddTrue, vt.right(v)), 1.0}}});
    } else {
      PsddId pr = norm(kSddTrue, vt.left(v));
      out = add(Node{PsddKind::Decision, v, {}, 0, {{pr, norm(a, vt.right(v)), 1.0}}});
    }
    memo.emplace(std::make_pair(a, v), out);
    return out;
  };
  p.root_ = norm(root, vt.root());
  return p;
}

namespace {

void require_complete(const Psdd& p, const Term& x) {
  for (Var v : p.vtree().variables())
    if (!x.bound(v)) throw std::invalid_argument("variable " + std::to_string(v) + " is unbound");
}

}  // namespace

bool Psdd::supports(const Term& x) const {
  require_complete(*this, x);
  std::vector<char> val(nodes_.size(), 0);
  for (PsddId i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case PsddKind::Literal: val[i] = x.satisfies(n.lit); break;
      case PsddKind::Top: val[i] = 1; break;
      case PsddKind::Decision:
        for (const auto& e : n.elements)
          if (val[e.prime] && val[e.sub]) val[i] = 1;
        break;
    }
  }
  return val[root_];
}

double Psdd::marginal(const Term& t) const {
  std::vector<double> val(nodes_.size(), 0.0);
  for (PsddId i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case PsddKind::Literal: val[i] = t.contradicts(n.lit) ? 0.0 : 1.0; break;
      case PsddKind::Top: {
        Var v = n.lit.var();
        val[i] = !t.bound(v) ? 1.0 : t.at(v) ? n.theta : 1.0 - n.theta;
        break;
      }
      case PsddKind::Decision: {
        double acc = 0;
        for (const auto& e : n.elements) acc += e.theta * val[e.prime] * val[e.sub];
        val[i] = acc;
        break;
      }
    }
  }
  return val[root_];
}

double Psdd::probability(const Term& x) const {
  require_complete(*this, x);
  return marginal(x);
}

Psdd::Mpe Psdd::mpe(const Term& evidence) const {
  std::vector<double> val(nodes_.size(), 0.0);
  std::vector<std::size_t> choice(nodes_.size(), 0);
  for (PsddId i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case PsddKind::Literal: val[i] = evidence.contradicts(n.lit) ? 0.0 : 1.0; break;
      case PsddKind::Top: {
        Var v = n.lit.var();
        val[i] = !evidence.bound(v) ? std::max(n.theta, 1.0 - n.theta) : evidence.at(v) ? n.theta : 1.0 - n.theta;
        break;
      }
      case PsddKind::Decision:
        for (std::size_t k = 0; k < n.elements.size(); ++k) {
          const auto& e = n.elements[k];
          double term = e.theta * val[e.prime] * val[e.sub];
          if (term > val[i]) {
            val[i] = term;
            choice[i] = k;
          }
        }
        break;
    }
  }
  if (val[root_] <= 0) throw ZeroProbabilityError("evidence has probability zero");
  Mpe out{Term(var_count()), val[root_]};
  std::vector<PsddId> stack{root_};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    PsddId id = stack.back();
    stack.pop_back();
    switch (n.kind) {
      case PsddKind::Literal: out.state.set(n.lit); break;
      case PsddKind::Top: {
        Var v = n.lit.var();
        out.state.set(v, evidence.bound(v) ? evidence.at(v) : n.theta >= 0.5);
        break;
      }
      case PsddKind::Decision: {
        const auto& e = n.elements[choice[id]];
        stack.push_back(e.sub);
        stack.push_back(e.prime);
        break;
      }
    }
  }
  return out;
}

Dataset Psdd::sample(std::uint64_t seed, std::size_t count) const {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Dataset d;
  d.var_count = var_count();
  for (std::size_t s = 0; s < count; ++s) {
    Term x(var_count());
    std::vector<PsddId> stack{root_};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      switch (n.kind) {
        case PsddKind::Literal: x.set(n.lit); break;
        case PsddKind::Top: x.set(n.lit.var(), uniform() < n.theta); break;
        case PsddKind::Decision: {
          double u = uniform(), acc = 0;
          std::size_t pick = n.elements.size();
          for (std::size_t k = 0; k < n.elements.size(); ++k) {
            if (n.elements[k].theta <= 0) continue;
            pick = k;
            acc += n.elements[k].theta;
            if (u < acc) break;
          }
          if (pick == n.elements.size()) throw SemanticError("decision node without positive parameters");
          stack.push_back(n.elements[pick].sub);
          stack.push_back(n.elements[pick].prime);
          break;
        }
      }
    }
    for (Var v = 1; v <= var_count(); ++v)
      if (!x.bound(v)) x.set(v, false);
    d.rows.push_back({std::move(x), 1});
  }
  return d;
}

double Psdd::log_likelihood(const Dataset& d) const {
  double ll = 0;
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    double p = probability(d.rows[r].term);
    if (p <= 0) throw SemanticError("data row " + std::to_string(r + 1) + " has probability zero");
    ll += static_cast<double>(d.rows[r].count) * std::log(p);
  }
  return ll;
}

void Psdd::set_uniform_over_models() {
  std::vector<BigInt> mc(nodes_.size());
  for (PsddId i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    switch (n.kind) {
      case PsddKind::Literal: mc[i] = 1; break;
      case PsddKind::Top:
        mc[i] = 2;
        n.theta = 0.5;
        break;
      case PsddKind::Decision: {
        mc[i] = 0;
        for (const auto& e : n.elements) mc[i] += mc[e.prime] * mc[e.sub];
        for (auto& e : n.elements)
          e.theta = boost::multiprecision::cpp_rational(mc[e.prime] * mc[e.sub], mc[i]).convert_to<double>();
        break;
      }
    }
  }
}

// --- learning -------------------------------------------------------------------

void fit_ml(Psdd& p, const Dataset& data, LearnOptions opts) {
  if (!(opts.laplace >= 0) || !std::isfinite(opts.laplace)) throw std::invalid_argument("laplace must be finite and >= 0");
  const std::size_t n = p.size();
  std::vector<double> reach(n, 0.0), positive(n, 0.0);
  std::vector<std::vector<double>> hits(n);
  for (PsddId i = 0; i < n; ++i) hits[i].assign(p.node(i).elements.size(), 0.0);
  std::vector<char> val(n);
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const Term& x = data.rows[r].term;
    const auto c = static_cast<double>(data.rows[r].count);
    for (Var v : p.vtree().variables())
      if (!x.bound(v)) throw std::invalid_argument("data row " + std::to_string(r + 1) + " leaves variable " + std::to_string(v) + " unset");
    for (PsddId i = 0; i < n; ++i) {
      const auto& nd = p.node(i);
      val[i] = 0;
      switch (nd.kind) {
        case PsddKind::Literal: val[i] = x.satisfies(nd.lit); break;
        case PsddKind::Top: val[i] = 1; break;
        case PsddKind::Decision:
          for (const auto& e : nd.elements)
            if (val[e.prime] && val[e.sub]) val[i] = 1;
          break;
      }
    }
    if (!val[p.root()]) throw SemanticError("data row " + std::to_string(r + 1) + " falsifies the base SDD");
    std::vector<PsddId> stack{p.root()};
    while (!stack.empty()) {
      PsddId id = stack.back();
      stack.pop_back();
      const auto& nd = p.node(id);
      reach[id] += c;
      if (nd.kind == PsddKind::Top && x.at(nd.lit.var())) positive[id] += c;
      if (nd.kind != PsddKind::Decision) continue;
      for (std::size_t k = 0; k < nd.elements.size(); ++k)
        if (val[nd.elements[k].prime]) {
          hits[id][k] += c;
          stack.push_back(nd.elements[k].sub);
          stack.push_back(nd.elements[k].prime);
          break;
        }
    }
  }
  const double a = opts.laplace;
  for (PsddId i = 0; i < n; ++i) {
    auto& nd = p.node(i);
    if (nd.kind == PsddKind::Top) {
      nd.theta = reach[i] + 2 * a > 0 ? (positive[i] + a) / (reach[i] + 2 * a) : 0.5;
    } else if (nd.kind == PsddKind::Decision) {
      const double k = static_cast<double>(nd.elements.size());
      for (std::size_t e = 0; e < nd.elements.size(); ++e)
        nd.elements[e].theta = reach[i] + a * k > 0 ? (hits[i][e] + a) / (reach[i] + a * k) : 1.0 / k;
    }
  }
}

Psdd learn_ml(const SddManager& m, SddId base, const Dataset& data, LearnOptions opts) {
  Psdd p = Psdd::from_sdd(m, base);
  fit_ml(p, data, opts);
  return p;
}

// --- file format ------------------------------------------------------------------

void write_psdd(std::ostream& out, const Psdd& p) {
  std::ostringstream params;
  params.precision(17);
  out << "psdd " << p.size() << '\n';
  for (PsddId i = 0; i < p.size(); ++i) {
    const auto& n = p.node(i);
    switch (n.kind) {
      case PsddKind::Literal: out << "L " << i << ' ' << n.vtree << ' ' << n.lit.dimacs() << '\n'; break;
      case PsddKind::Top:
        out << "T " << i << ' ' << n.vtree << ' ' << n.lit.var() << '\n';
        params << "P " << i << " 0 " << n.theta << " 1 " << 1.0 - n.theta << '\n';
        break;
      case PsddKind::Decision:
        out << "D " << i << ' ' << n.vtree << ' ' << n.elements.size();
        params << "P " << i;
        for (std::size_t k = 0; k < n.elements.size(); ++k) {
          out << ' ' << n.elements[k].prime << ' ' << n.elements[k].sub;
          params << ' ' << k << ' ' << n.elements[k].theta;
        }
        out << '\n';
        params << '\n';
        break;
    }
  }
  out << params.str();
}

std::string to_psdd_string(const Psdd& p) {
  std::ostringstream out;
  write_psdd(out, p);
  return out.str();
}

Psdd read_psdd(std::istream& in, Vtree vtree) {
  Psdd p;
  p.vtree_ = std::move(vtree);
  const Vtree& vt = p.vtree_;
  std::string line;
  std::size_t line_no = 0;
  long declared = -1;
  std::map<long, PsddId> ids;
  auto fail = [&](const std::string& what) { throw ParseError("psdd line " + std::to_string(line_no) + ": " + what); };
  auto lookup = [&](long id) {
    auto it = ids.find(id);
    if (it == ids.end()) fail("reference to unknown node " + std::to_string(id));
    return it->second;
  };
  auto vtree_id = [&](long v) {
    if (v < 0 || static_cast<std::size_t>(v) >= vt.size()) fail("vtree node out of range");
    return static_cast<VtreeId>(v);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag == "c") continue;
    if (tag == "psdd") {
      if (declared >= 0 || !(ls >> declared) || declared <= 0) fail("malformed header");
      continue;
    }
    if (declared < 0) fail("node before `psdd` header");
    long id;
    if (!(ls >> id)) fail("missing node id");
    if (tag == "P") {
      Psdd::Node& n = p.nodes_.at(lookup(id));
      std::size_t k = n.kind == PsddKind::Decision ? n.elements.size() : 2;
      std::vector<double> w(k, -1);
      long idx;
      double value;
      while (ls >> idx >> value) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= k || !(value >= 0 && value <= 1)) fail("bad parameter");
        w[static_cast<std::size_t>(idx)] = value;
      }
      double total = 0;
      for (double x : w) {
        if (x < 0) fail("missing parameter");
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-9) fail("parameters do not sum to 1");
      if (n.kind == PsddKind::Decision)
        for (std::size_t e = 0; e < k; ++e) n.elements[e].theta = w[e];
      else if (n.kind == PsddKind::Top)
        n.theta = w[0];
      else
        fail("literal nodes carry no parameters");
      continue;
    }
    Psdd::Node n{PsddKind::Literal, 0, {}, 0.5, {}};
    long v;
    if (!(ls >> v)) fail("missing vtree node");
    n.vtree = vtree_id(v);
    if (tag == "L" || tag == "T") {
      long lit;
      if (!(ls >> lit) || lit == 0) fail("malformed leaf line");
      n.kind = tag == "L" ? PsddKind::Literal : PsddKind::Top;
      n.lit = tag == "L" ? Literal::from_dimacs(static_cast<std::int32_t>(lit)) : Literal(static_cast<Var>(lit), true);
      if (!vt.is_leaf(n.vtree) || vt.node(n.vtree).var != n.lit.var()) fail("leaf attached to the wrong vtree node");
    } else if (tag == "D") {
      long k;
      if (!(ls >> k) || k <= 0 || vt.is_leaf(n.vtree)) fail("malformed decision line");
      n.kind = PsddKind::Decision;
      for (long j = 0; j < k; ++j) {
        long a, b;
        if (!(ls >> a >> b)) fail("missing element");
        PsddElement e{lookup(a), lookup(b), 1.0 / static_cast<double>(k)};
        if (p.nodes_[e.prime].vtree != vt.left(n.vtree) || p.nodes_[e.sub].vtree != vt.right(n.vtree))
          fail("element not normalized for the decision's vtree node");
        n.elements.push_back(e);
      }
    } else {
      fail("unknown line type `" + tag + "`");
    }
    if (ids.count(id)) fail("duplicate node id");
    p.nodes_.push_back(std::move(n));
    ids[id] = static_cast<PsddId>(p.nodes_.size() - 1);
    p.root_ = ids[id];
  }
  if (declared < 0) throw ParseError("missing `psdd` header");
  if (static_cast<long>(p.nodes_.size()) != declared) throw ParseError("node count does not match the header");
  if (p.nodes_[p.root_].vtree != vt.root()) throw ParseError("root is not normalized for the vtree root");
  return p;
}

Psdd read_psdd_string(std::string_view text, Vtree vtree) {
  std::istringstream in{std::string(text)};
  return read_psdd(in, std::move(vtree));
}

}  // namespace kc
