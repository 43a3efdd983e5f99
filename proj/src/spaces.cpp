#include "kc/spaces.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kc/sdd.hpp"

namespace kc {

namespace {

void exactly_one(Cnf& cnf, const std::vector<Var>& vars) {
  Clause at_least;
  for (Var v : vars) at_least.emplace_back(v, true);
  cnf.clauses.push_back(at_least);
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j) cnf.clauses.push_back({Literal(vars[i], false), Literal(vars[j], false)});
}

void at_most_one(Cnf& cnf, const std::vector<Var>& vars) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j) cnf.clauses.push_back({Literal(vars[i], false), Literal(vars[j], false)});
}

/// Every variable in `from` implies some variable in `to`.
void each_implies_some(Cnf& cnf, const std::vector<Var>& from, const std::vector<Var>& to) {
  for (Var v : from) {
    Clause c{Literal(v, false)};
    for (Var u : to) c.emplace_back(u, true);
    cnf.clauses.push_back(c);
  }
}

}  // namespace

Cnf encode_rankings(unsigned n) {
  if (n < 1) throw std::invalid_argument("rankings need at least one item");
  if (n > 8) throw CapacityError("rankings limited to 8 items");
  RankingSpace space{n};
  Cnf cnf;
  cnf.var_count = n * n;
  for (unsigned i = 0; i < n; ++i) {
    std::vector<Var> row, col;
    for (unsigned j = 0; j < n; ++j) {
      row.push_back(space.var_of(i, j));
      col.push_back(space.var_of(j, i));
    }
    exactly_one(cnf, row);
    exactly_one(cnf, col);
  }
  return cnf;
}

std::vector<std::pair<unsigned, unsigned>> GridSpace::edges() const {
  std::vector<std::pair<unsigned, unsigned>> out;
  for (unsigned y = 0; y <= height; ++y)
    for (unsigned x = 0; x <= width; ++x) {
      if (x < width) out.emplace_back(node(x, y), node(x + 1, y));
      if (y < height) out.emplace_back(node(x, y), node(x, y + 1));
    }
  return out;
}

Cnf encode_grid_routes_monotone(unsigned width, unsigned height) {
  if (width > 6 || height > 6) throw CapacityError("grid routes limited to width, height <= 6");
  if (width + height == 0) throw std::invalid_argument("grid needs at least one edge");
  GridSpace g{width, height};
  auto edges = g.edges();
  const unsigned nodes = (width + 1) * (height + 1);
  std::vector<std::vector<Var>> in(nodes), out(nodes);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    out[edges[k].first].push_back(static_cast<Var>(k + 1));
    in[edges[k].second].push_back(static_cast<Var>(k + 1));
  }
  Cnf cnf;
  cnf.var_count = static_cast<Var>(edges.size());
  const unsigned source = g.node(0, 0), target = g.node(width, height);
  for (unsigned v = 0; v < nodes; ++v) {
    if (v == source) {
      exactly_one(cnf, out[v]);
    } else if (v == target) {
      exactly_one(cnf, in[v]);
    } else {
      // Flow conservation: at most one edge in and out, and one iff the other.
      at_most_one(cnf, in[v]);
      at_most_one(cnf, out[v]);
      each_implies_some(cnf, in[v], out[v]);
      each_implies_some(cnf, out[v], in[v]);
    }
  }
  return cnf;
}

Graph parse_graph(std::istream& in) {
  Graph g;
  std::size_t e = 0;
  long nv = 0, ne = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& what) { throw ParseError("graph line " + std::to_string(line_no) + ": " + what); };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == 'c' || first[0] == '#') continue;
    std::istringstream row(line);
    long a, b;
    if (!(row >> a >> b)) fail("expected two integers");
    std::string extra;
    if (row >> extra) fail("trailing tokens");
    if (!header) {
      if (a < 0 || b < 0) fail("negative counts");
      nv = a;
      ne = b;
      g.node_count = static_cast<unsigned>(nv);
      header = true;
      continue;
    }
    if (a < 0 || b < 0 || a >= nv || b >= nv) fail("endpoint out of range");
    if (a == b) fail("self loops are not allowed");
    g.edges.emplace_back(static_cast<unsigned>(a), static_cast<unsigned>(b));
    ++e;
  }
  if (!header) throw ParseError("graph file has no header");
  if (static_cast<long>(e) != ne) throw ParseError("header declares " + std::to_string(ne) + " edges, found " + std::to_string(e));
  return g;
}

Graph parse_graph_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_graph(in);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.node_count << ' ' << g.edges.size() << '\n';
  for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
}

namespace {

/// Edge sets of the cycles in a degree-feasible selection that do not touch
/// the s-t path.
std::vector<std::vector<std::size_t>> detached_cycles(const Graph& g, std::uint32_t chosen, unsigned s) {
  std::vector<std::vector<std::size_t>> incident(g.node_count);
  for (std::size_t k = 0; k < g.edges.size(); ++k)
    if ((chosen >> k) & 1U) {
      incident[g.edges[k].first].push_back(k);
      incident[g.edges[k].second].push_back(k);
    }
  // Connected components of the selected edges.
  std::vector<int> comp(g.node_count, -1);
  std::vector<std::vector<std::size_t>> comp_edges;
  for (unsigned start = 0; start < g.node_count; ++start) {
    if (comp[start] >= 0 || incident[start].empty()) continue;
    int id = static_cast<int>(comp_edges.size());
    comp_edges.emplace_back();
    std::vector<unsigned> stack{start};
    comp[start] = id;
    while (!stack.empty()) {
      unsigned u = stack.back();
      stack.pop_back();
      for (std::size_t k : incident[u]) {
        unsigned w = g.edges[k].first == u ? g.edges[k].second : g.edges[k].first;
        if (comp[w] < 0) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
  }
  for (std::size_t k = 0; k < g.edges.size(); ++k)
    if ((chosen >> k) & 1U) comp_edges[static_cast<std::size_t>(comp[g.edges[k].first])].push_back(k);
  std::vector<std::vector<std::size_t>> cycles;
  for (std::size_t c = 0; c < comp_edges.size(); ++c)
    if (static_cast<int>(c) != comp[s]) cycles.push_back(comp_edges[c]);
  return cycles;
}

}  // namespace

Cnf encode_simple_routes(const Graph& g, unsigned s, unsigned t) {
  if (s >= g.node_count || t >= g.node_count) throw std::invalid_argument("route endpoints out of range");
  if (s == t) throw std::invalid_argument("route endpoints must differ");
  if (g.edges.size() > 14) throw CapacityError("simple-route encoding limited to 14 edges");
  Cnf cnf;
  cnf.var_count = static_cast<Var>(g.edges.size());
  std::vector<std::vector<Var>> incident(g.node_count);
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    incident[g.edges[k].first].push_back(static_cast<Var>(k + 1));
    incident[g.edges[k].second].push_back(static_cast<Var>(k + 1));
  }
  for (unsigned v = 0; v < g.node_count; ++v) {
    const auto& es = incident[v];
    if (v == s || v == t) {
      if (es.empty()) {
        cnf.clauses.push_back({});
        continue;
      }
      exactly_one(cnf, es);
      continue;
    }
    // Degree 0 or 2: no three edges together, and each edge needs a partner.
    for (std::size_t a = 0; a < es.size(); ++a)
      for (std::size_t b = a + 1; b < es.size(); ++b)
        for (std::size_t c = b + 1; c < es.size(); ++c)
          cnf.clauses.push_back({Literal(es[a], false), Literal(es[b], false), Literal(es[c], false)});
    for (std::size_t a = 0; a < es.size(); ++a) {
      Clause partner{Literal(es[a], false)};
      for (std::size_t b = 0; b < es.size(); ++b)
        if (b != a) partner.emplace_back(es[b], true);
      cnf.clauses.push_back(partner);
    }
  }
  // Lazy exclusion of detached cycles until a full enumeration finds none.
  const std::uint32_t limit = std::uint32_t{1} << g.edges.size();
  while (true) {
    std::size_t added = 0;
    for (std::uint32_t b = 0; b < limit; ++b) {
      bool ok = true;
      for (const auto& clause : cnf.clauses) {
        bool sat = false;
        for (Literal l : clause) sat = sat || (((b >> (l.var() - 1)) & 1U) != 0) == l.positive();
        if (!sat) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (const auto& cycle : detached_cycles(g, b, s)) {
        Clause block;
        for (std::size_t k : cycle) block.emplace_back(static_cast<Var>(k + 1), false);
        cnf.clauses.push_back(block);
        ++added;
      }
    }
    if (added == 0) break;
  }
  return cnf;
}

Dataset sample_space_dataset(const Cnf& space, std::uint64_t seed, std::size_t count) {
  if (space.var_count == 0) throw std::invalid_argument("space has no variables");
  std::vector<Var> order(space.var_count);
  std::iota(order.begin(), order.end(), Var{1});
  SddManager m(Vtree::balanced(order));
  SddId f = m.compile_cnf(space);
  if (f == kSddFalse) throw SemanticError("space has no models to sample");
  Psdd p = Psdd::from_sdd(m, f);
  p.set_uniform_over_models();
  return p.sample(seed, count);
}

}  // namespace kc
