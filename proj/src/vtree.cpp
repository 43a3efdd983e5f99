#include "kc/vtree.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace kc {

namespace {

std::size_t count_leaves(const Vtree::Shape& s) {
  if (s.kids.empty()) return 1;
  return count_leaves(s.kids[0]) + count_leaves(s.kids[1]);
}

Vtree::Shape balanced_shape(const std::vector<Var>& order, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return Vtree::Shape::leaf(order[lo]);
  std::size_t mid = lo + (hi - lo + 1) / 2;
  return Vtree::Shape::pair(balanced_shape(order, lo, mid), balanced_shape(order, mid, hi));
}

Vtree::Shape random_shape(const std::vector<Var>& order, std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  if (hi - lo == 1) return Vtree::Shape::leaf(order[lo]);
  std::size_t split = lo + 1 + static_cast<std::size_t>(rng() % (hi - lo - 1));
  auto l = random_shape(order, lo, split, rng);
  return Vtree::Shape::pair(std::move(l), random_shape(order, split, hi, rng));
}

}  // namespace

Vtree::Vtree(const Shape& shape) {
  std::size_t leaves = count_leaves(shape);
  nodes_.reserve(2 * leaves - 1);
  std::vector<char> seen;
  root_ = build(shape, kNoVtree, seen);
}

VtreeId Vtree::build(const Shape& s, VtreeId parent, std::vector<char>& seen) {
  if (s.kids.empty()) {
    if (s.var == 0) throw std::invalid_argument("vtree leaf without a variable");
    if (s.var >= seen.size()) seen.resize(static_cast<std::size_t>(s.var) + 1, 0);
    if (seen[s.var]) throw std::invalid_argument("variable " + std::to_string(s.var) + " appears twice in vtree");
    seen[s.var] = 1;
    auto id = static_cast<VtreeId>(nodes_.size());
    nodes_.push_back(Node{kNoVtree, kNoVtree, parent, s.var, id, id, 1});
    if (s.var >= leaf_of_.size()) leaf_of_.resize(static_cast<std::size_t>(s.var) + 1, kNoVtree);
    leaf_of_[s.var] = id;
    return id;
  }
  if (s.kids.size() != 2) throw std::invalid_argument("vtree internal nodes need exactly two children");
  // Left subtree first, then this node, then the right subtree: in-order ids.
  VtreeId l = build(s.kids[0], kNoVtree, seen);
  auto id = static_cast<VtreeId>(nodes_.size());
  nodes_.push_back(Node{});
  VtreeId r = build(s.kids[1], id, seen);
  nodes_[l].parent = id;
  auto& n = nodes_[id];
  n.left = l;
  n.right = r;
  n.parent = parent;
  n.first = nodes_[l].first;
  n.last = nodes_[r].last;
  n.var_count = nodes_[l].var_count + nodes_[r].var_count;
  return id;
}

Vtree Vtree::right_linear(const std::vector<Var>& order) {
  if (order.empty()) throw std::invalid_argument("vtree needs at least one variable");
  Shape s = Shape::leaf(order.back());
  for (std::size_t i = order.size() - 1; i-- > 0;) s = Shape::pair(Shape::leaf(order[i]), std::move(s));
  return Vtree(s);
}

Vtree Vtree::balanced(const std::vector<Var>& order) {
  if (order.empty()) throw std::invalid_argument("vtree needs at least one variable");
  return Vtree(balanced_shape(order, 0, order.size()));
}

Vtree Vtree::random(const std::vector<Var>& vars, std::uint64_t seed) {
  if (vars.empty()) throw std::invalid_argument("vtree needs at least one variable");
  std::mt19937_64 rng(seed);
  std::vector<Var> order = vars;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return Vtree(random_shape(order, 0, order.size(), rng));
}

Vtree Vtree::constrained(const std::vector<Var>& x, const std::vector<Var>& y, std::size_t y_chunks) {
  if (x.empty() || y.empty()) throw std::invalid_argument("constrained vtree needs nonempty X and Y");
  for (Var v : x)
    if (std::find(y.begin(), y.end(), v) != y.end())
      throw std::invalid_argument("variable " + std::to_string(v) + " is in both X and Y");
  y_chunks = std::clamp<std::size_t>(y_chunks, 1, y.size());
  Shape s = balanced_shape(x, 0, x.size());
  // Chunks are laid out so the first chunk hangs off the root.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t c = 0; c < y_chunks; ++c)
    ranges.emplace_back(c * y.size() / y_chunks, (c + 1) * y.size() / y_chunks);
  for (auto it = ranges.rbegin(); it != ranges.rend(); ++it)
    s = Shape::pair(balanced_shape(y, it->first, it->second), std::move(s));
  return Vtree(s);
}

VtreeId Vtree::lca(VtreeId a, VtreeId b) const {
  VtreeId v = a;
  while (!contains(v, b)) v = nodes_.at(v).parent;
  return v;
}

std::vector<Var> Vtree::variables() const { return root_ == kNoVtree ? std::vector<Var>{} : variables(root_); }

std::vector<Var> Vtree::variables(VtreeId id) const {
  std::vector<Var> out;
  const auto& n = nodes_.at(id);
  for (VtreeId i = n.first; i <= n.last; i += 2) out.push_back(nodes_[i].var);
  return out;
}

std::size_t Vtree::depth() const {
  std::size_t best = 0;
  for (VtreeId i = 0; i < nodes_.size(); i += 2) {
    std::size_t d = 1;
    for (VtreeId p = nodes_[i].parent; p != kNoVtree; p = nodes_[p].parent) ++d;
    best = std::max(best, d);
  }
  return best;
}

Vtree::Shape Vtree::shape() const { return shape(root_); }

Vtree::Shape Vtree::shape(VtreeId id) const {
  if (is_leaf(id)) return Shape::leaf(nodes_[id].var);
  return Shape::pair(shape(left(id)), shape(right(id)));
}

bool operator==(const Vtree& a, const Vtree& b) {
  if (a.nodes_.size() != b.nodes_.size() || a.root_ != b.root_) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto &x = a.nodes_[i], &y = b.nodes_[i];
    if (x.left != y.left || x.right != y.right || x.var != y.var) return false;
  }
  return true;
}

VtreeId constrained_node(const Vtree& v, const std::vector<Var>& x) {
  std::vector<Var> want = x;
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  for (VtreeId u = v.root(); u != kNoVtree; u = v.right(u)) {
    if (v.node(u).var_count == want.size()) {
      auto have = v.variables(u);
      std::sort(have.begin(), have.end());
      return have == want ? u : kNoVtree;
    }
    if (v.is_leaf(u)) break;
  }
  return kNoVtree;
}

bool is_constrained_for(const Vtree& v, const std::vector<Var>& x) { return constrained_node(v, x) != kNoVtree; }

Vtree parse_vtree(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  long declared = -1;
  struct Raw {
    bool leaf;
    long a, b;
  };
  std::map<long, Raw> raw;
  std::map<long, int> referenced;
  auto fail = [&](const std::string& what) { throw ParseError("vtree line " + std::to_string(line_no) + ": " + what); };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag == "c") continue;
    if (tag == "vtree") {
      if (declared >= 0 || !(ls >> declared) || declared <= 0) fail("malformed header");
      continue;
    }
    if (declared < 0) fail("node before `vtree` header");
    long id, a, b = -1;
    if (tag == "L") {
      if (!(ls >> id >> a) || a <= 0) fail("malformed leaf line");
      if (!raw.emplace(id, Raw{true, a, -1}).second) fail("duplicate node id " + std::to_string(id));
    } else if (tag == "I") {
      if (!(ls >> id >> a >> b)) fail("malformed internal line");
      if (!raw.count(a) || !raw.count(b)) fail("dangling child id");
      if (++referenced[a] > 1 || ++referenced[b] > 1) fail("node used as a child twice");
      if (!raw.emplace(id, Raw{false, a, b}).second) fail("duplicate node id " + std::to_string(id));
    } else {
      fail("unknown line type `" + tag + "`");
    }
  }
  if (declared < 0) throw ParseError("missing `vtree` header");
  if (static_cast<long>(raw.size()) != declared)
    throw ParseError("header declares " + std::to_string(declared) + " nodes but " + std::to_string(raw.size()) +
                     " were read");
  long root = -1;
  for (const auto& [id, r] : raw)
    if (!referenced.count(id)) {
      if (root >= 0) throw ParseError("vtree has more than one root");
      root = id;
    }
  if (root < 0) throw ParseError("vtree has no root");
  std::function<Vtree::Shape(long)> shape_of = [&](long id) {
    const Raw& r = raw.at(id);
    if (r.leaf) return Vtree::Shape::leaf(static_cast<Var>(r.a));
    return Vtree::Shape::pair(shape_of(r.a), shape_of(r.b));
  };
  try {
    return Vtree(shape_of(root));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

Vtree parse_vtree_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_vtree(in);
}

void write_vtree(std::ostream& out, const Vtree& v) {
  out << "vtree " << v.size() << '\n';
  std::function<void(VtreeId)> emit = [&](VtreeId id) {
    if (v.is_leaf(id)) {
      out << "L " << id << ' ' << v.node(id).var << '\n';
      return;
    }
    emit(v.left(id));
    emit(v.right(id));
    out << "I " << id << ' ' << v.left(id) << ' ' << v.right(id) << '\n';
  };
  if (v.size() > 0) emit(v.root());
}

std::string to_vtree_string(const Vtree& v) {
  std::ostringstream out;
  write_vtree(out, v);
  return out.str();
}

}  // namespace kc
