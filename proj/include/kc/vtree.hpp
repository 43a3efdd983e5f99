#pragma once

// Full binary trees over variables. Node ids are in-order positions, so
// leaves sit at even ids, and `u` lies in the subtree of `v` exactly when
// first(v) <= u <= last(v).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kc/types.hpp"

namespace kc {

using VtreeId = std::uint32_t;
inline constexpr VtreeId kNoVtree = static_cast<VtreeId>(-1);

class Vtree {
public:
  struct Node {
    VtreeId left = kNoVtree;
    VtreeId right = kNoVtree;
    VtreeId parent = kNoVtree;
    Var var = 0;  // leaves only
    VtreeId first = 0;
    VtreeId last = 0;
    std::uint32_t var_count = 0;
  };

  /// Nested description used by the builders: a leaf or a pair of subtrees.
  struct Shape {
    Var var = 0;
    std::vector<Shape> kids;  // empty or exactly two
    static Shape leaf(Var v) { return Shape{v, {}}; }
    static Shape pair(Shape l, Shape r) { return Shape{0, {std::move(l), std::move(r)}}; }
  };

  Vtree() = default;
  /// Validates fullness and that leaf variables are distinct.
  explicit Vtree(const Shape& shape);

  static Vtree right_linear(const std::vector<Var>& order);
  /// Recursive halving; the left half takes the extra variable.
  static Vtree balanced(const std::vector<Var>& order);
  /// Random variable order and random split points, reproducible per seed.
  static Vtree random(const std::vector<Var>& vars, std::uint64_t seed);
  /// Right spine of `y_chunks` balanced subtrees over Y ending at a balanced subtree over X.
  static Vtree constrained(const std::vector<Var>& x, const std::vector<Var>& y, std::size_t y_chunks = 1);

  VtreeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(VtreeId id) const { return nodes_.at(id); }
  bool is_leaf(VtreeId id) const { return nodes_.at(id).left == kNoVtree; }
  VtreeId left(VtreeId id) const { return nodes_.at(id).left; }
  VtreeId right(VtreeId id) const { return nodes_.at(id).right; }
  VtreeId parent(VtreeId id) const { return nodes_.at(id).parent; }

  bool contains(VtreeId outer, VtreeId inner) const {
    const auto& n = nodes_.at(outer);
    return n.first <= inner && inner <= n.last;
  }
  bool in_left(VtreeId outer, VtreeId inner) const { return nodes_.at(outer).first <= inner && inner < outer; }
  bool in_right(VtreeId outer, VtreeId inner) const { return outer < inner && inner <= nodes_.at(outer).last; }
  VtreeId lca(VtreeId a, VtreeId b) const;

  /// Leaf of `v`; kNoVtree when v is not in the tree.
  VtreeId leaf_of(Var v) const { return v < leaf_of_.size() ? leaf_of_[v] : kNoVtree; }
  bool has_var(Var v) const { return leaf_of(v) != kNoVtree; }
  /// Variables in left-to-right leaf order.
  std::vector<Var> variables() const;
  std::vector<Var> variables(VtreeId id) const;
  Var max_var() const { return leaf_of_.empty() ? 0 : static_cast<Var>(leaf_of_.size() - 1); }
  /// Levels on the longest root-to-leaf path (a single leaf has depth 1).
  std::size_t depth() const;

  Shape shape() const;
  Shape shape(VtreeId id) const;

  friend bool operator==(const Vtree& a, const Vtree& b);

private:
  VtreeId build(const Shape& s, VtreeId parent, std::vector<char>& seen);
  std::vector<Node> nodes_;
  std::vector<VtreeId> leaf_of_;
  VtreeId root_ = kNoVtree;
};

/// True iff a node reachable from the root through right children only has
/// exactly the variables `x`.
bool is_constrained_for(const Vtree& v, const std::vector<Var>& x);
/// That node, or kNoVtree.
VtreeId constrained_node(const Vtree& v, const std::vector<Var>& x);

/// `vtree N`, then `L id var` and `I id left right` lines, children first.
/// Lines starting with `c` are ignored on read.
Vtree parse_vtree(std::istream& in);
Vtree parse_vtree_string(std::string_view text);
void write_vtree(std::ostream& out, const Vtree& v);
std::string to_vtree_string(const Vtree& v);

}  // namespace kc
