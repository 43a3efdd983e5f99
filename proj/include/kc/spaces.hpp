#pragma once

// CNF encodings of combinatorial spaces whose models are exactly the valid
// objects: rankings, monotone grid routes and simple routes in a graph.

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include "kc/cnf.hpp"
#include "kc/psdd.hpp"

namespace kc {

/// Item i (0-based) at position j (0-based) is variable i*n + j + 1.
struct RankingSpace {
  unsigned n;
  Var var_of(unsigned item, unsigned position) const { return static_cast<Var>(item * n + position + 1); }
};

/// Exactly one position per item and one item per position. 1 <= n <= 8
/// (CapacityError above).
Cnf encode_rankings(unsigned n);

/// Lattice of (width+1) x (height+1) nodes; paths go right or down from the
/// top-left corner to the bottom-right corner.
struct GridSpace {
  unsigned width, height;
  unsigned node(unsigned x, unsigned y) const { return y * (width + 1) + x; }
  /// Edges in variable order: edge k is variable k + 1.
  std::vector<std::pair<unsigned, unsigned>> edges() const;
};

/// Models are exactly the monotone corner-to-corner paths. width, height <= 6
/// (CapacityError above).
Cnf encode_grid_routes_monotone(unsigned width, unsigned height);

struct Graph {
  unsigned node_count = 0;
  std::vector<std::pair<unsigned, unsigned>> edges;  // edge i is variable i + 1
};

/// `v_count e_count`, then one `u v` line per edge with 0-based endpoints.
Graph parse_graph(std::istream& in);
Graph parse_graph_string(std::string_view text);
void write_graph(std::ostream& out, const Graph& g);

/// Models are exactly the simple s-t paths. Degree constraints plus clauses
/// excluding detached cycles, added until enumeration finds none. At most 14
/// edges (CapacityError otherwise); s == t is rejected.
Cnf encode_simple_routes(const Graph& g, unsigned s, unsigned t);

/// Uniform samples over the models of `space`, reproducible per seed.
Dataset sample_space_dataset(const Cnf& space, std::uint64_t seed, std::size_t count);

}  // namespace kc
