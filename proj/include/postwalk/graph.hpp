#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace postwalk {

enum class GridKind { Cylinder, Moebius, Torus };
enum class SimpleKind { Line, Cycle, Star, Complete };

using Edge = std::pair<int, int>;

/// Undirected, unweighted simple graph with dense 0/1 adjacency.
///
/// Instances are immutable once built; every constructor path validates
/// symmetry, the zero diagonal and 0/1 entries, and caches the degree vector.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  static NetworkGraph from_adjacency(Eigen::MatrixXi adjacency);
  static NetworkGraph from_edges(int n, std::span<const Edge> edges);

  int size() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXi& adjacency() const { return adjacency_; }
  const Eigen::VectorXi& degrees() const { return degrees_; }
  int degree(int k) const { return degrees_(k); }
  bool adjacent(int k, int j) const { return adjacency_(k, j) != 0; }

  /// Undirected edges with first < second, lexicographic order.
  std::vector<Edge> edges() const;
  int edge_count() const { return degrees_.sum() / 2; }

  bool is_connected() const;
  bool is_regular() const;

 private:
  Eigen::MatrixXi adjacency_;
  Eigen::VectorXi degrees_;
};

/// rows x cols sheet with row-major indexing (index = r * cols + c).
/// Cylinder wraps columns, torus wraps both directions, Moebius wraps columns
/// with a flip: (r, cols - 1) joins (rows - 1 - r, 0).
NetworkGraph build_grid_topology(int rows, int cols, GridKind kind);

/// Line, cycle, star (hub at index 0) or complete graph on n nodes.
NetworkGraph build_simple_topology(int n, SimpleKind kind);

/// Graph after deleting nodes, with the original -> new index map (-1 for removed nodes).
struct NodeRemoval {
  NetworkGraph graph;
  std::vector<int> new_index;
};

NodeRemoval remove_node(const NetworkGraph& g, int k);
NodeRemoval remove_nodes(const NetworkGraph& g, std::span<const int> nodes);

/// Graph Laplacian H = D - A.
Eigen::MatrixXd laplacian(const NetworkGraph& g);

void write_edge_list_csv(std::ostream& out, const NetworkGraph& g);

GridKind parse_grid_kind(std::string_view name);
SimpleKind parse_simple_kind(std::string_view name);
bool is_grid_family(std::string_view name);
std::string to_string(GridKind kind);
std::string to_string(SimpleKind kind);

}  // namespace postwalk
