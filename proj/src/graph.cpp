#include "postwalk/graph.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace postwalk {

NetworkGraph NetworkGraph::from_adjacency(Eigen::MatrixXi adjacency) {
  const auto n = adjacency.rows();
  if (n < 1 || adjacency.cols() != n) throw std::invalid_argument("adjacency must be square and non-empty");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (adjacency(k, k) != 0) throw std::invalid_argument("adjacency diagonal must be zero (no self loops)");
    for (Eigen::Index j = 0; j < n; ++j) {
      const int a = adjacency(k, j);
      if (a != 0 && a != 1) throw std::invalid_argument("adjacency entries must be 0 or 1");
      if (a != adjacency(j, k)) throw std::invalid_argument("adjacency must be symmetric");
    }
  }
  NetworkGraph g;
  g.degrees_ = adjacency.rowwise().sum();
  g.adjacency_ = std::move(adjacency);
  return g;
}

NetworkGraph NetworkGraph::from_edges(int n, std::span<const Edge> edges) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
    if (u == v) throw std::invalid_argument("self loop at node " + std::to_string(u));
    if (a(u, v) != 0) {
      throw std::invalid_argument("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    }
    a(u, v) = a(v, u) = 1;
  }
  return from_adjacency(std::move(a));
}

std::vector<Edge> NetworkGraph::edges() const {
  std::vector<Edge> out;
  for (int k = 0; k < size(); ++k)
    for (int j = k + 1; j < size(); ++j)
      if (adjacency_(k, j) != 0) out.emplace_back(k, j);
  return out;
}

bool NetworkGraph::is_connected() const {
  if (size() == 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(size()), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    for (int j = 0; j < size(); ++j) {
      if (adjacency_(k, j) != 0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == size();
}

bool NetworkGraph::is_regular() const {
  return size() > 0 && (degrees_.array() == degrees_(0)).all();
}

NetworkGraph build_grid_topology(int rows, int cols, GridKind kind) {
  if (rows < 3 || cols < 3) {
    throw std::invalid_argument("grid topologies need rows >= 3 and cols >= 3");
  }
  const auto index = [cols](int r, int c) { return r * cols + c; };
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(index(r, c), index(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(index(r, c), index(r + 1, c));
    }
  }
  for (int r = 0; r < rows; ++r) {
    const int partner = kind == GridKind::Moebius ? rows - 1 - r : r;
    edges.emplace_back(index(r, cols - 1), index(partner, 0));
  }
  if (kind == GridKind::Torus) {
    for (int c = 0; c < cols; ++c) edges.emplace_back(index(rows - 1, c), index(0, c));
  }
  return NetworkGraph::from_edges(rows * cols, edges);
}

NetworkGraph build_simple_topology(int n, SimpleKind kind) {
  const int minimum = kind == SimpleKind::Cycle ? 3 : 2;
  if (n < minimum) {
    throw std::invalid_argument(to_string(kind) + " graph needs at least " + std::to_string(minimum) + " nodes");
  }
  std::vector<Edge> edges;
  switch (kind) {
    case SimpleKind::Line:
      for (int k = 0; k + 1 < n; ++k) edges.emplace_back(k, k + 1);
      break;
    case SimpleKind::Cycle:
      for (int k = 0; k < n; ++k) edges.emplace_back(std::min(k, (k + 1) % n), std::max(k, (k + 1) % n));
      break;
    case SimpleKind::Star:
      for (int k = 1; k < n; ++k) edges.emplace_back(0, k);
      break;
    case SimpleKind::Complete:
      for (int k = 0; k < n; ++k)
        for (int j = k + 1; j < n; ++j) edges.emplace_back(k, j);
      break;
  }
  return NetworkGraph::from_edges(n, edges);
}

NodeRemoval remove_nodes(const NetworkGraph& g, std::span<const int> nodes) {
  const int n = g.size();
  std::vector<char> removed(static_cast<std::size_t>(n), 0);
  for (int k : nodes) {
    if (k < 0 || k >= n) throw std::out_of_range("node " + std::to_string(k) + " not in graph");
    if (removed[static_cast<std::size_t>(k)]) throw std::invalid_argument("node " + std::to_string(k) + " removed twice");
    removed[static_cast<std::size_t>(k)] = 1;
  }
  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int k = 0; k < n; ++k)
    if (!removed[static_cast<std::size_t>(k)]) new_index[static_cast<std::size_t>(k)] = next++;
  if (next == 0) throw std::invalid_argument("cannot remove every node");

  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(next, next);
  for (int k = 0; k < n; ++k) {
    const int nk = new_index[static_cast<std::size_t>(k)];
    if (nk < 0) continue;
    for (int j = 0; j < n; ++j) {
      const int nj = new_index[static_cast<std::size_t>(j)];
      if (nj >= 0) a(nk, nj) = g.adjacency()(k, j);
    }
  }
  NodeRemoval out{NetworkGraph::from_adjacency(std::move(a)), std::move(new_index)};
  if (!out.graph.is_connected()) throw std::invalid_argument("node removal disconnects the graph");
  return out;
}

NodeRemoval remove_node(const NetworkGraph& g, int k) {
  const int nodes[] = {k};
  return remove_nodes(g, nodes);
}

Eigen::MatrixXd laplacian(const NetworkGraph& g) {
  Eigen::MatrixXd h = -g.adjacency().cast<double>();
  h.diagonal() = g.degrees().cast<double>();
  return h;
}

void write_edge_list_csv(std::ostream& out, const NetworkGraph& g) {
  out << "src,dst\n";
  for (const auto& [u, v] : g.edges()) out << u << ',' << v << '\n';
}

GridKind parse_grid_kind(std::string_view name) {
  if (name == "cylinder") return GridKind::Cylinder;
  if (name == "moebius" || name == "mobius") return GridKind::Moebius;
  if (name == "torus") return GridKind::Torus;
  throw std::invalid_argument("unknown grid family '" + std::string(name) + "'");
}

SimpleKind parse_simple_kind(std::string_view name) {
  if (name == "line") return SimpleKind::Line;
  if (name == "cycle") return SimpleKind::Cycle;
  if (name == "star") return SimpleKind::Star;
  if (name == "complete") return SimpleKind::Complete;
  throw std::invalid_argument("unknown graph family '" + std::string(name) + "'");
}

bool is_grid_family(std::string_view name) {
  return name == "cylinder" || name == "moebius" || name == "mobius" || name == "torus";
}

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::Cylinder: return "cylinder";
    case GridKind::Moebius: return "moebius";
    case GridKind::Torus: return "torus";
  }
  return "?";
}

std::string to_string(SimpleKind kind) {
  switch (kind) {
    case SimpleKind::Line: return "line";
    case SimpleKind::Cycle: return "cycle";
    case SimpleKind::Star: return "star";
    case SimpleKind::Complete: return "complete";
  }
  return "?";
}

}  // namespace postwalk
