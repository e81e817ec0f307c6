#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bilnet {

/// Directed edge between 1-based node labels; (u, v) means u -> v.
struct Edge {
  int tail = 0;
  int head = 0;

  bool is_self_loop() const { return tail == head; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct WeightedEdge {
  Edge edge;
  double weight = 0.0;
};

std::string to_string(const Edge& e);  // "u->v"

/// Parses "u->v" (whitespace tolerated). Throws Error(InvalidInput).
Edge parse_edge(const std::string& text);

/// Parses a comma-separated "u->v,..." list; the empty string is the empty list.
std::vector<Edge> parse_edge_list(const std::string& text);

/// Canonical attack set: sorted, duplicate-free edge list.
class AttackSet {
 public:
  AttackSet() = default;
  explicit AttackSet(std::vector<Edge> edges);

  /// Subset of a sorted ground set selected by bit i of mask.
  static AttackSet from_mask(const std::vector<Edge>& ground, std::uint64_t mask);

  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  bool contains(const Edge& e) const;

  AttackSet with(const Edge& e) const;
  AttackSet without(const Edge& e) const;

  /// Semicolon-joined "u->v" list, the CSV representation.
  std::string str() const;

  friend bool operator==(const AttackSet&, const AttackSet&) = default;
  friend auto operator<=>(const AttackSet&, const AttackSet&) = default;

 private:
  std::vector<Edge> edges_;
};

struct AttackSetHash {
  std::size_t operator()(const AttackSet& s) const noexcept;
};

/// One multiplicative channel eta_k * N_k of the bilinear dynamics.
struct Coupling {
  Edge edge;          // originating edge; {0, 0} for synthetic systems
  Eigen::MatrixXd N;  // n x n
};

/// dx/dt = (N0 + sum_k eta_k N_k) x + B v,  y = C x.
struct BilinearSystem {
  Eigen::MatrixXd N0;
  std::vector<Coupling> couplings;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  int n() const { return static_cast<int>(N0.rows()); }

  /// Builds a system with C = I from raw matrices.
  static BilinearSystem from_matrices(Eigen::MatrixXd N0,
                                      const std::vector<Eigen::MatrixXd>& couplings,
                                      Eigen::MatrixXd B);
};

/// The bilinear digraph quintet plus the drift scale c. Immutable once built.
class BilinearDigraph {
 public:
  /// Validating constructor. Node labels are arbitrary positive integers;
  /// the internal index of a node is its rank in sorted order.
  static BilinearDigraph create(std::vector<int> nodes,
                                std::vector<WeightedEdge> edges,
                                std::vector<int> attacked_nodes,
                                std::vector<Edge> vulnerable_edges,
                                double scale = 1.0,
                                bool weighted_couplings = false);

  const std::vector<int>& nodes() const { return nodes_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  const std::vector<int>& attacked_nodes() const { return attacked_nodes_; }
  /// Sorted ground set of vulnerable edges.
  const std::vector<Edge>& vulnerable_edges() const { return vulnerable_; }
  double scale() const { return scale_; }
  bool weighted_couplings() const { return weighted_couplings_; }

  bool has_node(int label) const;
  int index_of(int label) const;  // 0-based; throws InvalidNode
  std::optional<double> weight(const Edge& e) const;
  bool is_vulnerable(const Edge& e) const;

  /// Position of e in vulnerable_edges(), or -1.
  int ground_index(const Edge& e) const;

 private:
  BilinearDigraph() = default;

  std::vector<int> nodes_;
  std::vector<WeightedEdge> edges_;  // sorted by edge
  std::vector<int> attacked_nodes_;  // sorted
  std::vector<Edge> vulnerable_;     // sorted
  double scale_ = 1.0;
  bool weighted_couplings_ = false;
};

/// Ring 1 -> 2 -> ... -> n -> 1 with a self-loop on every node. Node 1 is the
/// only attacked node; the vulnerable edges are the n ring edges.
BilinearDigraph ring_digraph(int n, double self_loop_weight = -0.99,
                             double forward_weight = 1.0,
                             double closing_weight = -1.0, double scale = 1.0);

/// n x n matrix with a single 1 at (head, tail), 0-based indices.
Eigen::MatrixXd elementary_coupling(int n, int tail_index, int head_index);

BilinearSystem assemble_system(const BilinearDigraph& g, const AttackSet& attack);

/// JSON graph-spec I/O. Unknown fields are rejected with Error(InvalidInput).
BilinearDigraph digraph_from_json(const std::string& text);
BilinearDigraph load_digraph(const std::filesystem::path& path);
std::string digraph_to_json(const BilinearDigraph& g);

}  // namespace bilnet
