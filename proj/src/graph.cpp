#include "bilnet/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bilnet/error.hpp"

namespace bilnet {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_label(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw Error(ErrorKind::InvalidInput, "bad node label '" + t + "' in '" + context + "'");
  return std::stoi(t);
}

}  // namespace

std::string to_string(const Edge& e) {
  return std::to_string(e.tail) + "->" + std::to_string(e.head);
}

Edge parse_edge(const std::string& text) {
  auto arrow = text.find("->");
  if (arrow == std::string::npos)
    throw Error(ErrorKind::InvalidInput, "expected 'u->v', got '" + text + "'");
  return Edge{parse_label(text.substr(0, arrow), text), parse_label(text.substr(arrow + 2), text)};
}

std::vector<Edge> parse_edge_list(const std::string& text) {
  std::vector<Edge> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_edge(item));
  return out;
}

// ---------------------------------------------------------------------------
// AttackSet

AttackSet::AttackSet(std::vector<Edge> edges) : edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

AttackSet AttackSet::from_mask(const std::vector<Edge>& ground, std::uint64_t mask) {
  AttackSet s;
  for (std::size_t i = 0; i < ground.size(); ++i)
    if (mask >> i & 1u) s.edges_.push_back(ground[i]);
  std::sort(s.edges_.begin(), s.edges_.end());
  return s;
}

bool AttackSet::contains(const Edge& e) const {
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

AttackSet AttackSet::with(const Edge& e) const {
  auto v = edges_;
  v.push_back(e);
  return AttackSet(std::move(v));
}

AttackSet AttackSet::without(const Edge& e) const {
  auto v = edges_;
  v.erase(std::remove(v.begin(), v.end(), e), v.end());
  AttackSet s;
  s.edges_ = std::move(v);
  return s;
}

std::string AttackSet::str() const {
  std::string out;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (i) out += ';';
    out += to_string(edges_[i]);
  }
  return out;
}

std::size_t AttackSetHash::operator()(const AttackSet& s) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (const auto& e : s.edges()) {
    h ^= static_cast<std::size_t>(e.tail) * 0x9e3779b97f4a7c15ull + static_cast<std::size_t>(e.head);
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// BilinearSystem

BilinearSystem BilinearSystem::from_matrices(Eigen::MatrixXd N0,
                                             const std::vector<Eigen::MatrixXd>& couplings,
                                             Eigen::MatrixXd B) {
  const auto n = N0.rows();
  if (N0.cols() != n || B.rows() != n)
    throw Error(ErrorKind::InvalidInput, "dimension mismatch between N0 and B");
  BilinearSystem sys;
  sys.N0 = std::move(N0);
  for (const auto& N : couplings) {
    if (N.rows() != n || N.cols() != n)
      throw Error(ErrorKind::InvalidInput, "coupling matrix has wrong shape");
    sys.couplings.push_back(Coupling{Edge{}, N});
  }
  sys.B = std::move(B);
  sys.C = Eigen::MatrixXd::Identity(n, n);
  return sys;
}

// ---------------------------------------------------------------------------
// BilinearDigraph

BilinearDigraph BilinearDigraph::create(std::vector<int> nodes,
                                        std::vector<WeightedEdge> edges,
                                        std::vector<int> attacked_nodes,
                                        std::vector<Edge> vulnerable_edges,
                                        double scale, bool weighted_couplings) {
  if (nodes.empty()) throw Error(ErrorKind::InvalidInput, "node set is empty");
  std::sort(nodes.begin(), nodes.end());
  if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
    throw Error(ErrorKind::InvalidInput, "duplicate node label");
  if (nodes.front() < 1) throw Error(ErrorKind::InvalidNode, "node labels must be positive");
  if (!std::isfinite(scale) || scale <= 0)
    throw Error(ErrorKind::InvalidInput, "scale must be a positive finite number");

  BilinearDigraph g;
  g.nodes_ = std::move(nodes);
  g.scale_ = scale;
  g.weighted_couplings_ = weighted_couplings;

  for (const auto& we : edges) {
    if (!g.has_node(we.edge.tail) || !g.has_node(we.edge.head))
      throw Error(ErrorKind::InvalidNode, "edge " + to_string(we.edge) + " has an endpoint outside the node set");
    if (!std::isfinite(we.weight))
      throw Error(ErrorKind::NonFiniteWeight, "edge " + to_string(we.edge));
  }
  std::sort(edges.begin(), edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) { return a.edge < b.edge; });
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i].edge == edges[i - 1].edge)
      throw Error(ErrorKind::InvalidInput, "duplicate edge " + to_string(edges[i].edge));
  g.edges_ = std::move(edges);

  std::sort(attacked_nodes.begin(), attacked_nodes.end());
  attacked_nodes.erase(std::unique(attacked_nodes.begin(), attacked_nodes.end()), attacked_nodes.end());
  for (int v : attacked_nodes)
    if (!g.has_node(v))
      throw Error(ErrorKind::InvalidNode, "attacked node " + std::to_string(v) + " is not in the node set");
  g.attacked_nodes_ = std::move(attacked_nodes);

  std::sort(vulnerable_edges.begin(), vulnerable_edges.end());
  vulnerable_edges.erase(std::unique(vulnerable_edges.begin(), vulnerable_edges.end()),
                         vulnerable_edges.end());
  for (const auto& e : vulnerable_edges)
    if (!g.weight(e))
      throw Error(ErrorKind::InvalidVulnerableEdge, to_string(e) + " is not an edge of the digraph");
  if (vulnerable_edges.size() > 63)
    throw Error(ErrorKind::TooLarge, "at most 63 vulnerable edges are supported");
  g.vulnerable_ = std::move(vulnerable_edges);
  return g;
}

bool BilinearDigraph::has_node(int label) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), label);
}

int BilinearDigraph::index_of(int label) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), label);
  if (it == nodes_.end() || *it != label)
    throw Error(ErrorKind::InvalidNode, "node " + std::to_string(label));
  return static_cast<int>(it - nodes_.begin());
}

std::optional<double> BilinearDigraph::weight(const Edge& e) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e,
                             [](const WeightedEdge& a, const Edge& b) { return a.edge < b; });
  if (it == edges_.end() || it->edge != e) return std::nullopt;
  return it->weight;
}

bool BilinearDigraph::is_vulnerable(const Edge& e) const { return ground_index(e) >= 0; }

int BilinearDigraph::ground_index(const Edge& e) const {
  auto it = std::lower_bound(vulnerable_.begin(), vulnerable_.end(), e);
  if (it == vulnerable_.end() || *it != e) return -1;
  return static_cast<int>(it - vulnerable_.begin());
}

// ---------------------------------------------------------------------------

BilinearDigraph ring_digraph(int n, double self_loop_weight, double forward_weight,
                             double closing_weight, double scale) {
  if (n < 2) throw Error(ErrorKind::InvalidInput, "ring needs at least 2 nodes");
  if (!(self_loop_weight < 0)) throw Error(ErrorKind::BadSign, "self-loop weight must be negative");
  if (!(closing_weight < 0)) throw Error(ErrorKind::BadSign, "closing edge weight must be negative");

  std::vector<int> nodes(n);
  std::vector<WeightedEdge> edges;
  std::vector<Edge> vulnerable;
  for (int i = 1; i <= n; ++i) {
    nodes[i - 1] = i;
    edges.push_back({{i, i}, self_loop_weight});
    const Edge ring_edge{i, i == n ? 1 : i + 1};
    edges.push_back({ring_edge, i == n ? closing_weight : forward_weight});
    vulnerable.push_back(ring_edge);
  }
  return BilinearDigraph::create(std::move(nodes), std::move(edges), {1}, std::move(vulnerable), scale);
}

Eigen::MatrixXd elementary_coupling(int n, int tail_index, int head_index) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  E(head_index, tail_index) = 1.0;
  return E;
}

BilinearSystem assemble_system(const BilinearDigraph& g, const AttackSet& attack) {
  const int n = g.node_count();
  BilinearSystem sys;
  sys.N0 = Eigen::MatrixXd::Zero(n, n);
  for (const auto& we : g.edges())
    sys.N0(g.index_of(we.edge.head), g.index_of(we.edge.tail)) += we.weight;
  sys.N0 *= g.scale();

  for (const auto& e : attack.edges()) {
    if (!g.is_vulnerable(e))
      throw Error(ErrorKind::AttackOutsideGroundSet, to_string(e) + " is not a vulnerable edge");
    Eigen::MatrixXd N = elementary_coupling(n, g.index_of(e.tail), g.index_of(e.head));
    if (g.weighted_couplings()) N *= *g.weight(e);
    sys.couplings.push_back(Coupling{e, std::move(N)});
  }

  const auto& attacked = g.attacked_nodes();
  sys.B = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(attacked.size()));
  for (std::size_t j = 0; j < attacked.size(); ++j)
    sys.B(g.index_of(attacked[j]), static_cast<Eigen::Index>(j)) = 1.0;
  sys.C = Eigen::MatrixXd::Identity(n, n);
  return sys;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::InvalidInput, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::InvalidInput, "field '" + where + "': " + ex.what());
  }
}

}  // namespace

BilinearDigraph digraph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorKind::InvalidInput, std::string("malformed JSON: ") + ex.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "graph spec must be a JSON object");

  static const std::set<std::string> known = {"nodes", "edges", "attacked_nodes",
                                              "vulnerable_edges", "scale", "weighted_couplings"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw Error(ErrorKind::InvalidInput, "unknown field '" + item.key() + "'");

  std::vector<int> nodes;
  const json& jn = require(j, "nodes");
  if (jn.is_number_integer()) {
    const int count = jn.get<int>();
    if (count < 1) throw Error(ErrorKind::InvalidInput, "field 'nodes': must be >= 1");
    for (int i = 1; i <= count; ++i) nodes.push_back(i);
  } else {
    nodes = get_as<std::vector<int>>(jn, "nodes");
  }

  std::vector<WeightedEdge> edges;
  const json& je = require(j, "edges");
  if (!je.is_array()) throw Error(ErrorKind::InvalidInput, "field 'edges': expected an array");
  for (std::size_t i = 0; i < je.size(); ++i) {
    const json& e = je[i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!e.is_object()) throw Error(ErrorKind::InvalidInput, "field '" + where + "': expected an object");
    for (const auto& item : e.items())
      if (item.key() != "tail" && item.key() != "head" && item.key() != "weight")
        throw Error(ErrorKind::InvalidInput, "unknown field '" + where + "." + item.key() + "'");
    if (!e.contains("tail") || !e.contains("head") || !e.contains("weight"))
      throw Error(ErrorKind::InvalidInput, "field '" + where + "': needs tail, head and weight");
    edges.push_back({{get_as<int>(e["tail"], where + ".tail"), get_as<int>(e["head"], where + ".head")},
                     get_as<double>(e["weight"], where + ".weight")});
  }

  std::vector<int> attacked;
  if (j.contains("attacked_nodes")) attacked = get_as<std::vector<int>>(j["attacked_nodes"], "attacked_nodes");

  std::vector<Edge> vulnerable;
  if (j.contains("vulnerable_edges")) {
    auto pairs = get_as<std::vector<std::array<int, 2>>>(j["vulnerable_edges"], "vulnerable_edges");
    for (const auto& p : pairs) vulnerable.push_back({p[0], p[1]});
  }

  const double scale = j.contains("scale") ? get_as<double>(j["scale"], "scale") : 1.0;
  const bool weighted = j.contains("weighted_couplings") && get_as<bool>(j["weighted_couplings"], "weighted_couplings");
  return BilinearDigraph::create(std::move(nodes), std::move(edges), std::move(attacked),
                                 std::move(vulnerable), scale, weighted);
}

BilinearDigraph load_digraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return digraph_from_json(buf.str());
  } catch (const Error& ex) {
    throw Error(ex.kind(), path.string() + ": " + ex.message());
  }
}

std::string digraph_to_json(const BilinearDigraph& g) {
  json j;
  const auto& nodes = g.nodes();
  bool contiguous = true;
  for (std::size_t i = 0; i < nodes.size(); ++i) contiguous &= nodes[i] == static_cast<int>(i) + 1;
  if (contiguous)
    j["nodes"] = nodes.size();
  else
    j["nodes"] = nodes;
  j["edges"] = json::array();
  for (const auto& we : g.edges())
    j["edges"].push_back({{"tail", we.edge.tail}, {"head", we.edge.head}, {"weight", we.weight}});
  j["attacked_nodes"] = g.attacked_nodes();
  j["vulnerable_edges"] = json::array();
  for (const auto& e : g.vulnerable_edges()) j["vulnerable_edges"].push_back({e.tail, e.head});
  j["scale"] = g.scale();
  if (g.weighted_couplings()) j["weighted_couplings"] = true;
  return j.dump(2) + "\n";
}

}  // namespace bilnet
