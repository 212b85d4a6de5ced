#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgm/common.hpp"

namespace sgm {

constexpr int kNumAttributes = 4;

/// Attribute/relation vocabulary. Attribute order is fixed (color, shape,
/// size, material) and concept ids are global across attributes, numbered
/// attribute-major, so names must be unique across the whole catalog.
struct AttributeCatalog {
  std::vector<std::string> attribute_names;
  std::vector<std::vector<std::string>> values;  // per attribute
  std::vector<std::string> relations;            // left, right, front, behind

  int num_attributes() const { return static_cast<int>(attribute_names.size()); }
  int num_concepts() const {
    int n = 0;
    for (const auto& v : values) n += static_cast<int>(v.size());
    return n;
  }
  int concept_offset(int attr) const {
    int off = 0;
    for (int a = 0; a < attr; ++a) off += static_cast<int>(values[a].size());
    return off;
  }
  int concept_id(int attr, int value_index) const { return concept_offset(attr) + value_index; }
  int attribute_of_concept(int cid) const {
    for (int a = 0; a < num_attributes(); ++a) {
      int off = concept_offset(a);
      if (cid >= off && cid < off + static_cast<int>(values[a].size())) return a;
    }
    fail("concept id out of range");
  }
  int value_index_of_concept(int cid) const {
    return cid - concept_offset(attribute_of_concept(cid));
  }
  const std::string& concept_name(int cid) const {
    int a = attribute_of_concept(cid);
    return values[a][cid - concept_offset(a)];
  }
  std::optional<int> concept_by_name(const std::string& name) const {
    for (int a = 0; a < num_attributes(); ++a)
      for (int v = 0; v < static_cast<int>(values[a].size()); ++v)
        if (values[a][v] == name) return concept_id(a, v);
    return std::nullopt;
  }
  std::optional<int> attribute_by_name(const std::string& name) const {
    for (int a = 0; a < num_attributes(); ++a)
      if (attribute_names[a] == name) return a;
    return std::nullopt;
  }
  std::optional<int> relation_by_name(const std::string& name) const {
    for (int r = 0; r < static_cast<int>(relations.size()); ++r)
      if (relations[r] == name) return r;
    return std::nullopt;
  }

  static AttributeCatalog clevr();
  void validate() const;
};

// Relation ids under the default catalog order.
constexpr int kRelLeft = 0, kRelRight = 1, kRelFront = 2, kRelBehind = 3;

struct SymbolicObject {
  int id = 0;
  std::array<int, kNumAttributes> concepts{};  // global concept id per attribute
  double x = 0.0;
  double y = 0.0;
};

struct SymbolicScene {
  std::vector<SymbolicObject> objects;

  int index_of_id(int id) const {
    for (int i = 0; i < static_cast<int>(objects.size()); ++i)
      if (objects[i].id == id) return i;
    return -1;
  }
};

/// Relations of b relative to a: one of {left, right} and one of
/// {front, behind}. Exact coordinate ties have no defined relation.
std::pair<int, int> derive_relation(const SymbolicObject& a, const SymbolicObject& b);

/// Perceived scene: embedding per node, dense embeddings for every ordered
/// node pair. Graphs are immutable values; the structural operations below
/// return new graphs and never mutate their input.
struct SceneGraph {
  struct Node {
    int id = 0;
    std::vector<float> embedding;
    std::optional<SymbolicObject> symbol;
  };

  std::vector<Node> nodes;
  int edge_dim = 0;
  std::vector<std::vector<float>> edges;  // slot (i,j) for positions i != j

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  int edge_slot(int i, int j) const {
    require(i != j && i >= 0 && j >= 0 && i < num_nodes() && j < num_nodes(),
            "edge_slot: bad node positions");
    return i * (num_nodes() - 1) + (j < i ? j : j - 1);
  }
  const std::vector<float>& edge(int i, int j) const { return edges[edge_slot(i, j)]; }
  std::vector<float>& edge(int i, int j) { return edges[edge_slot(i, j)]; }

  int index_of_id(int id) const {
    for (int i = 0; i < num_nodes(); ++i)
      if (nodes[i].id == id) return i;
    return -1;
  }
};

/// Removes the nodes with the given ids (duplicates collapse). Unknown id is
/// an error. Surviving nodes keep their order, ids and exact embeddings.
SceneGraph remove_node(const SceneGraph& g, const std::vector<int>& ids);

struct EdgePair {
  std::vector<float> out;  // edge (new -> peer)
  std::vector<float> in;   // edge (peer -> new)
};

/// Appends a node. `edges` must cover every existing node id exactly once.
SceneGraph insert_node(const SceneGraph& g, SceneGraph::Node node,
                       const std::map<int, EdgePair>& edges);

// JSON scene format: {"objects":[{"id","color","shape","size","material","x","y"}]}
std::string scene_to_json(const SymbolicScene& s, const AttributeCatalog& cat);
SymbolicScene scene_from_json(const std::string& text, const AttributeCatalog& cat);

}  // namespace sgm
