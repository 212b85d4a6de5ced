#include "sgm/scenegraph.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace sgm {

AttributeCatalog AttributeCatalog::clevr() {
  AttributeCatalog cat;
  cat.attribute_names = {"color", "shape", "size", "material"};
  cat.values = {
      {"gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"},
      {"cube", "sphere", "cylinder"},
      {"small", "large"},
      {"rubber", "metal"},
  };
  cat.relations = {"left", "right", "front", "behind"};
  cat.validate();
  return cat;
}

void AttributeCatalog::validate() const {
  require(num_attributes() == kNumAttributes, "catalog: expected 4 attributes");
  require(relations.size() == 4, "catalog: expected 4 relations");
  std::set<std::string> seen;
  for (const auto& vals : values) {
    require(!vals.empty(), "catalog: attribute with no values");
    for (const auto& v : vals)
      require(seen.insert(v).second, "catalog: duplicate concept name: " + v);
  }
}

std::pair<int, int> derive_relation(const SymbolicObject& a, const SymbolicObject& b) {
  require(b.x != a.x, "derive_relation: x tie between objects " + std::to_string(a.id) +
                          " and " + std::to_string(b.id));
  require(b.y != a.y, "derive_relation: y tie between objects " + std::to_string(a.id) +
                          " and " + std::to_string(b.id));
  int lr = b.x > a.x ? kRelRight : kRelLeft;
  int fb = b.y > a.y ? kRelFront : kRelBehind;
  return {lr, fb};
}

SceneGraph remove_node(const SceneGraph& g, const std::vector<int>& ids) {
  std::set<int> drop(ids.begin(), ids.end());
  for (int id : drop)
    require(g.index_of_id(id) >= 0, "remove_node: unknown node id " + std::to_string(id));
  std::vector<int> keep;
  for (int i = 0; i < g.num_nodes(); ++i)
    if (!drop.count(g.nodes[i].id)) keep.push_back(i);

  SceneGraph out;
  out.edge_dim = g.edge_dim;
  out.nodes.reserve(keep.size());
  for (int i : keep) out.nodes.push_back(g.nodes[i]);
  int n = static_cast<int>(keep.size());
  out.edges.reserve(static_cast<size_t>(n) * (n - 1 > 0 ? n - 1 : 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) out.edges.push_back(g.edge(keep[i], keep[j]));
  return out;
}

SceneGraph insert_node(const SceneGraph& g, SceneGraph::Node node,
                       const std::map<int, EdgePair>& edges) {
  require(g.index_of_id(node.id) < 0, "insert_node: id already present");
  require(static_cast<int>(edges.size()) == g.num_nodes(),
          "insert_node: edges must cover every existing node exactly once");
  for (const auto& n : g.nodes)
    require(edges.count(n.id), "insert_node: missing edge pair for node id " +
                                   std::to_string(n.id));
  for (const auto& [id, pair] : edges)
    require(static_cast<int>(pair.out.size()) == g.edge_dim &&
                static_cast<int>(pair.in.size()) == g.edge_dim,
            "insert_node: edge dimension mismatch");
  SceneGraph out;
  out.edge_dim = g.edge_dim;
  out.nodes = g.nodes;
  out.nodes.push_back(std::move(node));
  int n = out.num_nodes();
  out.edges.reserve(static_cast<size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (i < n - 1 && j < n - 1) {
        out.edges.push_back(g.edge(i, j));
      } else if (i == n - 1) {
        out.edges.push_back(edges.at(out.nodes[j].id).out);
      } else {
        out.edges.push_back(edges.at(out.nodes[i].id).in);
      }
    }
  }
  return out;
}

std::string scene_to_json(const SymbolicScene& s, const AttributeCatalog& cat) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : s.objects) {
    nlohmann::json j;
    j["id"] = o.id;
    for (int a = 0; a < cat.num_attributes(); ++a)
      j[cat.attribute_names[a]] = cat.concept_name(o.concepts[a]);
    j["x"] = o.x;
    j["y"] = o.y;
    objs.push_back(std::move(j));
  }
  nlohmann::json root;
  root["objects"] = std::move(objs);
  return root.dump();
}

SymbolicScene scene_from_json(const std::string& text, const AttributeCatalog& cat) {
  nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
  require(!root.is_discarded() && root.contains("objects") && root["objects"].is_array(),
          "scene json: expected {\"objects\": [...]}");
  SymbolicScene s;
  for (const auto& j : root["objects"]) {
    SymbolicObject o;
    o.id = j.at("id").get<int>();
    for (int a = 0; a < cat.num_attributes(); ++a) {
      std::string name = j.at(cat.attribute_names[a]).get<std::string>();
      auto c = cat.concept_by_name(name);
      require(c.has_value(), "scene json: unknown " + cat.attribute_names[a] + " value: " + name);
      o.concepts[a] = *c;
    }
    o.x = j.at("x").get<double>();
    o.y = j.at("y").get<double>();
    s.objects.push_back(o);
  }
  return s;
}

}  // namespace sgm
