#include "sgm/perception.hpp"

#include <cmath>

namespace sgm {

Perception::Perception(const AttributeCatalog& cat, Dims dims, double sigma)
    : cat_(&cat), dims_(dims), sigma_(sigma) {}

Perception::Perception(const AttributeCatalog& cat, Dims dims, double sigma, uint64_t seed)
    : Perception(cat, dims, sigma) {
  // Scale keeps per-dimension signal variance near 1 for ~6 active inputs.
  Rng rw(Rng::derive(seed, "percep.w"));
  float ws = 1.0f / std::sqrt(static_cast<float>(cat.num_attributes() + 2));
  w_ = ad::Tensor::mat(dims.d_obj, sym_dim());
  for (auto& v : w_.data) v = ws * static_cast<float>(rw.normal());

  Rng re(Rng::derive(seed, "percep.edge"));
  float es = 1.0f / std::sqrt(static_cast<float>(2 * dims.d_obj));
  edge_proj_ = ad::Tensor::mat(dims.d_edge, 2 * dims.d_obj);
  for (auto& v : edge_proj_.data) v = es * static_cast<float>(re.normal());
}

std::vector<float> Perception::embed_object(const SymbolicObject& o, Rng& noise) const {
  std::vector<float> z(static_cast<size_t>(sym_dim()), 0.0f);
  for (int a = 0; a < cat_->num_attributes(); ++a) z[o.concepts[a]] = 1.0f;
  z[sym_dim() - 2] = static_cast<float>(o.x);
  z[sym_dim() - 1] = static_cast<float>(o.y);
  std::vector<float> out(static_cast<size_t>(dims_.d_obj), 0.0f);
  for (int r = 0; r < dims_.d_obj; ++r) {
    float acc = 0.0f;
    const float* row = w_.data.data() + static_cast<size_t>(r) * w_.d1;
    for (int c = 0; c < w_.d1; ++c) acc += row[c] * z[c];
    out[r] = acc + static_cast<float>(sigma_) * static_cast<float>(noise.normal());
  }
  return out;
}

std::vector<float> Perception::project_edge(const std::vector<float>& oi,
                                            const std::vector<float>& oj) const {
  require(static_cast<int>(oi.size()) == dims_.d_obj &&
              static_cast<int>(oj.size()) == dims_.d_obj,
          "project_edge: bad endpoint dims");
  std::vector<float> out(static_cast<size_t>(dims_.d_edge), 0.0f);
  for (int r = 0; r < dims_.d_edge; ++r) {
    float acc = 0.0f;
    const float* row = edge_proj_.data.data() + static_cast<size_t>(r) * edge_proj_.d1;
    for (int c = 0; c < dims_.d_obj; ++c) acc += row[c] * oi[c];
    for (int c = 0; c < dims_.d_obj; ++c) acc += row[dims_.d_obj + c] * oj[c];
    out[r] = acc;
  }
  return out;
}

SceneGraph Perception::perceive(const SymbolicScene& s, uint64_t noise_seed) const {
  Rng noise(noise_seed);
  SceneGraph g;
  g.edge_dim = dims_.d_edge;
  g.nodes.reserve(s.objects.size());
  for (const auto& o : s.objects) {
    SceneGraph::Node n;
    n.id = o.id;
    n.symbol = o;
    n.embedding = embed_object(o, noise);
    g.nodes.push_back(std::move(n));
  }
  int n = g.num_nodes();
  g.edges.reserve(static_cast<size_t>(n) * (n > 0 ? n - 1 : 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) g.edges.push_back(project_edge(g.nodes[i].embedding, g.nodes[j].embedding));
  return g;
}

void Perception::export_params(ad::ParamStore& store) const {
  store.create("percep.w", w_, /*trainable=*/false);
  store.create("percep.edge_proj", edge_proj_, /*trainable=*/false);
}

Perception Perception::from_params(const AttributeCatalog& cat, Dims dims, double sigma,
                                   const ad::ParamStore& store) {
  Perception p(cat, dims, sigma);
  p.w_ = store.at("percep.w").value;
  p.edge_proj_ = store.at("percep.edge_proj").value;
  require(p.w_.d0 == dims.d_obj && p.w_.d1 == p.sym_dim(), "percep.w: shape mismatch");
  require(p.edge_proj_.d0 == dims.d_edge && p.edge_proj_.d1 == 2 * dims.d_obj,
          "percep.edge_proj: shape mismatch");
  return p;
}

}  // namespace sgm
