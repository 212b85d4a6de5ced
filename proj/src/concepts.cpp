#include "sgm/concepts.hpp"

#include <cmath>

#include "sgm/rng.hpp"

namespace sgm {

double concept_dist(const std::vector<float>& a, const std::vector<float>& b, double t1,
                    double t2) {
  return (static_cast<double>(cosf_vec(a, b)) - t2) / t1;
}

ConceptSpace::ConceptSpace(const AttributeCatalog& cat, Dims dims, double t1, double t2)
    : cat_(&cat), dims_(dims), t1_(t1), t2_(t2) {
  require(t1 != 0.0, "concept space: t1 must be nonzero");
}

void ConceptSpace::init_params(uint64_t seed) {
  auto xavier = [](ad::Tensor& t, Rng& r) {
    float s = std::sqrt(6.0f / static_cast<float>(t.d0 + t.d1));
    for (auto& v : t.data) v = s * static_cast<float>(r.uniform(-1.0, 1.0));
  };
  for (int a = 0; a < cat_->num_attributes(); ++a) {
    Rng r(Rng::derive(seed, "concepts.f", a));
    auto w = ad::Tensor::mat(dims_.d_attr, dims_.d_obj);
    xavier(w, r);
    store_.create(f_w_name(*cat_, a), std::move(w));
    store_.create(f_b_name(*cat_, a), ad::Tensor::vec(dims_.d_attr));
  }
  {
    Rng r(Rng::derive(seed, "concepts.f_rel"));
    auto w = ad::Tensor::mat(dims_.d_attr, dims_.d_edge);
    xavier(w, r);
    store_.create("concepts.f_rel.W", std::move(w));
    store_.create("concepts.f_rel.b", ad::Tensor::vec(dims_.d_attr));
  }
  for (int c = 0; c < cat_->num_concepts(); ++c) {
    Rng r(Rng::derive(seed, "concepts.c", c));
    auto e = ad::Tensor::vec(dims_.d_attr);
    for (auto& v : e.data) v = static_cast<float>(r.normal());
    store_.create(concept_param_name(*cat_, c), std::move(e));
  }
  for (int rel = 0; rel < 4; ++rel) {
    Rng r(Rng::derive(seed, "concepts.r", rel));
    auto e = ad::Tensor::vec(dims_.d_attr);
    for (auto& v : e.data) v = static_cast<float>(r.normal());
    store_.create(relation_param_name(*cat_, rel), std::move(e));
  }
}

std::vector<float> ConceptSpace::attr_embed(const std::vector<float>& obj, int attr) const {
  return affinef(store_.at(f_w_name(*cat_, attr)).value, obj,
                 store_.at(f_b_name(*cat_, attr)).value);
}

std::vector<float> ConceptSpace::rel_embed(const std::vector<float>& edge) const {
  return affinef(store_.at("concepts.f_rel.W").value, edge,
                 store_.at("concepts.f_rel.b").value);
}

std::vector<double> ConceptSpace::concept_logits(const std::vector<float>& obj,
                                                 int attr) const {
  auto u = attr_embed(obj, attr);
  std::vector<double> out;
  int off = cat_->concept_offset(attr);
  for (int v = 0; v < static_cast<int>(cat_->values[attr].size()); ++v) {
    const auto& c = store_.at(concept_param_name(*cat_, off + v)).value.data;
    out.push_back(concept_dist(u, c, t1_, t2_));
  }
  return out;
}

std::vector<double> ConceptSpace::concept_prob(const std::vector<float>& obj,
                                               int attr) const {
  return softmaxd(concept_logits(obj, attr));
}

std::array<int, kNumAttributes> ConceptSpace::quantize(const std::vector<float>& obj) const {
  std::array<int, kNumAttributes> out{};
  for (int a = 0; a < cat_->num_attributes(); ++a)
    out[a] = cat_->concept_id(a, argmaxd(concept_logits(obj, a)));
  return out;
}

std::array<double, 4> ConceptSpace::relation_logits(const std::vector<float>& edge) const {
  auto u = rel_embed(edge);
  std::array<double, 4> out{};
  for (int r = 0; r < 4; ++r) {
    const auto& c = store_.at(relation_param_name(*cat_, r)).value.data;
    out[r] = concept_dist(u, c, t1_, t2_);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> ConceptSpace::relation_probs(
    const std::vector<float>& edge) const {
  auto d = relation_logits(edge);
  return {softmaxd({d[kRelLeft], d[kRelRight]}), softmaxd({d[kRelFront], d[kRelBehind]})};
}

std::pair<int, int> ConceptSpace::quantize_relation(const std::vector<float>& edge) const {
  auto d = relation_logits(edge);
  int lr = d[kRelRight] > d[kRelLeft] ? kRelRight : kRelLeft;
  int fb = d[kRelBehind] > d[kRelFront] ? kRelBehind : kRelFront;
  return {lr, fb};
}

}  // namespace sgm
