#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sgm/dsl.hpp"
#include "sgm/linalg.hpp"
#include "sgm/param_store.hpp"
#include "sgm/perception.hpp"
#include "sgm/scenegraph.hpp"
#include "sgm/tape.hpp"

namespace sgm {

/// Shifted, scaled cosine similarity between two embeddings.
double concept_dist(const std::vector<float>& a, const std::vector<float>& b, double t1,
                    double t2);

/// Attribute operators f_a, relation operator f_rel (one linear layer each)
/// plus one embedding vector per attribute concept and per relation concept.
/// An object holds concept s of attribute a with probability
/// softmax_s(dist(f_a(o), c_s)); relation probabilities are two-way softmaxes
/// per axis (left/right and front/behind), matching the one-relation-per-axis
/// geometry.
class ConceptSpace {
 public:
  ConceptSpace(const AttributeCatalog& cat, Dims dims, double t1, double t2);

  void init_params(uint64_t seed);

  const AttributeCatalog& catalog() const { return *cat_; }
  const Dims& dims() const { return dims_; }
  double t1() const { return t1_; }
  double t2() const { return t2_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  static std::string f_w_name(const AttributeCatalog& cat, int attr) {
    return "concepts.f." + cat.attribute_names[attr] + ".W";
  }
  static std::string f_b_name(const AttributeCatalog& cat, int attr) {
    return "concepts.f." + cat.attribute_names[attr] + ".b";
  }
  static std::string concept_param_name(const AttributeCatalog& cat, int cid) {
    return "concepts.c." + cat.concept_name(cid);
  }
  static std::string relation_param_name(const AttributeCatalog& cat, int rel) {
    return "concepts.r." + cat.relations[rel];
  }

  /// f_a(o), unnormalized.
  std::vector<float> attr_embed(const std::vector<float>& obj, int attr) const;
  /// f_rel(e), unnormalized.
  std::vector<float> rel_embed(const std::vector<float>& edge) const;

  std::vector<double> concept_logits(const std::vector<float>& obj, int attr) const;
  std::vector<double> concept_prob(const std::vector<float>& obj, int attr) const;

  /// Per-attribute argmax (ties resolve to the lowest concept index); returns
  /// global concept ids.
  std::array<int, kNumAttributes> quantize(const std::vector<float>& obj) const;

  std::array<double, 4> relation_logits(const std::vector<float>& edge) const;
  /// ({p_left, p_right}, {p_front, p_behind})
  std::pair<std::vector<double>, std::vector<double>> relation_probs(
      const std::vector<float>& edge) const;
  /// ({left|right}, {front|behind}) relation ids; mirrors derive_relation.
  std::pair<int, int> quantize_relation(const std::vector<float>& edge) const;

 private:
  const AttributeCatalog* cat_;
  Dims dims_;
  double t1_, t2_;
  ad::ParamStore store_;
};

// ---------------------------------------------------------------------------
// Tape-side builders, shared by VQA training (trainable concept parameters)
// and manipulation training (frozen concept parameters become constants).

template <typename T>
struct ConceptTapeRefs {
  using Var = typename ad::TapeT<T>::Var;
  std::array<Var, kNumAttributes> f_w, f_b;
  Var frel_w, frel_b;
  std::vector<Var> concept_emb;  // per global concept id
  std::array<Var, 4> relation_emb;
  double t1 = 0.25, t2 = 0.15;
};

/// Binds the concept parameters on a tape. `trainable` selects between
/// parameter leaves (gradients flow) and constants (frozen space).
template <typename T>
ConceptTapeRefs<T> bind_concepts(ad::TapeT<T>& tape, const ConceptSpace& cs,
                                 ad::ParamStoreT<T>* trainable_store) {
  const auto& cat = cs.catalog();
  ConceptTapeRefs<T> refs;
  refs.t1 = cs.t1();
  refs.t2 = cs.t2();
  auto bind = [&](const std::string& name) -> typename ad::TapeT<T>::Var {
    if (trainable_store) return tape.param(trainable_store->at(name));
    return tape.constant(ad::tensor_cast<T>(cs.store().at(name).value));
  };
  for (int a = 0; a < cat.num_attributes(); ++a) {
    refs.f_w[a] = bind(ConceptSpace::f_w_name(cat, a));
    refs.f_b[a] = bind(ConceptSpace::f_b_name(cat, a));
  }
  refs.frel_w = bind("concepts.f_rel.W");
  refs.frel_b = bind("concepts.f_rel.b");
  refs.concept_emb.resize(cat.num_concepts());
  for (int c = 0; c < cat.num_concepts(); ++c)
    refs.concept_emb[c] = bind(ConceptSpace::concept_param_name(cat, c));
  for (int r = 0; r < 4; ++r)
    refs.relation_emb[r] = bind(ConceptSpace::relation_param_name(cat, r));
  return refs;
}

/// dist(u, c) on tape: (cos - t2)/t1 over L2-normalized inputs.
template <typename T>
typename ad::TapeT<T>::Var concept_dist_var(ad::TapeT<T>& tape,
                                            typename ad::TapeT<T>::Var u_normalized,
                                            typename ad::TapeT<T>::Var c_raw, double t1,
                                            double t2) {
  auto cn = tape.normalize(c_raw);
  auto cos = tape.dot(u_normalized, cn);
  return tape.scale(tape.sub(cos, tape.scalar(static_cast<T>(t2))),
                    static_cast<T>(1.0 / t1));
}

/// softmax_s(dist(f_a(obj), c_s)) over the values of one attribute.
template <typename T>
typename ad::TapeT<T>::Var attr_distribution_var(ad::TapeT<T>& tape,
                                                 const ConceptTapeRefs<T>& refs,
                                                 const AttributeCatalog& cat,
                                                 typename ad::TapeT<T>::Var obj, int attr) {
  auto u = tape.normalize(tape.add(tape.matvec(refs.f_w[attr], obj), refs.f_b[attr]));
  std::vector<typename ad::TapeT<T>::Var> dists;
  int off = cat.concept_offset(attr);
  for (int v = 0; v < static_cast<int>(cat.values[attr].size()); ++v)
    dists.push_back(concept_dist_var(tape, u, refs.concept_emb[off + v], refs.t1, refs.t2));
  return tape.softmax(tape.pack(dists));
}

/// ({p_left,p_right}, {p_front,p_behind}) for one edge embedding.
template <typename T>
std::pair<typename ad::TapeT<T>::Var, typename ad::TapeT<T>::Var> relation_axis_vars(
    ad::TapeT<T>& tape, const ConceptTapeRefs<T>& refs,
    typename ad::TapeT<T>::Var edge) {
  auto u = tape.normalize(tape.add(tape.matvec(refs.frel_w, edge), refs.frel_b));
  std::array<typename ad::TapeT<T>::Var, 4> d;
  for (int r = 0; r < 4; ++r)
    d[r] = concept_dist_var(tape, u, refs.relation_emb[r], refs.t1, refs.t2);
  auto lr = tape.softmax(tape.pack({d[kRelLeft], d[kRelRight]}));
  auto fb = tape.softmax(tape.pack({d[kRelFront], d[kRelBehind]}));
  return {lr, fb};
}

/// p(h_r(edge) = rel) as a scalar Var.
template <typename T>
typename ad::TapeT<T>::Var relation_prob_var(ad::TapeT<T>& tape,
                                             const ConceptTapeRefs<T>& refs,
                                             typename ad::TapeT<T>::Var edge, int rel) {
  auto [lr, fb] = relation_axis_vars(tape, refs, edge);
  if (rel == kRelLeft) return tape.select(lr, 0);
  if (rel == kRelRight) return tape.select(lr, 1);
  if (rel == kRelFront) return tape.select(fb, 0);
  return tape.select(fb, 1);
}

// ---------------------------------------------------------------------------
// VQA training (the only supervision the concept space ever sees).

struct VqaExample {
  int scene_id = 0;
  Program program;
  std::string answer;  // "yes" / "no" / concept name
};

struct VqaTrainConfig {
  int epochs = 30;
  int batch_scenes = 4;
  int eval_every = 5;
  ad::AdamWConfig opt;
  uint64_t seed = 0;
};

struct VqaMetrics {
  double answer_accuracy = 0.0;
  double quantize_accuracy = 0.0;  // per-attribute mean over held-out objects
  double relation_accuracy = 0.0;  // exact {lr, fb} pair recovery
  std::array<double, kNumAttributes> per_attribute{};
  double train_seconds = 0.0;
};

/// Trains the concept space from question/answer pairs through the
/// differentiable executor (cross-entropy on answers only). Deterministic for
/// a fixed seed; logs one CSV row per epoch when log_path is non-empty.
VqaMetrics vqa_train(ConceptSpace& cs, const std::map<int, SceneGraph>& train_scenes,
                     const std::vector<VqaExample>& train,
                     const std::map<int, SceneGraph>& val_scenes,
                     const std::vector<VqaExample>& val, const VqaTrainConfig& cfg,
                     const std::string& log_path = "");

/// Answer accuracy of the current space on a question set.
double vqa_answer_accuracy(const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes,
                           const std::vector<VqaExample>& examples);

/// Fraction of node/attribute pairs whose quantization matches ground truth,
/// and the per-attribute breakdown.
std::pair<double, std::array<double, kNumAttributes>> quantize_accuracy(
    const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes);

/// Fraction of ordered pairs whose quantize_relation output equals
/// derive_relation ground truth (both axes).
double relation_accuracy(const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes);

}  // namespace sgm
