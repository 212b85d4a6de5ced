#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgm/concepts.hpp"
#include "sgm/executor.hpp"
#include "sgm/linalg.hpp"
#include "sgm/param_store.hpp"
#include "sgm/perception.hpp"
#include "sgm/scenegraph.hpp"
#include "sgm/tape.hpp"

namespace sgm {

// ---------------------------------------------------------------------------
// Networks

/// One linear map per attribute: concat(object, target concept embedding) ->
/// edited object embedding. No nonlinearity.
class ChangeNet {
 public:
  ChangeNet(const AttributeCatalog& cat, Dims dims);
  void init_params(uint64_t seed);

  const AttributeCatalog& catalog() const { return *cat_; }
  const Dims& dims() const { return dims_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  static std::string w_name(const AttributeCatalog& cat, int attr) {
    return "change." + cat.attribute_names[attr] + ".W";
  }
  static std::string b_name(const AttributeCatalog& cat, int attr) {
    return "change." + cat.attribute_names[attr] + ".b";
  }

  /// Edited embedding for one object; the attribute is implied by the target
  /// concept. Concept embeddings come from the frozen concept space.
  std::vector<float> apply(const ConceptSpace& cs, const std::vector<float>& obj,
                           int target_cid) const;

 private:
  const AttributeCatalog* cat_;
  Dims dims_;
  ad::ParamStore store_;
};

/// Object head: concat(4 concept embeddings in catalog attribute order,
/// reference object, relation embedding) -> new object embedding. Edge head:
/// concat(from object, to object) -> directed edge embedding for slot
/// (from, to). Both single linear layers.
class AddNet {
 public:
  AddNet(const AttributeCatalog& cat, Dims dims);
  void init_params(uint64_t seed);

  const AttributeCatalog& catalog() const { return *cat_; }
  const Dims& dims() const { return dims_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  std::vector<float> predict_object(const ConceptSpace& cs,
                                    const std::array<int, kNumAttributes>& concept_set,
                                    const std::vector<float>& o_rel, int relation) const;
  std::vector<float> predict_edge(const std::vector<float>& from,
                                  const std::vector<float>& to) const;

 private:
  const AttributeCatalog* cat_;
  Dims dims_;
  ad::ParamStore store_;
};

/// MLP input -> 300 -> 1, ReLU hidden, sigmoid output.
class Discriminator {
 public:
  Discriminator(std::string name, int input_dim, int hidden_dim = 300);
  void init_params(uint64_t seed);

  const std::string& name() const { return name_; }
  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  /// P(input is real), in (0, 1).
  double prob(const std::vector<float>& x) const;

 private:
  std::string name_;
  int input_dim_, hidden_dim_;
  ad::ParamStore store_;
};

// ---------------------------------------------------------------------------
// Tape bindings (training uses float stores; gradient checks bind casted
// double stores). A null trainable store binds frozen constants.

/// Perceived float embedding as a tape constant.
template <typename T>
typename ad::TapeT<T>::Var embed_constant(ad::TapeT<T>& tape, const std::vector<float>& v) {
  ad::TensorT<T> t = ad::TensorT<T>::vec(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<T>(v[i]);
  return tape.constant(std::move(t));
}

template <typename T>
struct ChangeTapeRefs {
  using Var = typename ad::TapeT<T>::Var;
  std::array<Var, kNumAttributes> w, b;
};

template <typename T>
ChangeTapeRefs<T> bind_change(ad::TapeT<T>& tape, const ChangeNet& net,
                              ad::ParamStoreT<T>* trainable) {
  const auto& cat = net.catalog();
  ChangeTapeRefs<T> refs;
  for (int a = 0; a < cat.num_attributes(); ++a) {
    if (trainable) {
      refs.w[a] = tape.param(trainable->at(ChangeNet::w_name(cat, a)));
      refs.b[a] = tape.param(trainable->at(ChangeNet::b_name(cat, a)));
    } else {
      refs.w[a] = tape.constant(ad::tensor_cast<T>(net.store().at(ChangeNet::w_name(cat, a)).value));
      refs.b[a] = tape.constant(ad::tensor_cast<T>(net.store().at(ChangeNet::b_name(cat, a)).value));
    }
  }
  return refs;
}

template <typename T>
typename ad::TapeT<T>::Var change_forward_var(ad::TapeT<T>& tape, const ChangeTapeRefs<T>& refs,
                                              int attr, typename ad::TapeT<T>::Var obj,
                                              typename ad::TapeT<T>::Var concept_emb) {
  return tape.add(tape.matvec(refs.w[attr], tape.concat({obj, concept_emb})), refs.b[attr]);
}

template <typename T>
struct AddTapeRefs {
  using Var = typename ad::TapeT<T>::Var;
  Var obj_w, obj_b, edge_w, edge_b;
};

template <typename T>
AddTapeRefs<T> bind_add(ad::TapeT<T>& tape, const AddNet& net, ad::ParamStoreT<T>* trainable) {
  AddTapeRefs<T> refs;
  auto bind = [&](const std::string& name) {
    if (trainable) return tape.param(trainable->at(name));
    return tape.constant(ad::tensor_cast<T>(net.store().at(name).value));
  };
  refs.obj_w = bind("add.obj.W");
  refs.obj_b = bind("add.obj.b");
  refs.edge_w = bind("add.edge.W");
  refs.edge_b = bind("add.edge.b");
  return refs;
}

template <typename T>
struct DiscTapeRefs {
  using Var = typename ad::TapeT<T>::Var;
  Var w1, b1, w2, b2;
};

template <typename T>
DiscTapeRefs<T> bind_disc(ad::TapeT<T>& tape, const Discriminator& d,
                          ad::ParamStoreT<T>* trainable) {
  DiscTapeRefs<T> refs;
  auto bind = [&](const std::string& suffix) {
    std::string name = d.name() + suffix;
    if (trainable) return tape.param(trainable->at(name));
    return tape.constant(ad::tensor_cast<T>(d.store().at(name).value));
  };
  refs.w1 = bind(".W1");
  refs.b1 = bind(".b1");
  refs.w2 = bind(".W2");
  refs.b2 = bind(".b2");
  return refs;
}

template <typename T>
typename ad::TapeT<T>::Var disc_prob_var(ad::TapeT<T>& tape, const DiscTapeRefs<T>& refs,
                                         typename ad::TapeT<T>::Var x) {
  auto h = tape.relu(tape.add(tape.matvec(refs.w1, x), refs.b1));
  auto z = tape.add(tape.matvec(refs.w2, h), refs.b2);
  return tape.select(tape.sigmoid(z), 0);
}

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kGanProbEps = 1e-6;
inline constexpr double kManipProbFloor = 1e-6;

struct ChangeLossConfig {
  double lambda_attr = 1.0;
  double lambda_other = 1.0 / 45.0;  // 1/((num_attrs-1) * num_concepts)
  double lambda_cycle = 1e3;
  double lambda_consistency = 1e3;
  double lambda_gan = 1.0;  // divided by the scene's object count per example
  bool use_cycle = true;
  bool use_consistency = true;
  bool use_gan = true;
};

ChangeLossConfig default_change_loss(const AttributeCatalog& cat);

struct AddLossConfig {
  double lambda_concepts = 1.0 / 4.0;  // 1/num_attrs
  double lambda_relation = 1.0 / 4.0;
  double lambda_obj_sup = 1e3;
  double lambda_edge_sup = 1e3;
  double lambda_edge_gan = 1.0;  // divided by the object count per example
  double lambda_obj_gan = 1.0;   // divided by the object count per example
  bool use_obj_sup = true;
  bool use_edge_sup = true;
  bool use_edge_gan = true;
  bool use_obj_gan = true;
};

AddLossConfig default_add_loss(const AttributeCatalog& cat);

template <typename T>
struct ChangeLossVars {
  using Var = typename ad::TapeT<T>::Var;
  Var l_attr, l_other, l_cycle, l_consistency, l_gan, total;
};

/// Generator-side loss for one edited object. `obj` is a tape constant holding
/// the perceived embedding; `old_cid` is the object's current (quantized)
/// value of the target attribute; `num_objects` is the object count of the
/// source scene (scales the adversarial term). The discriminator refs must be
/// bound as constants; pass null to drop the adversarial term.
template <typename T>
ChangeLossVars<T> change_loss_var(ad::TapeT<T>& tape, const AttributeCatalog& cat,
                                  const ConceptTapeRefs<T>& concepts,
                                  const ChangeTapeRefs<T>& net,
                                  const DiscTapeRefs<T>* obj_disc,
                                  typename ad::TapeT<T>::Var obj, int target_cid, int old_cid,
                                  int num_objects, const ChangeLossConfig& w) {
  using Var = typename ad::TapeT<T>::Var;
  int attr = cat.attribute_of_concept(target_cid);
  require(cat.attribute_of_concept(old_cid) == attr,
          "change_loss: old and target concepts belong to different attributes");
  require(num_objects > 0, "change_loss: empty scene");

  auto edited = change_forward_var(tape, net, attr, obj, concepts.concept_emb[target_cid]);

  auto dist_new = attr_distribution_var(tape, concepts, cat, edited, attr);
  auto p_target = tape.clamp(tape.select(dist_new, cat.value_index_of_concept(target_cid)),
                             T(kManipProbFloor), T(1));
  auto l_attr = tape.scale(tape.log(p_target), T(-1));

  // Cross-entropy of every other attribute's distribution against the original
  // object's distribution (both under the frozen concept space).
  std::vector<Var> other_terms;
  for (int a = 0; a < cat.num_attributes(); ++a) {
    if (a == attr) continue;
    auto p_old = attr_distribution_var(tape, concepts, cat, obj, a);
    auto log_new = tape.log(tape.clamp(attr_distribution_var(tape, concepts, cat, edited, a),
                                       T(kManipProbFloor), T(1)));
    other_terms.push_back(tape.dot(p_old, log_new));
  }
  Var l_other = other_terms[0];
  for (size_t i = 1; i < other_terms.size(); ++i) l_other = tape.add(l_other, other_terms[i]);
  l_other = tape.scale(l_other, T(-1));

  auto back = change_forward_var(tape, net, attr, edited, concepts.concept_emb[old_cid]);
  auto l_cycle = tape.l2_norm(tape.sub(obj, back));
  auto same = change_forward_var(tape, net, attr, obj, concepts.concept_emb[old_cid]);
  auto l_consistency = tape.l2_norm(tape.sub(obj, same));

  Var l_gan = tape.scalar(T(0));
  if (obj_disc && w.use_gan) {
    auto p = tape.clamp(disc_prob_var(tape, *obj_disc, edited), T(kGanProbEps),
                        T(1.0 - kGanProbEps));
    l_gan = tape.scale(tape.log(p), T(-1));
  }

  ChangeLossVars<T> out;
  out.l_attr = l_attr;
  out.l_other = l_other;
  out.l_cycle = l_cycle;
  out.l_consistency = l_consistency;
  out.l_gan = l_gan;
  out.total = tape.scale(l_attr, T(w.lambda_attr));
  out.total = tape.add(out.total, tape.scale(l_other, T(w.lambda_other)));
  if (w.use_cycle) out.total = tape.add(out.total, tape.scale(l_cycle, T(w.lambda_cycle)));
  if (w.use_consistency)
    out.total = tape.add(out.total, tape.scale(l_consistency, T(w.lambda_consistency)));
  if (obj_disc && w.use_gan)
    out.total = tape.add(out.total, tape.scale(l_gan, T(w.lambda_gan / num_objects)));
  return out;
}

// ---------------------------------------------------------------------------
// Self-supervised add tuples

/// Compact self-supervision record: remove a known object, then learn to add
/// it back from its quantized concepts and one quantized relation to a chosen
/// neighbor. Positions index the original graph.
struct AddExample {
  int scene_id = 0;
  int removed_pos = 0;
  int neighbor_pos = 0;
  std::array<int, kNumAttributes> concept_set{-1, -1, -1, -1};
  int relation = 0;  // removed object relative to the neighbor
};

/// Materialized training view of an AddExample: the reduced graph plus the
/// original embeddings as supervision targets (survivor order).
struct AddTuple {
  SceneGraph reduced;
  std::vector<float> target_obj;
  std::vector<std::vector<float>> old_out;  // edge (removed -> survivor)
  std::vector<std::vector<float>> old_in;   // edge (survivor -> removed)
  std::array<int, kNumAttributes> concept_set{-1, -1, -1, -1};
  int neighbor_reduced_pos = 0;
  int relation = 0;
};

/// Samples one tuple: uniform object, uniform other neighbor, uniform axis of
/// the quantized (removed w.r.t. neighbor) relation. Graphs with fewer than
/// two nodes yield nullopt.
std::optional<AddExample> sample_add_example(const SceneGraph& g, const ConceptSpace& cs,
                                             Rng& rng);

AddTuple materialize_add_example(const SceneGraph& g, const AddExample& ex);

/// per_scene tuples from every graph with at least two nodes; deterministic in
/// the seed.
std::vector<AddExample> gen_add_examples(const std::vector<SceneGraph>& graphs,
                                         const ConceptSpace& cs, int per_scene, uint64_t seed);

template <typename T>
struct AddLossVars {
  using Var = typename ad::TapeT<T>::Var;
  Var l_concepts, l_relation, l_obj_sup, l_edge_sup, l_edge_gan, l_obj_gan, total;
};

/// Generator-side loss for one self-supervised add tuple. Edge terms cover
/// both directed slots per survivor. Discriminator refs must be bound as
/// constants; null refs drop the corresponding adversarial term.
template <typename T>
AddLossVars<T> add_loss_var(ad::TapeT<T>& tape, const AttributeCatalog& cat,
                            const ConceptTapeRefs<T>& concepts, const AddTapeRefs<T>& net,
                            const DiscTapeRefs<T>* obj_disc, const DiscTapeRefs<T>* edge_disc,
                            const AddTuple& t, const AddLossConfig& w) {
  using Var = typename ad::TapeT<T>::Var;
  int n = t.reduced.num_nodes();
  require(n >= 1, "add_loss: empty reduced graph");
  for (int a = 0; a < cat.num_attributes(); ++a)
    require(t.concept_set[a] >= 0, "add_loss: incomplete concept set");

  std::vector<Var> survivors(n);
  for (int i = 0; i < n; ++i) survivors[i] = embed_constant(tape, t.reduced.nodes[i].embedding);
  auto target_obj = embed_constant(tape, t.target_obj);

  std::vector<Var> obj_in_parts;
  for (int a = 0; a < cat.num_attributes(); ++a)
    obj_in_parts.push_back(concepts.concept_emb[t.concept_set[a]]);
  obj_in_parts.push_back(survivors[t.neighbor_reduced_pos]);
  obj_in_parts.push_back(concepts.relation_emb[t.relation]);
  auto o_new = tape.add(tape.matvec(net.obj_w, tape.concat(obj_in_parts)), net.obj_b);

  auto edge_from_to = [&](Var from, Var to) {
    return tape.add(tape.matvec(net.edge_w, tape.concat({from, to})), net.edge_b);
  };
  std::vector<Var> e_out(n), e_in(n);
  for (int i = 0; i < n; ++i) {
    e_out[i] = edge_from_to(o_new, survivors[i]);
    e_in[i] = edge_from_to(survivors[i], o_new);
  }

  Var l_concepts = tape.scalar(T(0));
  for (int a = 0; a < cat.num_attributes(); ++a) {
    auto dist = attr_distribution_var(tape, concepts, cat, o_new, a);
    auto p = tape.clamp(tape.select(dist, cat.value_index_of_concept(t.concept_set[a])),
                        T(kManipProbFloor), T(1));
    l_concepts = tape.sub(l_concepts, tape.log(p));
  }

  // Relation of the new object w.r.t. the neighbor lives on the
  // (neighbor -> new) slot.
  auto p_rel = tape.clamp(
      relation_prob_var(tape, concepts, e_in[t.neighbor_reduced_pos], t.relation),
      T(kManipProbFloor), T(1));
  auto l_relation = tape.scale(tape.log(p_rel), T(-1));

  auto l_obj_sup = tape.l2_norm(tape.sub(target_obj, o_new));

  Var l_edge_sup = tape.scalar(T(0));
  for (int i = 0; i < n; ++i) {
    auto out_t = embed_constant<T>(tape, t.old_out[i]);
    auto in_t = embed_constant<T>(tape, t.old_in[i]);
    l_edge_sup = tape.add(l_edge_sup, tape.l2_norm(tape.sub(out_t, e_out[i])));
    l_edge_sup = tape.add(l_edge_sup, tape.l2_norm(tape.sub(in_t, e_in[i])));
  }

  Var l_edge_gan = tape.scalar(T(0));
  if (edge_disc && w.use_edge_gan) {
    for (int i = 0; i < n; ++i) {
      auto fake_out = tape.concat({o_new, e_out[i], survivors[i]});
      auto fake_in = tape.concat({survivors[i], e_in[i], o_new});
      for (auto f : {fake_out, fake_in}) {
        auto p = tape.clamp(disc_prob_var(tape, *edge_disc, f), T(kGanProbEps),
                            T(1.0 - kGanProbEps));
        l_edge_gan = tape.sub(l_edge_gan, tape.log(p));
      }
    }
  }

  Var l_obj_gan = tape.scalar(T(0));
  if (obj_disc && w.use_obj_gan) {
    auto p = tape.clamp(disc_prob_var(tape, *obj_disc, o_new), T(kGanProbEps),
                        T(1.0 - kGanProbEps));
    l_obj_gan = tape.scale(tape.log(p), T(-1));
  }

  AddLossVars<T> out;
  out.l_concepts = l_concepts;
  out.l_relation = l_relation;
  out.l_obj_sup = l_obj_sup;
  out.l_edge_sup = l_edge_sup;
  out.l_edge_gan = l_edge_gan;
  out.l_obj_gan = l_obj_gan;
  out.total = tape.add(tape.scale(l_concepts, T(w.lambda_concepts)),
                       tape.scale(l_relation, T(w.lambda_relation)));
  if (w.use_obj_sup) out.total = tape.add(out.total, tape.scale(l_obj_sup, T(w.lambda_obj_sup)));
  if (w.use_edge_sup)
    out.total = tape.add(out.total, tape.scale(l_edge_sup, T(w.lambda_edge_sup)));
  if (edge_disc && w.use_edge_gan)
    out.total = tape.add(out.total, tape.scale(l_edge_gan, T(w.lambda_edge_gan / n)));
  if (obj_disc && w.use_obj_gan)
    out.total = tape.add(out.total, tape.scale(l_obj_gan, T(w.lambda_obj_gan / n)));
  return out;
}

// ---------------------------------------------------------------------------
// Adversarial step

struct GanStep {
  double d_loss = 0.0;  // -[real_scale * sum log D(real) + sum log(1 - D(fake))]
  double g_term = 0.0;  // -sum log D(fake)
};

/// Builds the logistic discriminator loss for one batch of embeddings,
/// accumulates gradients into the discriminator store, and reports both
/// sides. `real_scale` balances many reals against few fakes (object
/// discriminator: 1/num_objects). `weight` scales the gradient contribution
/// (batch averaging); set accumulate=false to skip the backward pass.
GanStep gan_step(Discriminator& d, const std::vector<std::vector<float>>& reals,
                 const std::vector<std::vector<float>>& fakes, double real_scale,
                 double weight = 1.0, bool accumulate = true);

/// Tape form of the discriminator objective, shared by gan_step and the
/// gradient-check tests.
template <typename T>
typename ad::TapeT<T>::Var gan_d_loss_var(ad::TapeT<T>& tape, const DiscTapeRefs<T>& refs,
                                          const std::vector<typename ad::TapeT<T>::Var>& reals,
                                          const std::vector<typename ad::TapeT<T>::Var>& fakes,
                                          T real_scale) {
  using Var = typename ad::TapeT<T>::Var;
  Var loss = tape.scalar(T(0));
  for (auto r : reals) {
    auto p = tape.clamp(disc_prob_var(tape, refs, r), T(kGanProbEps), T(1.0 - kGanProbEps));
    loss = tape.sub(loss, tape.scale(tape.log(p), real_scale));
  }
  for (auto f : fakes) {
    auto p = tape.clamp(disc_prob_var(tape, refs, f), T(kGanProbEps), T(1.0 - kGanProbEps));
    loss = tape.sub(loss, tape.log(tape.sub(tape.scalar(T(1)), p)));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Graph edits

/// Copy with one node's embedding replaced by the change network output. The
/// node's stored ground-truth symbol is dropped (it no longer describes the
/// embedding); everything else is bit-identical.
SceneGraph change_object(const SceneGraph& g, const ChangeNet& net, const ConceptSpace& cs,
                         int node_pos, int target_cid);

/// Appends a predicted node plus both directed edges to every existing node.
/// The reference node must exist and the concept set must cover all
/// attributes.
SceneGraph add_object(const SceneGraph& g, const AddNet& net, const ConceptSpace& cs,
                      const std::array<int, kNumAttributes>& concept_set, int relation,
                      int rel_pos);

struct ManipApplyResult {
  ExecStatus status = ExecStatus::Ok;
  SceneGraph graph;
  bool ok() const { return status == ExecStatus::Ok; }
};

/// Runs a parsed manipulation program against a perceived graph: the
/// reasoning subtree selects positions on the quantized view, then the edit
/// goes through the networks (Remove is purely structural).
ManipApplyResult apply_manipulation(const SceneGraph& g, const ConceptSpace& cs,
                                    const ChangeNet& change, const AddNet& add,
                                    const Program& p);

// ---------------------------------------------------------------------------
// Training

/// One change-supervision item. The old concept is the object's quantized
/// value of the target attribute, cached at corpus-build time (the concept
/// space is frozen).
struct ChangeExample {
  int scene_id = 0;
  int node_pos = 0;
  int target_cid = 0;
  int old_cid = 0;
};

/// per_object targets per node, uniform over attributes and over values that
/// differ from the current quantized one.
std::vector<ChangeExample> gen_change_examples(const std::vector<SceneGraph>& graphs,
                                               const ConceptSpace& cs, int per_object,
                                               uint64_t seed);

struct ManipTrainConfig {
  int epochs = 30;
  int batch = 32;
  int eval_every = 5;
  ad::AdamWConfig opt;
  uint64_t seed = 0;
};

struct ChangeEvalMetrics {
  double target_accuracy = 0.0;    // edited object quantizes to the target
  double preservation = 0.0;       // all other attributes keep their argmax
  double cycle_accuracy = 0.0;     // change there and back restores quantize()
  double train_seconds = 0.0;
};

ChangeEvalMetrics eval_change(const ChangeNet& net, const ConceptSpace& cs,
                              const std::vector<SceneGraph>& graphs,
                              const std::vector<ChangeExample>& examples);

/// Alternating generator/discriminator AdamW updates; validation every
/// eval_every epochs and after the last. CSV log: epoch, mean loss
/// components, discriminator loss, validation metrics (blank off-eval).
ChangeEvalMetrics train_change(ChangeNet& net, Discriminator& d_obj, const ConceptSpace& cs,
                               const std::vector<SceneGraph>& graphs,
                               const std::vector<ChangeExample>& train,
                               const std::vector<ChangeExample>& val,
                               const ManipTrainConfig& cfg, const ChangeLossConfig& loss,
                               const std::string& log_path = "");

struct AddEvalMetrics {
  double concept_accuracy = 0.0;   // strict four-attribute match
  double relation_accuracy = 0.0;  // requested axis recovered on the new edge
  double train_seconds = 0.0;
};

AddEvalMetrics eval_add(const AddNet& net, const ConceptSpace& cs,
                        const std::vector<SceneGraph>& graphs,
                        const std::vector<AddExample>& examples);

AddEvalMetrics train_add(AddNet& net, Discriminator& d_obj, Discriminator& d_edge,
                         const ConceptSpace& cs, const std::vector<SceneGraph>& graphs,
                         const std::vector<AddExample>& train,
                         const std::vector<AddExample>& val, const ManipTrainConfig& cfg,
                         const AddLossConfig& loss, const std::string& log_path = "");

}  // namespace sgm
