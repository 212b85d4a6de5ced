#include "sgm/manip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "sgm/rng.hpp"

namespace sgm {

namespace {

void xavier(ad::Tensor& t, Rng& r) {
  float s = std::sqrt(6.0f / static_cast<float>(t.d0 + t.d1));
  for (auto& v : t.data) v = s * static_cast<float>(r.uniform(-1.0, 1.0));
}

const std::vector<float>& concept_vec(const ConceptSpace& cs, int cid) {
  return cs.store().at(ConceptSpace::concept_param_name(cs.catalog(), cid)).value.data;
}

const std::vector<float>& relation_vec(const ConceptSpace& cs, int rel) {
  return cs.store().at(ConceptSpace::relation_param_name(cs.catalog(), rel)).value.data;
}

}  // namespace

// ---------------------------------------------------------------------------
// Networks

ChangeNet::ChangeNet(const AttributeCatalog& cat, Dims dims) : cat_(&cat), dims_(dims) {}

void ChangeNet::init_params(uint64_t seed) {
  for (int a = 0; a < cat_->num_attributes(); ++a) {
    Rng r(Rng::derive(seed, "change", a));
    auto w = ad::Tensor::mat(dims_.d_obj, dims_.d_obj + dims_.d_attr);
    xavier(w, r);
    store_.create(w_name(*cat_, a), std::move(w));
    store_.create(b_name(*cat_, a), ad::Tensor::vec(dims_.d_obj));
  }
}

std::vector<float> ChangeNet::apply(const ConceptSpace& cs, const std::vector<float>& obj,
                                    int target_cid) const {
  int attr = cat_->attribute_of_concept(target_cid);
  auto x = concatf(obj, concept_vec(cs, target_cid));
  return affinef(store_.at(w_name(*cat_, attr)).value, x, store_.at(b_name(*cat_, attr)).value);
}

AddNet::AddNet(const AttributeCatalog& cat, Dims dims) : cat_(&cat), dims_(dims) {}

void AddNet::init_params(uint64_t seed) {
  {
    Rng r(Rng::derive(seed, "add.obj"));
    auto w = ad::Tensor::mat(dims_.d_obj,
                             cat_->num_attributes() * dims_.d_attr + dims_.d_obj + dims_.d_attr);
    xavier(w, r);
    store_.create("add.obj.W", std::move(w));
    store_.create("add.obj.b", ad::Tensor::vec(dims_.d_obj));
  }
  {
    Rng r(Rng::derive(seed, "add.edge"));
    auto w = ad::Tensor::mat(dims_.d_edge, 2 * dims_.d_obj);
    xavier(w, r);
    store_.create("add.edge.W", std::move(w));
    store_.create("add.edge.b", ad::Tensor::vec(dims_.d_edge));
  }
}

std::vector<float> AddNet::predict_object(const ConceptSpace& cs,
                                          const std::array<int, kNumAttributes>& concept_set,
                                          const std::vector<float>& o_rel, int relation) const {
  std::vector<float> x;
  x.reserve(static_cast<size_t>(cat_->num_attributes()) * dims_.d_attr + dims_.d_obj +
            dims_.d_attr);
  for (int a = 0; a < cat_->num_attributes(); ++a) {
    require(concept_set[a] >= 0, "predict_object: incomplete concept set");
    require(cat_->attribute_of_concept(concept_set[a]) == a,
            "predict_object: concept set out of attribute order");
    const auto& c = concept_vec(cs, concept_set[a]);
    x.insert(x.end(), c.begin(), c.end());
  }
  x.insert(x.end(), o_rel.begin(), o_rel.end());
  const auto& r = relation_vec(cs, relation);
  x.insert(x.end(), r.begin(), r.end());
  return affinef(store_.at("add.obj.W").value, x, store_.at("add.obj.b").value);
}

std::vector<float> AddNet::predict_edge(const std::vector<float>& from,
                                        const std::vector<float>& to) const {
  return affinef(store_.at("add.edge.W").value, concatf(from, to),
                 store_.at("add.edge.b").value);
}

Discriminator::Discriminator(std::string name, int input_dim, int hidden_dim)
    : name_(std::move(name)), input_dim_(input_dim), hidden_dim_(hidden_dim) {}

void Discriminator::init_params(uint64_t seed) {
  Rng r(Rng::derive(seed, name_));
  auto w1 = ad::Tensor::mat(hidden_dim_, input_dim_);
  xavier(w1, r);
  store_.create(name_ + ".W1", std::move(w1));
  store_.create(name_ + ".b1", ad::Tensor::vec(hidden_dim_));
  auto w2 = ad::Tensor::mat(1, hidden_dim_);
  xavier(w2, r);
  store_.create(name_ + ".W2", std::move(w2));
  store_.create(name_ + ".b2", ad::Tensor::vec(1));
}

double Discriminator::prob(const std::vector<float>& x) const {
  auto h = affinef(store_.at(name_ + ".W1").value, x, store_.at(name_ + ".b1").value);
  for (auto& v : h) v = std::max(v, 0.0f);
  auto z = affinef(store_.at(name_ + ".W2").value, h, store_.at(name_ + ".b2").value);
  return 1.0 / (1.0 + std::exp(-static_cast<double>(z[0])));
}

// ---------------------------------------------------------------------------
// Loss configs

ChangeLossConfig default_change_loss(const AttributeCatalog& cat) {
  ChangeLossConfig w;
  w.lambda_other = 1.0 / ((cat.num_attributes() - 1) * cat.num_concepts());
  return w;
}

AddLossConfig default_add_loss(const AttributeCatalog& cat) {
  AddLossConfig w;
  w.lambda_concepts = 1.0 / cat.num_attributes();
  w.lambda_relation = 1.0 / cat.num_attributes();
  return w;
}

// ---------------------------------------------------------------------------
// Self-supervised add tuples

std::optional<AddExample> sample_add_example(const SceneGraph& g, const ConceptSpace& cs,
                                             Rng& rng) {
  int n = g.num_nodes();
  if (n < 2) return std::nullopt;
  AddExample ex;
  ex.removed_pos = rng.uniform_int(0, n - 1);
  ex.neighbor_pos = rng.uniform_int(0, n - 2);
  if (ex.neighbor_pos >= ex.removed_pos) ++ex.neighbor_pos;
  ex.concept_set = cs.quantize(g.nodes[ex.removed_pos].embedding);
  auto [lr, fb] = cs.quantize_relation(g.edge(ex.neighbor_pos, ex.removed_pos));
  ex.relation = rng.uniform() < 0.5 ? lr : fb;
  return ex;
}

AddTuple materialize_add_example(const SceneGraph& g, const AddExample& ex) {
  require(ex.removed_pos >= 0 && ex.removed_pos < g.num_nodes() && ex.neighbor_pos >= 0 &&
              ex.neighbor_pos < g.num_nodes() && ex.neighbor_pos != ex.removed_pos,
          "materialize_add_example: bad positions");
  AddTuple t;
  t.reduced = remove_node(g, {g.nodes[ex.removed_pos].id});
  t.target_obj = g.nodes[ex.removed_pos].embedding;
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (i == ex.removed_pos) continue;
    t.old_out.push_back(g.edge(ex.removed_pos, i));
    t.old_in.push_back(g.edge(i, ex.removed_pos));
  }
  t.concept_set = ex.concept_set;
  t.relation = ex.relation;
  t.neighbor_reduced_pos = ex.neighbor_pos - (ex.neighbor_pos > ex.removed_pos ? 1 : 0);
  return t;
}

std::vector<AddExample> gen_add_examples(const std::vector<SceneGraph>& graphs,
                                         const ConceptSpace& cs, int per_scene, uint64_t seed) {
  std::vector<AddExample> out;
  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    Rng rng(Rng::derive(seed, "add_examples", gi));
    for (int k = 0; k < per_scene; ++k) {
      auto ex = sample_add_example(graphs[gi], cs, rng);
      if (!ex) break;
      ex->scene_id = static_cast<int>(gi);
      out.push_back(*ex);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adversarial step

GanStep gan_step(Discriminator& d, const std::vector<std::vector<float>>& reals,
                 const std::vector<std::vector<float>>& fakes, double real_scale,
                 double weight, bool accumulate) {
  ad::TapeT<float> tape;
  auto refs = bind_disc(tape, d, accumulate ? &d.store() : nullptr);
  std::vector<ad::TapeT<float>::Var> rv, fv;
  rv.reserve(reals.size());
  fv.reserve(fakes.size());
  for (const auto& r : reals) rv.push_back(embed_constant(tape, r));
  for (const auto& f : fakes) fv.push_back(embed_constant(tape, f));
  auto loss = gan_d_loss_var(tape, refs, rv, fv, static_cast<float>(real_scale));
  GanStep out;
  out.d_loss = tape.val(loss).data[0];
  if (accumulate) tape.backward(tape.scale(loss, static_cast<float>(weight)));
  for (const auto& f : fakes) {
    double p = std::clamp(d.prob(f), kGanProbEps, 1.0 - kGanProbEps);
    out.g_term -= std::log(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph edits

SceneGraph change_object(const SceneGraph& g, const ChangeNet& net, const ConceptSpace& cs,
                         int node_pos, int target_cid) {
  require(node_pos >= 0 && node_pos < g.num_nodes(), "change_object: bad node position");
  SceneGraph out = g;
  out.nodes[node_pos].embedding = net.apply(cs, g.nodes[node_pos].embedding, target_cid);
  out.nodes[node_pos].symbol.reset();
  return out;
}

SceneGraph add_object(const SceneGraph& g, const AddNet& net, const ConceptSpace& cs,
                      const std::array<int, kNumAttributes>& concept_set, int relation,
                      int rel_pos) {
  require(g.num_nodes() >= 1, "add_object: relation into an empty graph");
  require(rel_pos >= 0 && rel_pos < g.num_nodes(), "add_object: bad reference position");
  SceneGraph::Node node;
  int max_id = 0;
  for (const auto& n : g.nodes) max_id = std::max(max_id, n.id);
  node.id = max_id + 1;
  node.embedding = net.predict_object(cs, concept_set, g.nodes[rel_pos].embedding, relation);
  std::map<int, EdgePair> edges;
  for (const auto& peer : g.nodes) {
    EdgePair pair;
    pair.out = net.predict_edge(node.embedding, peer.embedding);
    pair.in = net.predict_edge(peer.embedding, node.embedding);
    edges[peer.id] = std::move(pair);
  }
  return insert_node(g, std::move(node), edges);
}

ManipApplyResult apply_manipulation(const SceneGraph& g, const ConceptSpace& cs,
                                    const ChangeNet& change, const AddNet& add,
                                    const Program& p) {
  ManipApplyResult out;
  auto view = SymbolicView::from_quantized(g, cs);
  auto sel = exec_reasoning(reasoning_subtree(p), view);
  if (!sel.ok()) {
    out.status = sel.status;
    return out;
  }
  require(sel.value.kind == ExecValue::Kind::ObjectSet, "apply_manipulation: object set expected");
  const auto& positions = sel.value.objset;
  switch (p.op) {
    case OpTag::Change: {
      if (positions.size() != 1) {
        out.status = ExecStatus::NonUniqueReferent;
        return out;
      }
      out.graph = change_object(g, change, cs, positions[0], p.concept_id);
      return out;
    }
    case OpTag::Add: {
      if (positions.size() != 1) {
        out.status = ExecStatus::NonUniqueReferent;
        return out;
      }
      out.graph = add_object(g, add, cs, p.concept_set, p.relation, positions[0]);
      return out;
    }
    case OpTag::Remove: {
      if (positions.empty()) {
        out.status = ExecStatus::NonUniqueReferent;
        return out;
      }
      std::vector<int> ids;
      ids.reserve(positions.size());
      for (int pos : positions) ids.push_back(g.nodes[pos].id);
      out.graph = remove_node(g, ids);
      return out;
    }
    default:
      fail("apply_manipulation: not a manipulation program");
  }
}

// ---------------------------------------------------------------------------
// Change training

std::vector<ChangeExample> gen_change_examples(const std::vector<SceneGraph>& graphs,
                                               const ConceptSpace& cs, int per_object,
                                               uint64_t seed) {
  const auto& cat = cs.catalog();
  std::vector<ChangeExample> out;
  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    Rng rng(Rng::derive(seed, "change_examples", gi));
    for (int p = 0; p < graphs[gi].num_nodes(); ++p) {
      auto q = cs.quantize(graphs[gi].nodes[p].embedding);
      for (int k = 0; k < per_object; ++k) {
        int attr = rng.uniform_int(0, cat.num_attributes() - 1);
        int nv = static_cast<int>(cat.values[attr].size());
        int cur = cat.value_index_of_concept(q[attr]);
        int v = rng.uniform_int(0, nv - 2);
        if (v >= cur) ++v;
        ChangeExample ex;
        ex.scene_id = static_cast<int>(gi);
        ex.node_pos = p;
        ex.target_cid = cat.concept_id(attr, v);
        ex.old_cid = q[attr];
        out.push_back(ex);
      }
    }
  }
  return out;
}

ChangeEvalMetrics eval_change(const ChangeNet& net, const ConceptSpace& cs,
                              const std::vector<SceneGraph>& graphs,
                              const std::vector<ChangeExample>& examples) {
  const auto& cat = cs.catalog();
  ChangeEvalMetrics m;
  if (examples.empty()) return m;
  int target_hits = 0, preserve_hits = 0, cycle_hits = 0;
  for (const auto& ex : examples) {
    const auto& obj = graphs[ex.scene_id].nodes[ex.node_pos].embedding;
    int attr = cat.attribute_of_concept(ex.target_cid);
    auto q_old = cs.quantize(obj);
    auto edited = net.apply(cs, obj, ex.target_cid);
    auto q_new = cs.quantize(edited);
    if (q_new[attr] == ex.target_cid) ++target_hits;
    bool preserved = true;
    for (int a = 0; a < cat.num_attributes(); ++a)
      if (a != attr && q_new[a] != q_old[a]) preserved = false;
    if (preserved) ++preserve_hits;
    auto back = net.apply(cs, edited, ex.old_cid);
    if (cs.quantize(back) == q_old) ++cycle_hits;
  }
  double n = static_cast<double>(examples.size());
  m.target_accuracy = target_hits / n;
  m.preservation = preserve_hits / n;
  m.cycle_accuracy = cycle_hits / n;
  return m;
}

ChangeEvalMetrics train_change(ChangeNet& net, Discriminator& d_obj, const ConceptSpace& cs,
                               const std::vector<SceneGraph>& graphs,
                               const std::vector<ChangeExample>& train,
                               const std::vector<ChangeExample>& val,
                               const ManipTrainConfig& cfg, const ChangeLossConfig& loss,
                               const std::string& log_path) {
  const auto& cat = cs.catalog();
  auto t0 = std::chrono::steady_clock::now();
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    require(log.good(), "train_change: cannot open log " + log_path);
    log << "epoch,l_attr,l_other,l_cycle,l_consistency,l_obj_gan,d_loss,val_target,"
           "val_preserve,val_cycle\n";
  }
  ChangeEvalMetrics metrics;
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, "change_epoch", epoch));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    double sum_attr = 0, sum_other = 0, sum_cycle = 0, sum_cons = 0, sum_gan = 0, sum_d = 0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      size_t end = std::min(order.size(), start + cfg.batch);
      float inv = 1.0f / static_cast<float>(end - start);
      {
        ad::TapeT<float> tape;
        auto crefs = bind_concepts<float>(tape, cs, nullptr);
        auto nrefs = bind_change(tape, net, &net.store());
        auto drefs = bind_disc<float>(tape, d_obj, nullptr);
        ad::TapeT<float>::Var total = tape.scalar(0.0f);
        for (size_t i = start; i < end; ++i) {
          const auto& ex = train[order[i]];
          auto obj = embed_constant(tape, graphs[ex.scene_id].nodes[ex.node_pos].embedding);
          auto lv = change_loss_var(tape, cat, crefs, nrefs, loss.use_gan ? &drefs : nullptr,
                                    obj, ex.target_cid, ex.old_cid,
                                    graphs[ex.scene_id].num_nodes(), loss);
          total = tape.add(total, lv.total);
          sum_attr += tape.val(lv.l_attr).data[0];
          sum_other += tape.val(lv.l_other).data[0];
          sum_cycle += tape.val(lv.l_cycle).data[0];
          sum_cons += tape.val(lv.l_consistency).data[0];
          sum_gan += tape.val(lv.l_gan).data[0];
        }
        tape.backward(tape.scale(total, inv));
        net.store().adamw_step(cfg.opt);
      }
      if (loss.use_gan) {
        ad::TapeT<float> tape;
        auto drefs = bind_disc(tape, d_obj, &d_obj.store());
        ad::TapeT<float>::Var d_total = tape.scalar(0.0f);
        for (size_t i = start; i < end; ++i) {
          const auto& ex = train[order[i]];
          const auto& g = graphs[ex.scene_id];
          std::vector<ad::TapeT<float>::Var> reals, fakes;
          reals.reserve(g.num_nodes());
          for (const auto& n : g.nodes) reals.push_back(embed_constant(tape, n.embedding));
          fakes.push_back(embed_constant(
              tape, net.apply(cs, g.nodes[ex.node_pos].embedding, ex.target_cid)));
          d_total = tape.add(d_total,
                             gan_d_loss_var(tape, drefs, reals, fakes, 1.0f / g.num_nodes()));
        }
        tape.backward(tape.scale(d_total, inv));
        d_obj.store().adamw_step(cfg.opt);
        sum_d += tape.val(d_total).data[0] * inv;
      }
      ++batches;
    }
    double n = std::max<double>(1.0, static_cast<double>(train.size()));
    bool eval_now = ((epoch + 1) % cfg.eval_every == 0) || epoch + 1 == cfg.epochs;
    if (eval_now) metrics = eval_change(net, cs, graphs, val);
    if (log.is_open()) {
      log << epoch << ',' << sum_attr / n << ',' << sum_other / n << ',' << sum_cycle / n
          << ',' << sum_cons / n << ',' << sum_gan / n << ','
          << sum_d / std::max<double>(1.0, static_cast<double>(batches));
      if (eval_now)
        log << ',' << metrics.target_accuracy << ',' << metrics.preservation << ','
            << metrics.cycle_accuracy << '\n';
      else
        log << ",,,\n";
    }
  }
  metrics.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

// ---------------------------------------------------------------------------
// Add training

AddEvalMetrics eval_add(const AddNet& net, const ConceptSpace& cs,
                        const std::vector<SceneGraph>& graphs,
                        const std::vector<AddExample>& examples) {
  AddEvalMetrics m;
  if (examples.empty()) return m;
  int concept_hits = 0, rel_hits = 0;
  for (const auto& ex : examples) {
    auto t = materialize_add_example(graphs[ex.scene_id], ex);
    const auto& o_rel = t.reduced.nodes[t.neighbor_reduced_pos].embedding;
    auto o_new = net.predict_object(cs, t.concept_set, o_rel, t.relation);
    if (cs.quantize(o_new) == t.concept_set) ++concept_hits;
    auto e_in = net.predict_edge(o_rel, o_new);
    auto [lr, fb] = cs.quantize_relation(e_in);
    int got = (t.relation == kRelLeft || t.relation == kRelRight) ? lr : fb;
    if (got == t.relation) ++rel_hits;
  }
  double n = static_cast<double>(examples.size());
  m.concept_accuracy = concept_hits / n;
  m.relation_accuracy = rel_hits / n;
  return m;
}

AddEvalMetrics train_add(AddNet& net, Discriminator& d_obj, Discriminator& d_edge,
                         const ConceptSpace& cs, const std::vector<SceneGraph>& graphs,
                         const std::vector<AddExample>& train,
                         const std::vector<AddExample>& val, const ManipTrainConfig& cfg,
                         const AddLossConfig& loss, const std::string& log_path) {
  const auto& cat = cs.catalog();
  auto t0 = std::chrono::steady_clock::now();
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    require(log.good(), "train_add: cannot open log " + log_path);
    log << "epoch,l_concepts,l_relation,l_obj_sup,l_edge_sup,l_edge_gan,l_obj_gan,"
           "d_obj_loss,d_edge_loss,val_concepts,val_relation\n";
  }
  AddEvalMetrics metrics;
  std::vector<AddTuple> tuples;
  tuples.reserve(train.size());
  for (const auto& ex : train) tuples.push_back(materialize_add_example(graphs[ex.scene_id], ex));
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, "add_epoch", epoch));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    double sums[6] = {0, 0, 0, 0, 0, 0};
    double sum_d_obj = 0, sum_d_edge = 0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      size_t end = std::min(order.size(), start + cfg.batch);
      float inv = 1.0f / static_cast<float>(end - start);
      {
        ad::TapeT<float> tape;
        auto crefs = bind_concepts<float>(tape, cs, nullptr);
        auto arefs = bind_add(tape, net, &net.store());
        auto dobj = bind_disc<float>(tape, d_obj, nullptr);
        auto dedge = bind_disc<float>(tape, d_edge, nullptr);
        ad::TapeT<float>::Var total = tape.scalar(0.0f);
        for (size_t i = start; i < end; ++i) {
          const auto& t = tuples[order[i]];
          auto lv = add_loss_var(tape, cat, crefs, arefs, loss.use_obj_gan ? &dobj : nullptr,
                                 loss.use_edge_gan ? &dedge : nullptr, t, loss);
          total = tape.add(total, lv.total);
          sums[0] += tape.val(lv.l_concepts).data[0];
          sums[1] += tape.val(lv.l_relation).data[0];
          sums[2] += tape.val(lv.l_obj_sup).data[0];
          sums[3] += tape.val(lv.l_edge_sup).data[0];
          sums[4] += tape.val(lv.l_edge_gan).data[0];
          sums[5] += tape.val(lv.l_obj_gan).data[0];
        }
        tape.backward(tape.scale(total, inv));
        net.store().adamw_step(cfg.opt);
      }
      if (loss.use_obj_gan || loss.use_edge_gan) {
        ad::TapeT<float> tape;
        auto dobj = bind_disc(tape, d_obj, loss.use_obj_gan ? &d_obj.store() : nullptr);
        auto dedge = bind_disc(tape, d_edge, loss.use_edge_gan ? &d_edge.store() : nullptr);
        ad::TapeT<float>::Var d_obj_total = tape.scalar(0.0f);
        ad::TapeT<float>::Var d_edge_total = tape.scalar(0.0f);
        for (size_t i = start; i < end; ++i) {
          const auto& t = tuples[order[i]];
          int n = t.reduced.num_nodes();
          const auto& o_rel = t.reduced.nodes[t.neighbor_reduced_pos].embedding;
          auto o_new = net.predict_object(cs, t.concept_set, o_rel, t.relation);
          if (loss.use_obj_gan) {
            std::vector<ad::TapeT<float>::Var> reals, fakes;
            for (const auto& node : t.reduced.nodes)
              reals.push_back(embed_constant(tape, node.embedding));
            fakes.push_back(embed_constant(tape, o_new));
            d_obj_total = tape.add(
                d_obj_total, gan_d_loss_var(tape, dobj, reals, fakes, 1.0f / n));
          }
          if (loss.use_edge_gan) {
            std::vector<ad::TapeT<float>::Var> reals, fakes;
            for (int j = 0; j < n; ++j) {
              const auto& peer = t.reduced.nodes[j].embedding;
              reals.push_back(
                  embed_constant(tape, concatf(concatf(t.target_obj, t.old_out[j]), peer)));
              reals.push_back(
                  embed_constant(tape, concatf(concatf(peer, t.old_in[j]), t.target_obj)));
              fakes.push_back(embed_constant(
                  tape, concatf(concatf(o_new, net.predict_edge(o_new, peer)), peer)));
              fakes.push_back(embed_constant(
                  tape, concatf(concatf(peer, net.predict_edge(peer, o_new)), o_new)));
            }
            d_edge_total =
                tape.add(d_edge_total, gan_d_loss_var(tape, dedge, reals, fakes, 1.0f));
          }
        }
        tape.backward(tape.scale(tape.add(d_obj_total, d_edge_total), inv));
        if (loss.use_obj_gan) d_obj.store().adamw_step(cfg.opt);
        if (loss.use_edge_gan) d_edge.store().adamw_step(cfg.opt);
        sum_d_obj += tape.val(d_obj_total).data[0] * inv;
        sum_d_edge += tape.val(d_edge_total).data[0] * inv;
      }
      ++batches;
    }
    double n = std::max<double>(1.0, static_cast<double>(train.size()));
    double nb = std::max<double>(1.0, static_cast<double>(batches));
    bool eval_now = ((epoch + 1) % cfg.eval_every == 0) || epoch + 1 == cfg.epochs;
    if (eval_now) metrics = eval_add(net, cs, graphs, val);
    if (log.is_open()) {
      log << epoch;
      for (double s : sums) log << ',' << s / n;
      log << ',' << sum_d_obj / nb << ',' << sum_d_edge / nb;
      if (eval_now)
        log << ',' << metrics.concept_accuracy << ',' << metrics.relation_accuracy << '\n';
      else
        log << ",,\n";
    }
  }
  metrics.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

}  // namespace sgm
