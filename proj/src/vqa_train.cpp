#include "sgm/concepts.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <vector>

#include "sgm/executor.hpp"
#include "sgm/rng.hpp"

namespace sgm {

namespace {

using Tape = ad::TapeT<float>;
using Var = Tape::Var;

constexpr float kProbFloor = 1e-6f;

std::map<int, std::vector<int>> group_by_scene(const std::vector<VqaExample>& examples) {
  std::map<int, std::vector<int>> by_scene;
  for (int i = 0; i < static_cast<int>(examples.size()); ++i)
    by_scene[examples[i].scene_id].push_back(i);
  return by_scene;
}

/// Cross entropy of one question under the soft executor.
Var question_loss(Tape& tape, SoftExecContext<float>& ctx, const VqaExample& ex,
                  const AttributeCatalog& cat) {
  auto v = exec_differentiable(ex.program, ctx);
  if (v.kind == SoftValue<float>::Kind::Bool) {
    Var p = tape.clamp(v.prob, kProbFloor, 1.0f - kProbFloor);
    if (ex.answer == "yes") return tape.scale(tape.log(p), -1.0f);
    require(ex.answer == "no", "vqa_train: boolean answer must be yes or no");
    return tape.scale(tape.log(tape.sub(tape.scalar(1.0f), p)), -1.0f);
  }
  require(v.kind == SoftValue<float>::Kind::Concept, "vqa_train: unsupported answer kind");
  auto c = cat.concept_by_name(ex.answer);
  require(c.has_value(), "vqa_train: answer is not a concept: " + ex.answer);
  require(cat.attribute_of_concept(*c) == v.attribute,
          "vqa_train: answer attribute mismatch for " + ex.answer);
  Var p = tape.clamp(tape.select(v.dist, cat.value_index_of_concept(*c)), kProbFloor,
                     1.0f - kProbFloor);
  return tape.scale(tape.log(p), -1.0f);
}

const SceneGraph& scene_for(const std::map<int, SceneGraph>& scenes, int id) {
  auto it = scenes.find(id);
  require(it != scenes.end(), "vqa: missing scene " + std::to_string(id));
  return it->second;
}

}  // namespace

double vqa_answer_accuracy(const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes,
                           const std::vector<VqaExample>& examples) {
  if (examples.empty()) return 0.0;
  auto by_scene = group_by_scene(examples);
  int correct = 0;
  for (const auto& [sid, idxs] : by_scene) {
    const auto& g = scene_for(scenes, sid);
    Tape tape;
    auto refs = bind_concepts<float>(tape, cs, nullptr);
    SoftExecContext<float> ctx(tape, g, refs, cs.catalog());
    for (int i : idxs) {
      auto v = exec_differentiable(examples[i].program, ctx);
      std::string pred;
      if (v.kind == SoftValue<float>::Kind::Bool) {
        pred = tape.val(v.prob).data[0] > 0.5f ? "yes" : "no";
      } else {
        const auto& dist = tape.val(v.dist);
        std::vector<double> d(dist.data.begin(), dist.data.end());
        pred = cs.catalog().concept_name(cs.catalog().concept_id(v.attribute, argmaxd(d)));
      }
      correct += pred == examples[i].answer ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::pair<double, std::array<double, kNumAttributes>> quantize_accuracy(
    const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes) {
  std::array<double, kNumAttributes> hit{};
  std::array<double, kNumAttributes> total{};
  for (const auto& [sid, g] : scenes) {
    (void)sid;
    for (const auto& node : g.nodes) {
      require(node.symbol.has_value(), "quantize_accuracy: node without ground truth");
      auto q = cs.quantize(node.embedding);
      for (int a = 0; a < kNumAttributes; ++a) {
        total[a] += 1.0;
        hit[a] += q[a] == node.symbol->concepts[a] ? 1.0 : 0.0;
      }
    }
  }
  std::array<double, kNumAttributes> per{};
  double h = 0.0, t = 0.0;
  for (int a = 0; a < kNumAttributes; ++a) {
    per[a] = total[a] > 0 ? hit[a] / total[a] : 0.0;
    h += hit[a];
    t += total[a];
  }
  return {t > 0 ? h / t : 0.0, per};
}

double relation_accuracy(const ConceptSpace& cs, const std::map<int, SceneGraph>& scenes) {
  double hit = 0.0, total = 0.0;
  for (const auto& [sid, g] : scenes) {
    (void)sid;
    int n = g.num_nodes();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        require(g.nodes[i].symbol.has_value() && g.nodes[j].symbol.has_value(),
                "relation_accuracy: node without ground truth");
        auto truth = derive_relation(*g.nodes[i].symbol, *g.nodes[j].symbol);
        auto pred = cs.quantize_relation(g.edge(i, j));
        total += 1.0;
        hit += pred == truth ? 1.0 : 0.0;
      }
  }
  return total > 0 ? hit / total : 0.0;
}

VqaMetrics vqa_train(ConceptSpace& cs, const std::map<int, SceneGraph>& train_scenes,
                     const std::vector<VqaExample>& train,
                     const std::map<int, SceneGraph>& val_scenes,
                     const std::vector<VqaExample>& val, const VqaTrainConfig& cfg,
                     const std::string& log_path) {
  auto t0 = std::chrono::steady_clock::now();
  auto by_scene = group_by_scene(train);
  std::vector<int> scene_ids;
  for (const auto& [sid, idxs] : by_scene) {
    (void)idxs;
    scene_ids.push_back(sid);
  }

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    require(log.good(), "vqa_train: cannot write " + log_path);
    log << "epoch,train_loss,val_answer,val_quantize,val_relation\n";
  }

  VqaMetrics metrics;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(Rng::derive(cfg.seed, "vqa_epoch", epoch));
    std::vector<int> order = scene_ids;
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);

    double epoch_loss = 0.0;
    int epoch_questions = 0;
    for (int start = 0; start < static_cast<int>(order.size());
         start += cfg.batch_scenes) {
      int end = std::min(start + cfg.batch_scenes, static_cast<int>(order.size()));
      int batch_questions = 0;
      for (int b = start; b < end; ++b)
        batch_questions += static_cast<int>(by_scene[order[b]].size());
      if (batch_questions == 0) continue;

      for (int b = start; b < end; ++b) {
        const auto& g = scene_for(train_scenes, order[b]);
        Tape tape;
        auto refs = bind_concepts<float>(tape, cs, &cs.store());
        SoftExecContext<float> ctx(tape, g, refs, cs.catalog());
        Var loss;
        bool first = true;
        for (int i : by_scene[order[b]]) {
          Var q = question_loss(tape, ctx, train[i], cs.catalog());
          loss = first ? q : tape.add(loss, q);
          first = false;
        }
        if (first) continue;
        epoch_loss += tape.val(loss).data[0];
        epoch_questions += static_cast<int>(by_scene[order[b]].size());
        tape.backward(tape.scale(loss, 1.0f / static_cast<float>(batch_questions)));
      }
      cs.store().adamw_step(cfg.opt);
    }

    bool eval_now = (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs;
    double mean_loss = epoch_questions > 0 ? epoch_loss / epoch_questions : 0.0;
    if (eval_now) {
      metrics.answer_accuracy = vqa_answer_accuracy(cs, val_scenes, val);
      auto [q, per] = quantize_accuracy(cs, val_scenes);
      metrics.quantize_accuracy = q;
      metrics.per_attribute = per;
      metrics.relation_accuracy = relation_accuracy(cs, val_scenes);
      if (log.is_open())
        log << epoch << "," << mean_loss << "," << metrics.answer_accuracy << ","
            << metrics.quantize_accuracy << "," << metrics.relation_accuracy << "\n";
    } else if (log.is_open()) {
      log << epoch << "," << mean_loss << ",,,\n";
    }
  }

  metrics.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

}  // namespace sgm
