#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sgm/config.hpp"
#include "sgm/datagen.hpp"
#include "sgm/manip.hpp"
#include "sgm/parser.hpp"
#include "sgm/retrieval.hpp"

namespace sgm {

/// A required artifact from an earlier stage is missing. The message names
/// the stage that would produce it; the CLI maps this to its own exit code.
struct PrereqError : std::runtime_error {
  explicit PrereqError(const std::string& what) : std::runtime_error(what) {}
};

/// Artifact layout under one run directory. Constructing it creates the
/// subdirectories.
struct RunPaths {
  std::string root;

  static RunPaths at(const std::string& root);

  std::string dataset(const std::string& name) const { return root + "/datasets/" + name; }
  std::string checkpoint(const std::string& name) const {
    return root + "/checkpoints/" + name;
  }
  std::string metric(const std::string& name) const { return root + "/metrics/" + name; }
  std::string log(const std::string& name) const { return root + "/logs/" + name; }
  std::string config(const std::string& name) const { return root + "/config/" + name; }
};

/// Flat metrics map -> pretty JSON. Keys ending in "_seconds" are dropped so
/// metric files stay byte-identical across reruns of the same config + seed.
void save_metrics(const std::string& path, const std::map<std::string, double>& metrics);
std::map<std::string, double> load_metrics(const std::string& path);

// ---------------------------------------------------------------------------
// Guarded instruction loading. Training stages must stay weakly supervised:
// they read instruction text only. Target scenes are parsed exclusively by
// load_instruction_records, which bumps a process-wide counter; train-manip
// asserts the counter is untouched across the whole stage.

std::vector<InstructionText> load_instruction_texts(const std::string& path);
std::vector<InstructionRecord> load_instruction_records(const std::string& path,
                                                        const AttributeCatalog& cat);
long target_scene_reads();

// ---------------------------------------------------------------------------
// Scene-graph JSON (used by the standalone retrieve mode).

std::string graph_to_json(const SceneGraph& g);
SceneGraph graph_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Stages. Each writes its artifacts under the run directory and returns the
// metrics it persisted (minus wall times, which only exist in the return
// values and on stdout).

void stage_gen_scenes(const ExperimentConfig& cfg, const RunPaths& run);
void stage_gen_vqa(const ExperimentConfig& cfg, const RunPaths& run);
void stage_gen_instr(const ExperimentConfig& cfg, const RunPaths& run);

VqaMetrics stage_train_concepts(const ExperimentConfig& cfg, const RunPaths& run);
ParserMetrics stage_train_parser(const ExperimentConfig& cfg, const RunPaths& run);

struct ManipStageMetrics {
  ChangeEvalMetrics change;
  AddEvalMetrics add;
  // Held-out reconstruction errors of the change net (mean L2); the
  // regulariser ablations are judged against these.
  double change_cycle_l2 = 0.0;
  double change_consistency_l2 = 0.0;
};
ManipStageMetrics stage_train_manip(const ExperimentConfig& cfg, const RunPaths& run);

/// Parser selection accuracy on the held-out instructions, judged on
/// ground-truth scene views.
ParserMetrics stage_eval_parser(const ExperimentConfig& cfg, const RunPaths& run);

/// Gold-program manipulation success per operation and hop count. An edit
/// succeeds when the edited graph's quantized view matches the target scene:
/// node ids, all four attributes per surviving node, the added object's
/// concepts, and the instructed relation on the requested axis.
struct ManipEvalTable {
  std::array<std::array<int, 4>, 3> hits{};    // [op][hops], op order change/add/remove
  std::array<std::array<int, 4>, 3> counts{};
  int op_hits(int op) const;
  int op_counts(int op) const;
  double op_accuracy(int op) const;
  double overall() const;
};
ManipEvalTable stage_eval_manip(const ExperimentConfig& cfg, const RunPaths& run);

struct RetrievalStageMetrics {
  std::map<int, double> recall;  // k -> recall@k
  int queries = 0;
  int failed_applies = 0;  // query fell back to the unedited source graph
  double eval_seconds = 0.0;
};
RetrievalStageMetrics stage_retrieve(const ExperimentConfig& cfg, const RunPaths& run);

/// Reruns change/add training with the named loss term dropped. Valid names:
/// change.cycle, change.consistency, change.gan, add.obj_sup, add.edge_sup,
/// add.edge_gan, add.obj_gan. Ablated checkpoints are not persisted.
ManipStageMetrics stage_ablate(const ExperimentConfig& cfg, const RunPaths& run,
                               const std::string& drop);

}  // namespace sgm
