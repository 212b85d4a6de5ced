#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgm/concepts.hpp"
#include "sgm/dsl.hpp"
#include "sgm/executor.hpp"
#include "sgm/lexicon.hpp"
#include "sgm/rng.hpp"
#include "sgm/scenegraph.hpp"

namespace sgm {

struct DatasetConfig {
  int num_scenes = 1000;
  int min_objects = 3;
  int max_objects = 8;
  double separation = 0.02;
  int questions_per_scene = 10;
  int instructions_per_scene = 3;
  uint64_t seed = 1;
};

struct InstructionRecord {
  int record_id = 0;
  int scene_id = 0;
  OpTag op = OpTag::Remove;
  int hops = 0;
  std::string text;
  Program program;             // gold program for the text
  SymbolicScene target_scene;  // exec(program) under the record's placement stream
};

/// Uniform positions with pairwise coordinate separation on both axes;
/// rejection sampling, at most 1000 tries per object.
SymbolicScene gen_scene(const AttributeCatalog& cat, Rng& rng, int n, double separation);

std::vector<SymbolicScene> gen_scenes(const AttributeCatalog& cat, const DatasetConfig& cfg);

/// Half existence questions (balanced yes/no), half attribute queries, each
/// with a 50% chance of one relational hop. Referents of Query/Relate are
/// unique by construction.
std::vector<VqaExample> gen_vqa(const AttributeCatalog& cat,
                                const std::vector<SymbolicScene>& scenes,
                                const DatasetConfig& cfg);

/// Placement randomness is keyed by record id so re-executing a stored gold
/// program reproduces the stored target scene exactly.
uint64_t placement_seed(uint64_t dataset_seed, int record_id);

/// One instruction cycles through change/add/remove per scene (shuffled).
/// Hops: change/remove uniform 0-3, add uniform 1-3, redrawn while the chain
/// needs more objects than the scene holds. Every Relate referent and every
/// change/add referent is unique by construction; gold programs execute Ok
/// and target scenes equal their execution result.
std::vector<InstructionRecord> gen_instructions(const AttributeCatalog& cat,
                                                const std::vector<SymbolicScene>& scenes,
                                                const DatasetConfig& cfg);

// JSONL persistence; scene ids and record ids equal line order.
void write_scenes_jsonl(const std::string& path, const std::vector<SymbolicScene>& scenes,
                        const AttributeCatalog& cat);
std::vector<SymbolicScene> read_scenes_jsonl(const std::string& path,
                                             const AttributeCatalog& cat);
void write_vqa_jsonl(const std::string& path, const std::vector<VqaExample>& examples,
                     const AttributeCatalog& cat);
std::vector<VqaExample> read_vqa_jsonl(const std::string& path, const AttributeCatalog& cat);
void write_instructions_jsonl(const std::string& path,
                              const std::vector<InstructionRecord>& records,
                              const AttributeCatalog& cat);
std::vector<InstructionRecord> read_instructions_jsonl(const std::string& path,
                                                       const AttributeCatalog& cat);

}  // namespace sgm
