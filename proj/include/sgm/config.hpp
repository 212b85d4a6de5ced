#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgm/concepts.hpp"
#include "sgm/manip.hpp"
#include "sgm/param_store.hpp"

namespace sgm {

/// Raised for unknown keys, malformed values, or out-of-range settings.
/// The CLI maps this to its config-error exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat dotted-key configuration. Every key exists in the embedded defaults;
/// a file or command-line override may only replace known keys. Values are
/// stored as text and parsed on access so --print-config round-trips exactly.
class Config {
 public:
  static Config defaults();

  /// Overlay `key = value` lines ('#' comments, blank lines allowed).
  void apply_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);

  const std::string& get_str(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_seed(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Sorted `key = value` lines, parseable by apply_file.
  void print(std::ostream& os) const;
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// Typed snapshot of one experiment: everything the pipeline stages read.
/// Built from a Config with range validation; the attribute catalog itself is
/// the fixed CLEVR-style one the constants are derived from.
struct ExperimentConfig {
  uint64_t seed = 29;

  Dims dims;
  double t1 = 0.25, t2 = 0.15;
  uint64_t concepts_init_seed = 7;
  double percep_sigma = 0.05;
  uint64_t percep_seed = 5;
  ad::AdamWConfig opt;

  struct Data {
    int train_scenes = 1200;
    int val_scenes = 2000;
    uint64_t val_seed = 1031;
    int min_objects = 3, max_objects = 8;
    double separation = 0.02;
    int questions_per_scene = 10;
    int instructions_per_scene = 3;
    int val_instructions_per_scene = 5;
  } data;

  struct Vqa {
    int epochs = 30, batch_scenes = 4, eval_every = 30;
    uint64_t seed = 3;
  } vqa;

  struct Parser {
    int train_instructions = 1800;
    int epochs = 10, batch = 32, eval_every = 10;
    double pos_reward = 8.0, neg_reward = 2.0;
    uint64_t init_seed = 1, seed = 2;
  } parser;

  struct Manip {
    int scenes = 400;        // perceived prefix of the train scenes
    int train_scenes = 300;  // leading split used for example corpora
    int batch = 32, eval_every = 5;
    uint64_t corpus_seed = 11;
  } manip;

  struct Change {
    int per_object = 1;
    int max_examples = 1000;  // 0 = unlimited
    int epochs = 30;
    uint64_t net_seed = 21, d_seed = 22, train_seed = 4;
    ChangeLossConfig loss;
  } change;

  struct Add {
    int per_scene = 2;
    int epochs = 30;
    uint64_t net_seed = 31, d_obj_seed = 32, d_edge_seed = 33, train_seed = 6;
    AddLossConfig loss;
  } add;

  struct Retrieval {
    int queries = 1000;
    std::vector<int> ks = {1, 3};
  } retrieval;

  static ExperimentConfig from(const Config& c);
};

}  // namespace sgm
