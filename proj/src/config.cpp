#include "sgm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace sgm {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void put(std::map<std::string, std::string>& kv, const std::string& k, const std::string& v) {
  kv.emplace(k, v);
}

}  // namespace

Config Config::defaults() {
  Config c;
  auto& kv = c.kv_;
  put(kv, "seed", "29");

  put(kv, "dims.d_obj", "256");
  put(kv, "dims.d_attr", "64");
  put(kv, "dims.d_edge", "256");
  put(kv, "concepts.t1", "0.25");
  put(kv, "concepts.t2", "0.15");
  put(kv, "concepts.init_seed", "7");
  put(kv, "percep.sigma", "0.05");
  put(kv, "percep.seed", "5");
  put(kv, "opt.lr", "0.001");
  put(kv, "opt.weight_decay", "0.0001");

  put(kv, "data.train_scenes", "1200");
  put(kv, "data.val_scenes", "2000");
  put(kv, "data.val_seed", "1031");
  put(kv, "data.min_objects", "3");
  put(kv, "data.max_objects", "8");
  put(kv, "data.separation", "0.02");
  put(kv, "data.questions_per_scene", "10");
  put(kv, "data.instructions_per_scene", "3");
  put(kv, "data.val_instructions_per_scene", "5");

  put(kv, "vqa.epochs", "30");
  put(kv, "vqa.batch_scenes", "4");
  put(kv, "vqa.eval_every", "30");
  put(kv, "vqa.seed", "3");

  put(kv, "parser.train_instructions", "1800");
  put(kv, "parser.epochs", "10");
  put(kv, "parser.batch", "32");
  put(kv, "parser.eval_every", "10");
  put(kv, "parser.pos_reward", "8");
  put(kv, "parser.neg_reward", "2");
  put(kv, "parser.init_seed", "1");
  put(kv, "parser.seed", "2");

  put(kv, "manip.scenes", "400");
  put(kv, "manip.train_scenes", "300");
  put(kv, "manip.batch", "32");
  put(kv, "manip.eval_every", "5");
  put(kv, "manip.corpus_seed", "11");

  // Negative lambda keys mean "keep the built-in schedule".
  put(kv, "change.per_object", "1");
  put(kv, "change.max_examples", "1000");
  put(kv, "change.epochs", "30");
  put(kv, "change.net_seed", "21");
  put(kv, "change.d_seed", "22");
  put(kv, "change.train_seed", "4");
  put(kv, "change.use_cycle", "true");
  put(kv, "change.use_consistency", "true");
  put(kv, "change.use_gan", "true");
  put(kv, "change.lambda_attr", "-1");
  put(kv, "change.lambda_other", "-1");
  put(kv, "change.lambda_cycle", "-1");
  put(kv, "change.lambda_consistency", "-1");
  put(kv, "change.lambda_gan", "-1");

  put(kv, "add.per_scene", "2");
  put(kv, "add.epochs", "30");
  put(kv, "add.net_seed", "31");
  put(kv, "add.d_obj_seed", "32");
  put(kv, "add.d_edge_seed", "33");
  put(kv, "add.train_seed", "6");
  put(kv, "add.use_obj_sup", "true");
  put(kv, "add.use_edge_sup", "true");
  put(kv, "add.use_edge_gan", "true");
  put(kv, "add.use_obj_gan", "true");
  put(kv, "add.lambda_concepts", "-1");
  put(kv, "add.lambda_relation", "-1");
  put(kv, "add.lambda_obj_sup", "-1");
  put(kv, "add.lambda_edge_sup", "-1");
  put(kv, "add.lambda_edge_gan", "-1");
  put(kv, "add.lambda_obj_gan", "-1");

  put(kv, "retrieval.queries", "1000");
  put(kv, "retrieval.ks", "1,3");
  return c;
}

void Config::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::apply_override(const std::string& key, const std::string& value) {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: unknown key '" + key + "'");
  if (value.empty()) throw ConfigError("config: empty value for '" + key + "'");
  it->second = value;
}

const std::string& Config::get_str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: unknown key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const auto& s = get_str(key);
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + s + "'");
  }
}

uint64_t Config::get_seed(const std::string& key) const {
  const auto& s = get_str(key);
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a seed, got '" + s + "'");
  }
}

double Config::get_real(const std::string& key) const {
  const auto& s = get_str(key);
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + s + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  const auto& s = get_str(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + s + "'");
}

void Config::print(std::ostream& os) const {
  for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  print(out);
}

namespace {

int positive(const Config& c, const std::string& key) {
  int v = c.get_int(key);
  if (v <= 0) throw ConfigError("config: '" + key + "' must be positive");
  return v;
}

double positive_real(const Config& c, const std::string& key) {
  double v = c.get_real(key);
  if (v <= 0) throw ConfigError("config: '" + key + "' must be positive");
  return v;
}

// Negative values keep the built-in default.
void maybe(double& slot, const Config& c, const std::string& key) {
  double v = c.get_real(key);
  if (v >= 0) slot = v;
}

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t pos = 0;
      int k = std::stoi(tok, &pos);
      if (pos != tok.size() || k <= 0) throw std::invalid_argument(tok);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw ConfigError("config: 'retrieval.ks' expects comma-separated positive ints");
    }
  }
  if (ks.empty()) throw ConfigError("config: 'retrieval.ks' is empty");
  return ks;
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig e;
  e.seed = c.get_seed("seed");

  e.dims.d_obj = positive(c, "dims.d_obj");
  e.dims.d_attr = positive(c, "dims.d_attr");
  e.dims.d_edge = positive(c, "dims.d_edge");
  e.t1 = positive_real(c, "concepts.t1");
  e.t2 = c.get_real("concepts.t2");
  e.concepts_init_seed = c.get_seed("concepts.init_seed");
  e.percep_sigma = c.get_real("percep.sigma");
  if (e.percep_sigma < 0) throw ConfigError("config: 'percep.sigma' must be >= 0");
  e.percep_seed = c.get_seed("percep.seed");
  e.opt.lr = positive_real(c, "opt.lr");
  e.opt.weight_decay = c.get_real("opt.weight_decay");

  e.data.train_scenes = positive(c, "data.train_scenes");
  e.data.val_scenes = positive(c, "data.val_scenes");
  e.data.val_seed = c.get_seed("data.val_seed");
  e.data.min_objects = positive(c, "data.min_objects");
  e.data.max_objects = positive(c, "data.max_objects");
  if (e.data.max_objects < e.data.min_objects)
    throw ConfigError("config: 'data.max_objects' below 'data.min_objects'");
  e.data.separation = positive_real(c, "data.separation");
  e.data.questions_per_scene = positive(c, "data.questions_per_scene");
  e.data.instructions_per_scene = positive(c, "data.instructions_per_scene");
  e.data.val_instructions_per_scene = positive(c, "data.val_instructions_per_scene");

  e.vqa.epochs = positive(c, "vqa.epochs");
  e.vqa.batch_scenes = positive(c, "vqa.batch_scenes");
  e.vqa.eval_every = positive(c, "vqa.eval_every");
  e.vqa.seed = c.get_seed("vqa.seed");

  e.parser.train_instructions = positive(c, "parser.train_instructions");
  e.parser.epochs = positive(c, "parser.epochs");
  e.parser.batch = positive(c, "parser.batch");
  e.parser.eval_every = positive(c, "parser.eval_every");
  e.parser.pos_reward = c.get_real("parser.pos_reward");
  e.parser.neg_reward = c.get_real("parser.neg_reward");
  e.parser.init_seed = c.get_seed("parser.init_seed");
  e.parser.seed = c.get_seed("parser.seed");

  e.manip.scenes = positive(c, "manip.scenes");
  e.manip.train_scenes = positive(c, "manip.train_scenes");
  if (e.manip.train_scenes >= e.manip.scenes)
    throw ConfigError("config: 'manip.train_scenes' must leave validation scenes");
  if (e.manip.scenes > e.data.train_scenes)
    throw ConfigError("config: 'manip.scenes' exceeds 'data.train_scenes'");
  e.manip.batch = positive(c, "manip.batch");
  e.manip.eval_every = positive(c, "manip.eval_every");
  e.manip.corpus_seed = c.get_seed("manip.corpus_seed");

  auto cat = AttributeCatalog::clevr();
  e.change.per_object = positive(c, "change.per_object");
  e.change.max_examples = c.get_int("change.max_examples");
  if (e.change.max_examples < 0)
    throw ConfigError("config: 'change.max_examples' must be >= 0");
  e.change.epochs = positive(c, "change.epochs");
  e.change.net_seed = c.get_seed("change.net_seed");
  e.change.d_seed = c.get_seed("change.d_seed");
  e.change.train_seed = c.get_seed("change.train_seed");
  e.change.loss = default_change_loss(cat);
  e.change.loss.use_cycle = c.get_bool("change.use_cycle");
  e.change.loss.use_consistency = c.get_bool("change.use_consistency");
  e.change.loss.use_gan = c.get_bool("change.use_gan");
  maybe(e.change.loss.lambda_attr, c, "change.lambda_attr");
  maybe(e.change.loss.lambda_other, c, "change.lambda_other");
  maybe(e.change.loss.lambda_cycle, c, "change.lambda_cycle");
  maybe(e.change.loss.lambda_consistency, c, "change.lambda_consistency");
  maybe(e.change.loss.lambda_gan, c, "change.lambda_gan");

  e.add.per_scene = positive(c, "add.per_scene");
  e.add.epochs = positive(c, "add.epochs");
  e.add.net_seed = c.get_seed("add.net_seed");
  e.add.d_obj_seed = c.get_seed("add.d_obj_seed");
  e.add.d_edge_seed = c.get_seed("add.d_edge_seed");
  e.add.train_seed = c.get_seed("add.train_seed");
  e.add.loss = default_add_loss(cat);
  e.add.loss.use_obj_sup = c.get_bool("add.use_obj_sup");
  e.add.loss.use_edge_sup = c.get_bool("add.use_edge_sup");
  e.add.loss.use_edge_gan = c.get_bool("add.use_edge_gan");
  e.add.loss.use_obj_gan = c.get_bool("add.use_obj_gan");
  maybe(e.add.loss.lambda_concepts, c, "add.lambda_concepts");
  maybe(e.add.loss.lambda_relation, c, "add.lambda_relation");
  maybe(e.add.loss.lambda_obj_sup, c, "add.lambda_obj_sup");
  maybe(e.add.loss.lambda_edge_sup, c, "add.lambda_edge_sup");
  maybe(e.add.loss.lambda_edge_gan, c, "add.lambda_edge_gan");
  maybe(e.add.loss.lambda_obj_gan, c, "add.lambda_obj_gan");

  e.retrieval.queries = positive(c, "retrieval.queries");
  e.retrieval.ks = parse_ks(c.get_str("retrieval.ks"));
  return e;
}

}  // namespace sgm
