#include "sgm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace sgm {

using nlohmann::json;

SymbolicScene gen_scene(const AttributeCatalog& cat, Rng& rng, int n, double separation) {
  SymbolicScene s;
  for (int i = 0; i < n; ++i) {
    SymbolicObject o;
    o.id = i;
    for (int a = 0; a < cat.num_attributes(); ++a)
      o.concepts[a] =
          cat.concept_id(a, rng.uniform_int(0, static_cast<int>(cat.values[a].size()) - 1));
    bool placed = false;
    for (int tries = 0; tries < 1000 && !placed; ++tries) {
      o.x = rng.uniform();
      o.y = rng.uniform();
      placed = true;
      for (const auto& p : s.objects)
        if (std::abs(p.x - o.x) < separation || std::abs(p.y - o.y) < separation) {
          placed = false;
          break;
        }
    }
    require(placed, "gen_scene: no separated position found in 1000 tries");
    s.objects.push_back(o);
  }
  return s;
}

std::vector<SymbolicScene> gen_scenes(const AttributeCatalog& cat, const DatasetConfig& cfg) {
  std::vector<SymbolicScene> out;
  out.reserve(cfg.num_scenes);
  for (int i = 0; i < cfg.num_scenes; ++i) {
    Rng rng(Rng::derive(cfg.seed, "scene", i));
    int n = rng.uniform_int(cfg.min_objects, cfg.max_objects);
    out.push_back(gen_scene(cat, rng, n, cfg.separation));
  }
  return out;
}

namespace {

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[rng.uniform_int(0, i)]);
}

bool matches(const SymbolicView& view, int pos, const std::vector<int>& desc) {
  for (int c : desc) {
    bool any = false;
    for (int a = 0; a < kNumAttributes; ++a) any |= view.attrs[pos][a] == c;
    if (!any) return false;
  }
  return true;
}

int count_matches(const SymbolicView& view, const std::vector<int>& candidates,
                  const std::vector<int>& desc) {
  int n = 0;
  for (int p : candidates) n += matches(view, p, desc) ? 1 : 0;
  return n;
}

/// Smallest randomly-ordered attribute subset of `target`'s concepts that
/// selects it uniquely within `candidates`.
std::optional<std::vector<int>> unique_descriptor(const SymbolicView& view, int target,
                                                  const std::vector<int>& candidates,
                                                  int exclude_attr, bool allow_empty,
                                                  Rng& rng) {
  std::vector<int> attrs;
  for (int a = 0; a < kNumAttributes; ++a)
    if (a != exclude_attr) attrs.push_back(a);
  int na = static_cast<int>(attrs.size());
  for (int size = allow_empty ? 0 : 1; size <= na; ++size) {
    std::vector<std::vector<int>> options;
    for (int mask = 0; mask < (1 << na); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != size) continue;
      std::vector<int> desc;
      for (int i = 0; i < na; ++i)
        if (mask & (1 << i)) desc.push_back(view.attrs[target][attrs[i]]);
      options.push_back(std::move(desc));
    }
    shuffle_vec(options, rng);
    for (auto& desc : options) {
      if (count_matches(view, candidates, desc) == 1 && matches(view, target, desc))
        return desc;
    }
  }
  return std::nullopt;
}

std::vector<int> all_positions(const SymbolicView& view) {
  std::vector<int> out(view.n());
  for (int i = 0; i < view.n(); ++i) out[i] = i;
  return out;
}

std::vector<int> related_positions(const SymbolicView& view, int ref, int rel) {
  std::vector<int> out;
  for (int y = 0; y < view.n(); ++y)
    if (y != ref && view.has_relation(ref, y, rel)) out.push_back(y);
  return out;
}

// ---------------------------------------------------------------------------
// Text rendering.

std::string word_for(const Lexicon& lex, Rng& rng, int cid) {
  const auto& forms = lex.surfaces[cid];
  return forms[rng.uniform_int(0, static_cast<int>(forms.size()) - 1)];
}

/// size color material shape, generic word when shape is absent.
std::string descriptor_words(const Lexicon& lex, const AttributeCatalog& cat,
                             const std::vector<int>& desc, Rng& rng) {
  static const int order[] = {2, 0, 3, 1};
  std::string out;
  bool has_shape = false;
  for (int a : order)
    for (int c : desc)
      if (cat.attribute_of_concept(c) == a) {
        if (!out.empty()) out += " ";
        out += word_for(lex, rng, c);
        if (a == 1) has_shape = true;
      }
  if (!has_shape) {
    if (!out.empty()) out += " ";
    out += lex.generic_words[rng.uniform_int(0, static_cast<int>(lex.generic_words.size()) - 1)];
  }
  return out;
}

std::string relation_phrase(const AttributeCatalog& cat, int rel, Rng& rng) {
  const std::string& name = cat.relations[rel];
  if (rel == kRelFront) return "in front of";
  if (rel == kRelBehind) return "behind";
  return rng.uniform() < 0.5 ? "to the " + name + " of" : name + " of";
}

struct ChainSpec {
  std::vector<std::vector<int>> groups;  // concept ids per level, 0 = outermost
  std::vector<int> relations;            // relations[k] links level k to k+1
};

std::string chain_text(const ChainSpec& chain, const Lexicon& lex,
                       const AttributeCatalog& cat, Rng& rng) {
  std::string out;
  int levels = static_cast<int>(chain.groups.size());
  for (int k = 0; k < levels; ++k) {
    out += descriptor_words(lex, cat, chain.groups[k], rng);
    if (k + 1 < levels)
      out += " that is " + relation_phrase(cat, chain.relations[k], rng) + " the ";
  }
  return out;
}

Program chain_program(const ChainSpec& chain, const AttributeCatalog& cat) {
  int levels = static_cast<int>(chain.groups.size());
  Program p;
  for (int k = levels - 1; k >= 0; --k) {
    Program base = k == levels - 1
                       ? Program::scene()
                       : Program::relate(Program::scene(), chain.relations[k], std::move(p));
    p = build_filter_chain(std::move(base), chain.groups[k], cat);
  }
  return p;
}

/// Distinct chain objects o_0..o_h plus relations and unique descriptors.
/// outer_unique / outer_exclude control the outermost group (remove keeps it
/// free, change excludes nothing but needs uniqueness).
std::optional<ChainSpec> build_chain(const SymbolicView& view, int hops, bool outer_unique,
                                     int outer_exclude, Rng& rng, int* out_target_pos) {
  int n = view.n();
  if (hops + 1 > n) return std::nullopt;
  std::vector<int> order = all_positions(view);
  shuffle_vec(order, rng);
  std::vector<int> objs(order.begin(), order.begin() + hops + 1);  // o_0..o_h

  ChainSpec chain;
  chain.groups.resize(hops + 1);
  chain.relations.resize(hops);
  for (int k = 0; k < hops; ++k) {
    // relation of o_k relative to o_{k+1}
    const auto& pair = view.rel[view.slot(objs[k + 1], objs[k])];
    chain.relations[k] = rng.uniform() < 0.5 ? pair.first : pair.second;
  }
  for (int k = hops; k >= 0; --k) {
    std::vector<int> candidates =
        k == hops ? all_positions(view) : related_positions(view, objs[k + 1], chain.relations[k]);
    if (k > 0 || outer_unique) {
      bool allow_empty = k > 0 ? k < hops : hops > 0;
      auto desc = unique_descriptor(view, objs[k], candidates, k == 0 ? outer_exclude : -1,
                                    allow_empty, rng);
      if (!desc) return std::nullopt;
      chain.groups[k] = *desc;
    } else {
      // remove: any subset of the target's attributes, selection may be plural
      int size = rng.uniform_int(1, 2);
      std::vector<int> attrs{0, 1, 2, 3};
      shuffle_vec(attrs, rng);
      for (int i = 0; i < size; ++i)
        chain.groups[k].push_back(view.attrs[objs[k]][attrs[i]]);
    }
  }
  *out_target_pos = objs[0];
  return chain;
}

}  // namespace

std::vector<VqaExample> gen_vqa(const AttributeCatalog& cat,
                                const std::vector<SymbolicScene>& scenes,
                                const DatasetConfig& cfg) {
  std::vector<VqaExample> out;
  for (int sid = 0; sid < static_cast<int>(scenes.size()); ++sid) {
    const auto& scene = scenes[sid];
    auto view = SymbolicView::from_scene(scene);
    Rng rng(Rng::derive(cfg.seed, "vqa", sid));
    int n = view.n();

    auto unique_ref_chain = [&](int exclude_pos) -> std::optional<std::pair<Program, int>> {
      // a uniquely-described reference object (for relational variants)
      std::vector<int> order = all_positions(view);
      shuffle_vec(order, rng);
      for (int pos : order) {
        if (pos == exclude_pos) continue;
        auto desc = unique_descriptor(view, pos, all_positions(view), -1, false, rng);
        if (desc) return std::make_pair(build_filter_chain(Program::scene(), *desc, cat), pos);
      }
      return std::nullopt;
    };

    for (int q = 0; q < cfg.questions_per_scene; ++q) {
      bool is_exist = q < cfg.questions_per_scene / 2;
      bool relational = rng.uniform() < 0.5;
      VqaExample ex;
      ex.scene_id = sid;

      if (is_exist) {
        bool want_yes = q % 2 == 0;
        bool built = false;
        for (int attempt = 0; attempt < 30 && !built; ++attempt) {
          // random 1-2 attribute descriptor
          std::vector<int> attrs{0, 1, 2, 3};
          shuffle_vec(attrs, rng);
          int size = rng.uniform_int(1, 2);
          std::vector<int> desc;
          if (want_yes) {
            int target = rng.uniform_int(0, n - 1);
            for (int i = 0; i < size; ++i) desc.push_back(view.attrs[target][attrs[i]]);
          } else {
            for (int i = 0; i < size; ++i) {
              int a = attrs[i];
              desc.push_back(cat.concept_id(
                  a, rng.uniform_int(0, static_cast<int>(cat.values[a].size()) - 1)));
            }
          }
          Program base = Program::scene();
          std::vector<int> candidates = all_positions(view);
          if (relational) {
            auto ref = unique_ref_chain(-1);
            if (!ref) continue;
            int rel = rng.uniform_int(0, 3);
            base = Program::relate(Program::scene(), rel, std::move(ref->first));
            candidates = related_positions(view, ref->second, rel);
          }
          int hits = count_matches(view, candidates, desc);
          if (want_yes != (hits > 0)) continue;
          ex.program = Program::exist(build_filter_chain(std::move(base), desc, cat));
          ex.answer = want_yes ? "yes" : "no";
          built = true;
        }
        if (!built) {
          // guaranteed fallback: existence of a concrete object's color
          int target = rng.uniform_int(0, n - 1);
          ex.program = Program::exist(
              Program::filter(Program::scene(), view.attrs[target][0]));
          ex.answer = "yes";
        }
      } else {
        bool built = false;
        for (int attempt = 0; attempt < 30 && !built; ++attempt) {
          int target = rng.uniform_int(0, n - 1);
          int attr = rng.uniform_int(0, 3);
          Program base = Program::scene();
          std::vector<int> candidates = all_positions(view);
          if (relational) {
            auto ref = unique_ref_chain(target);
            if (!ref) continue;
            const auto& pair = view.rel[view.slot(ref->second, target)];
            int rel = rng.uniform() < 0.5 ? pair.first : pair.second;
            base = Program::relate(Program::scene(), rel, std::move(ref->first));
            candidates = related_positions(view, ref->second, rel);
          }
          auto desc = unique_descriptor(view, target, candidates, attr, relational, rng);
          if (!desc) continue;
          ex.program = Program::query(build_filter_chain(std::move(base), *desc, cat), attr);
          ex.answer = cat.concept_name(view.attrs[target][attr]);
          built = true;
        }
        if (!built) {
          int target = rng.uniform_int(0, n - 1);
          ex.program = Program::exist(
              Program::filter(Program::scene(), view.attrs[target][0]));
          ex.answer = "yes";
        }
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

uint64_t placement_seed(uint64_t dataset_seed, int record_id) {
  return Rng::derive(dataset_seed, "placement", record_id);
}

std::vector<InstructionRecord> gen_instructions(const AttributeCatalog& cat,
                                                const std::vector<SymbolicScene>& scenes,
                                                const DatasetConfig& cfg) {
  Lexicon lex = Lexicon::clevr_default(cat);
  std::vector<InstructionRecord> out;
  int next_id = 0;
  for (int sid = 0; sid < static_cast<int>(scenes.size()); ++sid) {
    const auto& scene = scenes[sid];
    auto view = SymbolicView::from_scene(scene);
    Rng rng(Rng::derive(cfg.seed, "instr", sid));
    int n = view.n();

    std::vector<OpTag> ops;
    for (int j = 0; j < cfg.instructions_per_scene; ++j) {
      static const OpTag cycle[] = {OpTag::Change, OpTag::Add, OpTag::Remove};
      ops.push_back(cycle[j % 3]);
    }
    shuffle_vec(ops, rng);

    for (OpTag op : ops) {
      bool built = false;
      for (int attempt = 0; attempt < 60 && !built; ++attempt) {
        int hops = op == OpTag::Add ? rng.uniform_int(1, 3) : rng.uniform_int(0, 3);
        int chain_hops = op == OpTag::Add ? hops - 1 : hops;
        if (chain_hops + 1 > n) continue;

        InstructionRecord rec;
        rec.scene_id = sid;
        rec.op = op;
        rec.hops = hops;
        rec.record_id = next_id;

        int target_pos = -1;
        bool outer_unique = op != OpTag::Remove;
        auto chain = build_chain(view, chain_hops, outer_unique, -1, rng, &target_pos);
        if (!chain) continue;

        if (op == OpTag::Change) {
          int attr = rng.uniform_int(0, 3);
          int old_value = cat.value_index_of_concept(view.attrs[target_pos][attr]);
          int nv = cat.values[attr].size() > 1
                       ? rng.uniform_int(0, static_cast<int>(cat.values[attr].size()) - 2)
                       : -1;
          if (nv < 0) continue;
          if (nv >= old_value) ++nv;
          int target_concept = cat.concept_id(attr, nv);
          rec.program = Program::change(chain_program(*chain, cat), target_concept);
          rec.text = "change the " + chain_text(*chain, lex, cat, rng) + " to " +
                     word_for(lex, rng, target_concept);
        } else if (op == OpTag::Remove) {
          rec.program = Program::remove(Program::input_graph(), chain_program(*chain, cat));
          rec.text = "remove the " + chain_text(*chain, lex, cat, rng);
        } else {
          std::array<int, kNumAttributes> cset{};
          for (int a = 0; a < kNumAttributes; ++a)
            cset[a] = cat.concept_id(
                a, rng.uniform_int(0, static_cast<int>(cat.values[a].size()) - 1));
          int rel = rng.uniform_int(0, 3);
          rec.program =
              Program::add(Program::input_graph(), rel, chain_program(*chain, cat), cset);
          std::vector<int> full(cset.begin(), cset.end());
          rec.text = "add a " + descriptor_words(lex, cat, full, rng) + " " +
                     relation_phrase(cat, rel, rng) + " the " + chain_text(*chain, lex, cat, rng);
        }

        Rng placement(placement_seed(cfg.seed, rec.record_id));
        ExecOptions opts;
        opts.placement_rng = &placement;
        opts.separation = cfg.separation;
        auto result = exec_symbolic(rec.program, scene, cat, &view, opts);
        if (!result.ok()) continue;
        require(result.value.kind == ExecValue::Kind::Graph,
                "gen_instructions: manipulation must yield a graph");
        rec.target_scene = result.value.graph;
        out.push_back(std::move(rec));
        ++next_id;
        built = true;
      }
      require(built, "gen_instructions: exhausted attempts for scene " + std::to_string(sid));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL persistence.

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

void write_scenes_jsonl(const std::string& path, const std::vector<SymbolicScene>& scenes,
                        const AttributeCatalog& cat) {
  auto out = open_out(path);
  for (const auto& s : scenes) out << scene_to_json(s, cat) << "\n";
}

std::vector<SymbolicScene> read_scenes_jsonl(const std::string& path,
                                             const AttributeCatalog& cat) {
  std::vector<SymbolicScene> out;
  for (const auto& line : read_lines(path)) out.push_back(scene_from_json(line, cat));
  return out;
}

void write_vqa_jsonl(const std::string& path, const std::vector<VqaExample>& examples,
                     const AttributeCatalog& cat) {
  auto out = open_out(path);
  for (const auto& ex : examples) {
    json j;
    j["scene_id"] = ex.scene_id;
    j["program"] = canonical_serialize(ex.program, cat);
    j["answer"] = ex.answer;
    out << j.dump() << "\n";
  }
}

std::vector<VqaExample> read_vqa_jsonl(const std::string& path, const AttributeCatalog& cat) {
  std::vector<VqaExample> out;
  for (const auto& line : read_lines(path)) {
    json j = json::parse(line);
    VqaExample ex;
    ex.scene_id = j.at("scene_id").get<int>();
    auto prog = parse_program(j.at("program").get<std::string>(), cat);
    require(prog.has_value(), "bad program in " + path);
    ex.program = std::move(*prog);
    ex.answer = j.at("answer").get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

void write_instructions_jsonl(const std::string& path,
                              const std::vector<InstructionRecord>& records,
                              const AttributeCatalog& cat) {
  auto out = open_out(path);
  for (const auto& r : records) {
    json j;
    j["record_id"] = r.record_id;
    j["scene_id"] = r.scene_id;
    j["op"] = op_name(r.op);
    j["hops"] = r.hops;
    j["text"] = r.text;
    j["program"] = canonical_serialize(r.program, cat);
    j["target_scene"] = json::parse(scene_to_json(r.target_scene, cat));
    out << j.dump() << "\n";
  }
}

std::vector<InstructionRecord> read_instructions_jsonl(const std::string& path,
                                                       const AttributeCatalog& cat) {
  std::vector<InstructionRecord> out;
  for (const auto& line : read_lines(path)) {
    json j = json::parse(line);
    InstructionRecord r;
    r.record_id = j.at("record_id").get<int>();
    r.scene_id = j.at("scene_id").get<int>();
    std::string op = j.at("op").get<std::string>();
    if (op == "Change")
      r.op = OpTag::Change;
    else if (op == "Add")
      r.op = OpTag::Add;
    else if (op == "Remove")
      r.op = OpTag::Remove;
    else
      fail("bad op in " + path + ": " + op);
    r.hops = j.at("hops").get<int>();
    r.text = j.at("text").get<std::string>();
    auto prog = parse_program(j.at("program").get<std::string>(), cat);
    require(prog.has_value(), "bad program in " + path);
    r.program = std::move(*prog);
    r.target_scene = scene_from_json(j.at("target_scene").dump(), cat);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sgm
