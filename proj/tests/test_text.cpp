#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "sgm/datagen.hpp"
#include "sgm/dsl.hpp"
#include "sgm/executor.hpp"
#include "sgm/lexicon.hpp"
#include "sgm/scenegraph.hpp"

using namespace sgm;

namespace {

int cid(const AttributeCatalog& cat, const std::string& name) {
  auto c = cat.concept_by_name(name);
  REQUIRE(c.has_value());
  return *c;
}

bool has_relate(const Program& p) {
  if (p.op == OpTag::Relate) return true;
  for (const auto& c : p.children)
    if (has_relate(c)) return true;
  return false;
}

std::string scenes_digest(const std::vector<SymbolicScene>& scenes,
                          const AttributeCatalog& cat) {
  std::string out;
  for (const auto& s : scenes) out += scene_to_json(s, cat) + "\n";
  return out;
}

std::string records_digest(const std::vector<InstructionRecord>& recs,
                           const AttributeCatalog& cat) {
  std::string out;
  for (const auto& r : recs)
    out += r.text + "|" + canonical_serialize(r.program, cat) + "|" +
           scene_to_json(r.target_scene, cat) + "\n";
  return out;
}

}  // namespace

TEST_CASE("word tokenization lowercases and strips punctuation") {
  auto w = tokenize_words("Change the RED cube, to blue!");
  REQUIRE(w.size() == 6);
  CHECK(w[0] == "change");
  CHECK(w[2] == "red");
  CHECK(w[3] == "cube");
  CHECK(w[5] == "blue");
  CHECK(tokenize_words("   ").empty());
}

TEST_CASE("change text extraction finds chain, target and positions") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto ext = extract_tokens("change the big red cube to blue", lex, cat);
  REQUIRE(ext.concepts.size() == 3);
  CHECK(ext.concepts[0].id == cid(cat, "large"));
  CHECK(ext.concepts[0].pos == 2);
  CHECK(ext.concepts[1].id == cid(cat, "red"));
  CHECK(ext.concepts[1].pos == 3);
  CHECK(ext.concepts[2].id == cid(cat, "cube"));
  CHECK(ext.concepts[2].pos == 4);
  CHECK(ext.relations.empty());
  CHECK(!ext.concept_set.has_value());
  REQUIRE(ext.target_concept.has_value());
  CHECK(ext.target_concept->id == cid(cat, "blue"));
  CHECK(ext.target_concept->pos == 6);
  CHECK(ext.unknown_words.empty());
}

TEST_CASE("remove text extraction handles synonyms and relation phrases") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto ext =
      extract_tokens("remove the tiny ball that is to the left of the shiny thing", lex, cat);
  REQUIRE(ext.concepts.size() == 3);
  CHECK(ext.concepts[0].id == cid(cat, "small"));
  CHECK(ext.concepts[1].id == cid(cat, "sphere"));
  CHECK(ext.concepts[2].id == cid(cat, "metal"));
  CHECK(ext.concepts[2].pos == 11);
  REQUIRE(ext.relations.size() == 1);
  CHECK(ext.relations[0].id == kRelLeft);
  CHECK(ext.relations[0].pos == 8);
  CHECK(!ext.target_concept.has_value());  // "to the" is not a change target
  CHECK(!ext.concept_set.has_value());
  CHECK(ext.unknown_words.empty());
}

TEST_CASE("add text extraction consumes the full leading descriptor") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto ext = extract_tokens("add a small blue rubber cube behind the green thing", lex, cat);
  REQUIRE(ext.concept_set.has_value());
  CHECK((*ext.concept_set)[0] == cid(cat, "blue"));
  CHECK((*ext.concept_set)[1] == cid(cat, "cube"));
  CHECK((*ext.concept_set)[2] == cid(cat, "small"));
  CHECK((*ext.concept_set)[3] == cid(cat, "rubber"));
  REQUIRE(ext.relations.size() == 1);
  CHECK(ext.relations[0].id == kRelBehind);
  REQUIRE(ext.concepts.size() == 1);
  CHECK(ext.concepts[0].id == cid(cat, "green"));
  CHECK(!ext.target_concept.has_value());
}

TEST_CASE("incomplete or repeated add descriptors stay in the chain") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);

  auto three = extract_tokens("add a small blue cube behind the green thing", lex, cat);
  CHECK(!three.concept_set.has_value());
  REQUIRE(three.concepts.size() == 4);
  CHECK(three.concepts[0].id == cid(cat, "small"));
  CHECK(three.concepts[3].id == cid(cat, "green"));

  auto dup = extract_tokens("add a red blue rubber cube left of the ball", lex, cat);
  CHECK(!dup.concept_set.has_value());
  CHECK(dup.concepts.size() == 5);
  REQUIRE(dup.relations.size() == 1);
  CHECK(dup.relations[0].id == kRelLeft);
}

TEST_CASE("change target is the final to-value pair even after relation phrases") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto ext = extract_tokens(
      "change the thing that is to the right of the red ball to green", lex, cat);
  REQUIRE(ext.target_concept.has_value());
  CHECK(ext.target_concept->id == cid(cat, "green"));
  REQUIRE(ext.concepts.size() == 2);
  CHECK(ext.concepts[0].id == cid(cat, "red"));
  CHECK(ext.concepts[1].id == cid(cat, "sphere"));
  REQUIRE(ext.relations.size() == 1);
  CHECK(ext.relations[0].id == kRelRight);
}

TEST_CASE("words outside the vocabulary are reported, not fatal") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto ext = extract_tokens("remove the crimson cube", lex, cat);
  REQUIRE(ext.unknown_words.size() == 1);
  CHECK(ext.unknown_words[0] == "crimson");
  REQUIRE(ext.concepts.size() == 1);
  CHECK(ext.concepts[0].id == cid(cat, "cube"));
}

TEST_CASE("scene generation respects size bounds and coordinate separation") {
  auto cat = AttributeCatalog::clevr();
  DatasetConfig cfg;
  cfg.num_scenes = 40;
  cfg.seed = 3;
  auto scenes = gen_scenes(cat, cfg);
  REQUIRE(static_cast<int>(scenes.size()) == cfg.num_scenes);
  double total = 0;
  for (const auto& s : scenes) {
    int n = static_cast<int>(s.objects.size());
    CHECK(n >= cfg.min_objects);
    CHECK(n <= cfg.max_objects);
    total += n;
    for (int i = 0; i < n; ++i) {
      CHECK(s.objects[i].id == i);
      CHECK(s.objects[i].x >= 0.0);
      CHECK(s.objects[i].x <= 1.0);
      for (int a = 0; a < kNumAttributes; ++a)
        CHECK(cat.attribute_of_concept(s.objects[i].concepts[a]) == a);
      for (int j = i + 1; j < n; ++j) {
        CHECK(std::abs(s.objects[i].x - s.objects[j].x) >= cfg.separation);
        CHECK(std::abs(s.objects[i].y - s.objects[j].y) >= cfg.separation);
      }
    }
  }
  CHECK(total / cfg.num_scenes > 4.0);
  CHECK(total / cfg.num_scenes < 7.0);

  CHECK(scenes_digest(gen_scenes(cat, cfg), cat) == scenes_digest(scenes, cat));
  DatasetConfig other = cfg;
  other.seed = 4;
  CHECK(scenes_digest(gen_scenes(cat, other), cat) != scenes_digest(scenes, cat));
}

TEST_CASE("vqa generation produces valid programs whose answers match execution") {
  auto cat = AttributeCatalog::clevr();
  DatasetConfig cfg;
  cfg.num_scenes = 30;
  cfg.questions_per_scene = 10;
  cfg.seed = 11;
  auto scenes = gen_scenes(cat, cfg);
  auto vqa = gen_vqa(cat, scenes, cfg);
  REQUIRE(static_cast<int>(vqa.size()) == cfg.num_scenes * cfg.questions_per_scene);

  int exists = 0, queries = 0, yes = 0, no = 0, relational = 0;
  for (const auto& ex : vqa) {
    REQUIRE(ex.scene_id >= 0);
    REQUIRE(ex.scene_id < static_cast<int>(scenes.size()));
    CHECK(typecheck(ex.program, cat));
    if (has_relate(ex.program)) ++relational;
    auto res = exec_symbolic(ex.program, scenes[ex.scene_id], cat);
    REQUIRE(res.ok());
    if (ex.program.op == OpTag::Exist) {
      ++exists;
      REQUIRE(res.value.kind == ExecValue::Kind::Bool);
      CHECK(ex.answer == (res.value.boolean ? "yes" : "no"));
      (ex.answer == "yes" ? yes : no)++;
    } else {
      REQUIRE(ex.program.op == OpTag::Query);
      ++queries;
      REQUIRE(res.value.kind == ExecValue::Kind::Concept);
      CHECK(ex.answer == cat.concept_name(res.value.concept_id));
    }
  }
  CHECK(exists >= 150);       // half by construction plus rare fallbacks
  CHECK(queries >= 135);
  CHECK(yes + no == exists);
  CHECK(yes >= 80);           // three of five existence questions per scene
  CHECK(no >= 45);
  CHECK(relational >= 100);
  CHECK(relational <= 200);
}

TEST_CASE("instruction generation yields balanced ops with faithful targets") {
  auto cat = AttributeCatalog::clevr();
  DatasetConfig cfg;
  cfg.num_scenes = 30;
  cfg.instructions_per_scene = 3;
  cfg.seed = 7;
  auto scenes = gen_scenes(cat, cfg);
  auto recs = gen_instructions(cat, scenes, cfg);
  REQUIRE(static_cast<int>(recs.size()) == 90);

  int per_op[3] = {0, 0, 0};
  bool add_hop_seen[4] = {false, false, false, false};
  for (int i = 0; i < static_cast<int>(recs.size()); ++i) {
    const auto& r = recs[i];
    CHECK(r.record_id == i);
    REQUIRE(r.scene_id >= 0);
    REQUIRE(r.scene_id < static_cast<int>(scenes.size()));
    CHECK(typecheck(r.program, cat));
    CHECK(hop_count(r.program) == r.hops);
    if (r.op == OpTag::Change) {
      per_op[0]++;
      CHECK(r.hops >= 0);
      CHECK(r.program.op == OpTag::Change);
    } else if (r.op == OpTag::Add) {
      per_op[1]++;
      CHECK(r.hops >= 1);
      add_hop_seen[r.hops] = true;
      CHECK(r.program.op == OpTag::Add);
    } else {
      per_op[2]++;
      CHECK(r.program.op == OpTag::Remove);
    }
    CHECK(r.hops <= 3);

    auto view = SymbolicView::from_scene(scenes[r.scene_id]);
    CHECK(reasoning_selects(r.program, view));

    Rng placement(placement_seed(cfg.seed, r.record_id));
    ExecOptions opts;
    opts.placement_rng = &placement;
    opts.separation = cfg.separation;
    auto res = exec_symbolic(r.program, scenes[r.scene_id], cat, &view, opts);
    REQUIRE(res.ok());
    REQUIRE(res.value.kind == ExecValue::Kind::Graph);
    CHECK(scene_to_json(res.value.graph, cat) == scene_to_json(r.target_scene, cat));
  }
  CHECK(per_op[0] == 30);
  CHECK(per_op[1] == 30);
  CHECK(per_op[2] == 30);
  CHECK(add_hop_seen[1]);
  CHECK(add_hop_seen[2]);
  CHECK(add_hop_seen[3]);

  CHECK(records_digest(gen_instructions(cat, scenes, cfg), cat) ==
        records_digest(recs, cat));
}

TEST_CASE("instruction text extraction recovers the gold program") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  DatasetConfig cfg;
  cfg.num_scenes = 30;
  cfg.instructions_per_scene = 3;
  cfg.seed = 19;
  auto scenes = gen_scenes(cat, cfg);
  auto recs = gen_instructions(cat, scenes, cfg);

  for (const auto& r : recs) {
    auto ext = extract_tokens(r.text, lex, cat);
    CHECK(ext.unknown_words.empty());
    if (r.op == OpTag::Change) {
      REQUIRE(ext.target_concept.has_value());
      CHECK(ext.target_concept->id == r.program.concept_id);
    } else if (r.op == OpTag::Add) {
      REQUIRE(ext.concept_set.has_value());
      CHECK(*ext.concept_set == r.program.concept_set);
      REQUIRE(!ext.relations.empty());
      CHECK(ext.relations[0].id == r.program.relation);
    }
    auto cands = enumerate_candidates(ext, cat, template_library());
    REQUIRE(!cands.empty());
    bool found = false;
    for (const auto& c : cands) found = found || c == r.program;
    CHECK(found);
  }
}

TEST_CASE("jsonl files round trip scenes, questions and instructions") {
  auto cat = AttributeCatalog::clevr();
  DatasetConfig cfg;
  cfg.num_scenes = 12;
  cfg.questions_per_scene = 4;
  cfg.instructions_per_scene = 3;
  cfg.seed = 23;
  auto scenes = gen_scenes(cat, cfg);
  auto vqa = gen_vqa(cat, scenes, cfg);
  auto recs = gen_instructions(cat, scenes, cfg);

  write_scenes_jsonl("tmp_scenes.jsonl", scenes, cat);
  auto scenes2 = read_scenes_jsonl("tmp_scenes.jsonl", cat);
  CHECK(scenes_digest(scenes2, cat) == scenes_digest(scenes, cat));

  write_vqa_jsonl("tmp_vqa.jsonl", vqa, cat);
  auto vqa2 = read_vqa_jsonl("tmp_vqa.jsonl", cat);
  REQUIRE(vqa2.size() == vqa.size());
  for (size_t i = 0; i < vqa.size(); ++i) {
    CHECK(vqa2[i].scene_id == vqa[i].scene_id);
    CHECK(vqa2[i].program == vqa[i].program);
    CHECK(vqa2[i].answer == vqa[i].answer);
  }

  write_instructions_jsonl("tmp_instr.jsonl", recs, cat);
  auto recs2 = read_instructions_jsonl("tmp_instr.jsonl", cat);
  REQUIRE(recs2.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs2[i].record_id == recs[i].record_id);
    CHECK(recs2[i].scene_id == recs[i].scene_id);
    CHECK(recs2[i].op == recs[i].op);
    CHECK(recs2[i].hops == recs[i].hops);
    CHECK(recs2[i].text == recs[i].text);
    CHECK(recs2[i].program == recs[i].program);
    CHECK(scene_to_json(recs2[i].target_scene, cat) ==
          scene_to_json(recs[i].target_scene, cat));
  }

  CHECK_THROWS(read_scenes_jsonl("tmp_does_not_exist.jsonl", cat));
  std::remove("tmp_scenes.jsonl");
  std::remove("tmp_vqa.jsonl");
  std::remove("tmp_instr.jsonl");
}

TEST_CASE("placement seeds are distinct per record") {
  CHECK(placement_seed(1, 0) != placement_seed(1, 1));
  CHECK(placement_seed(1, 0) != placement_seed(2, 0));
  CHECK(placement_seed(5, 7) == placement_seed(5, 7));
}
