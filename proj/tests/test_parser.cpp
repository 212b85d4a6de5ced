#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sgm/datagen.hpp"
#include "sgm/executor.hpp"
#include "sgm/parser.hpp"
#include "sgm/rng.hpp"

using namespace sgm;

namespace {

using DTape = ad::TapeT<double>;

int cid(const AttributeCatalog& cat, const std::string& name) {
  auto c = cat.concept_by_name(name);
  REQUIRE(c.has_value());
  return *c;
}

double eval_record_loss(ad::ParamStoreT<double>& store, const RecordEncoding& rec) {
  DTape tape;
  auto loss = record_loss_var(tape, store, rec);
  return tape.val(loss).data[0];
}

struct Corpus {
  AttributeCatalog cat = AttributeCatalog::clevr();
  Lexicon lex = Lexicon::clevr_default(cat);
  std::vector<SymbolicScene> scenes;
  std::vector<InstructionRecord> records;
  std::map<int, SymbolicView> views;

  explicit Corpus(int num_scenes, uint64_t seed) {
    DatasetConfig cfg;
    cfg.num_scenes = num_scenes;
    cfg.instructions_per_scene = 3;
    cfg.seed = seed;
    scenes = gen_scenes(cat, cfg);
    records = gen_instructions(cat, scenes, cfg);
    for (int sid = 0; sid < num_scenes; ++sid)
      views.emplace(sid, SymbolicView::from_scene(scenes[sid]));
  }

  std::vector<InstructionText> texts(int lo, int hi) const {
    std::vector<InstructionText> out;
    for (int i = lo; i < hi && i < static_cast<int>(records.size()); ++i)
      out.push_back({records[i].scene_id, records[i].hops, records[i].text});
    return out;
  }
};

}  // namespace

TEST_CASE("vocabulary covers every lexicon surface with an unknown fallback") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  auto vocab = ParserVocab::from_lexicon(lex);
  CHECK(vocab.words[0] == "<unk>");
  CHECK(vocab.id("red") != vocab.unk);
  CHECK(vocab.id("metallic") != vocab.unk);
  CHECK(vocab.id("left") != vocab.unk);
  CHECK(vocab.id("the") != vocab.unk);
  CHECK(vocab.id("zzz") == vocab.unk);
  CHECK(vocab.id("red") != vocab.id("blue"));
}

TEST_CASE("program token stream is a deterministic pre-order traversal") {
  auto cat = AttributeCatalog::clevr();
  CHECK(num_program_tokens(cat) == 32);
  auto p = parse_program("Change(Filter(Scene(),red),blue)", cat);
  REQUIRE(p.has_value());
  auto toks = program_tokens(*p, cat);
  // Change, blue, Filter, red, Scene with concepts offset by the 9 ops
  std::vector<int> expect = {static_cast<int>(OpTag::Change), 9 + cid(cat, "blue"),
                             static_cast<int>(OpTag::Filter), 9 + cid(cat, "red"),
                             static_cast<int>(OpTag::Scene)};
  CHECK(toks == expect);

  auto q = parse_program("Add(right,Filter(Scene(),large),{blue,sphere,small,metal})", cat);
  REQUIRE(q.has_value());
  auto qt = program_tokens(*q, cat);
  REQUIRE(static_cast<int>(qt.size()) == 10);
  CHECK(qt[0] == static_cast<int>(OpTag::Add));
  CHECK(qt[1] == 9 + 15 + kRelRight);
  CHECK(qt[2] == 9 + cid(cat, "blue"));
  CHECK(qt[5] == 9 + cid(cat, "metal"));
  CHECK(qt[6] == static_cast<int>(OpTag::InputGraph));
}

TEST_CASE("alignment features reward relation-word-aligned segmentations") {
  auto cat = AttributeCatalog::clevr();
  ExtractedTokens toks;
  toks.concepts = {{cid(cat, "red"), 2}, {cid(cat, "cube"), 3},
                   {cid(cat, "blue"), 7}, {cid(cat, "sphere"), 8}};
  toks.relations = {{kRelLeft, 5}};

  auto gold = alignment_features(toks, {2}, 2);
  CHECK(gold[0] == doctest::Approx(1.0));
  CHECK(gold[1] == doctest::Approx(1.0));
  CHECK(gold[2] == doctest::Approx(0.0));
  CHECK(gold[3] == doctest::Approx(0.5));

  auto off = alignment_features(toks, {1}, 2);
  CHECK(off[0] == doctest::Approx(0.75));  // "cube" lands right of "left"
  CHECK(off[1] == doctest::Approx(0.0));   // split before the relation word
  CHECK(off[3] == doctest::Approx(0.75));

  // one group consuming everything, as an add-candidate chain would
  auto flat = alignment_features(toks, {}, 1);
  CHECK(flat[0] == doctest::Approx(0.5));  // red/cube precede the relation
  CHECK(flat[1] == doctest::Approx(1.0));
  CHECK(flat[2] == doctest::Approx(0.0));
  CHECK(flat[3] == doctest::Approx(1.0));

  // an empty group dodging a misaligned boundary still loses on feature 0
  ExtractedTokens deep;
  deep.concepts = {{cid(cat, "red"), 2}, {cid(cat, "cube"), 12}};
  deep.relations = {{kRelLeft, 5}, {kRelBehind, 9}};
  auto gold3 = alignment_features(deep, {1, 1}, 3);   // [red | empty | cube]
  CHECK(gold3[0] == doctest::Approx(1.0));
  CHECK(gold3[2] == doctest::Approx(0.25));
  auto shift = alignment_features(deep, {1, 2}, 3);   // [red | cube | empty]
  CHECK(shift[0] == doctest::Approx(0.5));
}

TEST_CASE("rewards take exactly the two configured values") {
  Corpus corpus(20, 41);
  const double pos_set[] = {7.0, 8.0, 10.0};
  const double neg_set[] = {0.0, 2.0, 3.0};
  int selecting = 0, not_selecting = 0;
  ParserModel model(corpus.cat, corpus.lex);
  for (const auto& r : corpus.records) {
    auto enc = model.encode_record(r.text, &corpus.views.at(r.scene_id), 8.0, 2.0);
    REQUIRE(!enc.rewards.empty());
    bool gold_found = false;
    for (size_t i = 0; i < enc.programs.size(); ++i) {
      CHECK((enc.rewards[i] == 8.0 || enc.rewards[i] == 2.0));
      (enc.rewards[i] == 8.0 ? selecting : not_selecting)++;
      if (enc.programs[i] == r.program) {
        gold_found = true;
        CHECK(enc.rewards[i] == 8.0);  // gold always selects on the true view
      }
    }
    CHECK(gold_found);
    for (double pos : pos_set)
      for (double neg : neg_set) {
        double rw = candidate_reward(r.program, corpus.views.at(r.scene_id), pos, neg);
        CHECK(rw == pos);
        (void)rw;
      }
  }
  CHECK(selecting > 0);
  CHECK(not_selecting > 0);  // some segmentations must fail to select
}

TEST_CASE("constant rewards produce an exactly zero gradient for every pair") {
  Corpus corpus(6, 43);
  ParserModel model(corpus.cat, corpus.lex);
  model.init_params(5);
  auto dstore = ad::store_cast<double>(model.store());

  const InstructionRecord* pick = nullptr;
  for (const auto& r : corpus.records)
    if (r.hops >= 1) pick = &r;
  REQUIRE(pick != nullptr);
  auto rec = model.encode_record(pick->text, &corpus.views.at(pick->scene_id), 8.0, 2.0);
  REQUIRE(rec.cands.size() >= 1);

  const double pos_set[] = {7.0, 8.0, 10.0};
  const double neg_set[] = {0.0, 2.0, 3.0};
  for (double pos : pos_set)
    for (double neg : neg_set) {
      (void)neg;
      for (auto& r : rec.rewards) r = pos;  // constant across candidates
      DTape tape;
      auto loss = record_loss_var(tape, dstore, rec);
      CHECK(tape.val(loss).data[0] == doctest::Approx(0.0).epsilon(1e-15));
      tape.backward(loss);
    }
  for (const auto& [name, entry] : dstore) {
    (void)name;
    for (double g : entry.grad.data) CHECK(g == 0.0);
  }
}

TEST_CASE("exact policy gradient matches central finite differences") {
  Corpus corpus(12, 47);
  ParserModel model(corpus.cat, corpus.lex);

  // a record whose candidates disagree on reward, so the gradient is nonzero
  const InstructionRecord* pick = nullptr;
  RecordEncoding rec;
  for (const auto& r : corpus.records) {
    auto enc = ParserModel(corpus.cat, corpus.lex)
                   .encode_record(r.text, &corpus.views.at(r.scene_id), 8.0, 2.0);
    auto [lo, hi] = std::minmax_element(enc.rewards.begin(), enc.rewards.end());
    if (enc.cands.size() >= 3 && *lo != *hi) {
      pick = &r;
      rec = std::move(enc);
      break;
    }
  }
  REQUIRE(pick != nullptr);

  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    model.store() = ad::ParamStore();
    model.init_params(seed);
    auto dstore = ad::store_cast<double>(model.store());

    DTape tape;
    auto loss = record_loss_var(tape, dstore, rec);
    tape.backward(loss);

    auto probe = [&](const std::string& name, int idx) {
      auto& entry = dstore.at(name);
      REQUIRE(idx < entry.value.size());
      double h = 1e-6;
      double keep = entry.value.data[idx];
      entry.value.data[idx] = keep + h;
      double up = eval_record_loss(dstore, rec);
      entry.value.data[idx] = keep - h;
      double dn = eval_record_loss(dstore, rec);
      entry.value.data[idx] = keep;
      double fd = (up - dn) / (2 * h);
      double an = entry.grad.data[idx];
      double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      CHECK(std::abs(fd - an) / denom < 1e-6);
    };

    for (int i = 0; i < kNumAlignFeatures; ++i) probe("parser.feat_w", i);
    for (int i = 0; i < static_cast<int>(template_library().size()); ++i)
      probe("parser.tpl_bias", i);
    for (int i : {0, 100, 8000}) probe("parser.enc.W", i);
    for (int i : {0, 64, 127}) probe("parser.enc.b", i);
    probe("parser.word." + std::to_string(rec.word_ids[0]), 7);
    probe("parser.tok." + std::to_string(rec.cands[0].tokens[0]), 31);
    probe("parser.pos.0", 50);
  }
}

TEST_CASE("parsing is deterministic and fails cleanly without candidates") {
  auto cat = AttributeCatalog::clevr();
  auto lex = Lexicon::clevr_default(cat);
  ParserModel model(cat, lex);
  model.init_params(9);

  CHECK(!parse_instruction(model, "").ok);
  // a concept set with no relation matches no template
  CHECK(!parse_instruction(model, "add a small red rubber cube").ok);

  auto a = parse_instruction(model, "remove the red cube");
  REQUIRE(a.ok);
  CHECK(a.program.op == OpTag::Remove);
  CHECK(canonical_serialize(a.program, cat) ==
        canonical_serialize(parse_instruction(model, "remove the red cube").program, cat));

  auto bare = parse_instruction(model, "remove the thing");
  REQUIRE(bare.ok);
  CHECK(canonical_serialize(bare.program, cat) == "Remove(Scene())");
}

TEST_CASE("reinforce training lifts selection accuracy on held-out instructions") {
  Corpus corpus(40, 53);
  ParserModel model(corpus.cat, corpus.lex);
  model.init_params(21);

  auto train = corpus.texts(0, 90);
  auto val = corpus.texts(90, 120);

  auto before = selection_accuracy(model, val, corpus.views);
  int recount_hits = 0;
  for (const auto& r : val) {
    auto parsed = parse_instruction(model, r.text);
    if (parsed.ok && reasoning_selects(parsed.program, corpus.views.at(r.scene_id)))
      ++recount_hits;
  }
  CHECK(before.selection_accuracy ==
        doctest::Approx(static_cast<double>(recount_hits) / val.size()));

  ParserTrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch = 32;
  cfg.eval_every = 5;
  cfg.seed = 2;
  auto after = train_parser(model, train, val, corpus.views, cfg, "tmp_parser_log.csv");
  MESSAGE("selection before=", before.selection_accuracy,
          " after=", after.selection_accuracy, " seconds=", after.train_seconds);
  CHECK(after.selection_accuracy >= before.selection_accuracy);
  CHECK(after.selection_accuracy > 0.9);
  CHECK(after.skipped_records == 0);
  int bucket_total = 0;
  for (int h = 0; h < 4; ++h) bucket_total += after.hop_counts[h];
  CHECK(bucket_total == static_cast<int>(val.size()));

  std::ifstream log("tmp_parser_log.csv");
  REQUIRE(log.good());
  int lines = 0;
  std::string line;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == cfg.epochs + 1);
  std::remove("tmp_parser_log.csv");
}

TEST_CASE("zero-candidate training records are skipped and counted") {
  Corpus corpus(4, 59);
  ParserModel model(corpus.cat, corpus.lex);
  model.init_params(3);
  std::vector<InstructionText> train = corpus.texts(0, 6);
  train.push_back({0, 1, "add a small red rubber cube"});
  ParserTrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 4;
  auto m = train_parser(model, train, corpus.texts(6, 9), corpus.views, cfg, "");
  CHECK(m.skipped_records == 1);
}
