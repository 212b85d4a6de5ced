#include "sgm/parser.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

namespace sgm {

ParserVocab ParserVocab::from_lexicon(const Lexicon& lex) {
  ParserVocab v;
  std::set<std::string> all;
  for (const auto& forms : lex.surfaces)
    for (const auto& w : forms) all.insert(w);
  for (const auto& [w, r] : lex.relation_of_word) {
    (void)r;
    all.insert(w);
  }
  for (const auto& w : lex.generic_words) all.insert(w);
  for (const auto& w : lex.noise_words) all.insert(w);
  v.words.push_back("<unk>");
  v.unk = 0;
  for (const auto& w : all) v.words.push_back(w);
  for (int i = 0; i < static_cast<int>(v.words.size()); ++i) v.id_of[v.words[i]] = i;
  return v;
}

int num_program_tokens(const AttributeCatalog& cat) {
  return 9 + cat.num_concepts() + static_cast<int>(cat.relations.size()) +
         cat.num_attributes();
}

namespace {

void collect_tokens(const Program& p, const AttributeCatalog& cat, std::vector<int>& out) {
  const int base_concept = 9;
  const int base_rel = base_concept + cat.num_concepts();
  const int base_attr = base_rel + static_cast<int>(cat.relations.size());
  out.push_back(static_cast<int>(p.op));
  switch (p.op) {
    case OpTag::Filter:
    case OpTag::Change:
      out.push_back(base_concept + p.concept_id);
      break;
    case OpTag::Relate:
      out.push_back(base_rel + p.relation);
      break;
    case OpTag::Query:
      out.push_back(base_attr + p.attribute);
      break;
    case OpTag::Add:
      out.push_back(base_rel + p.relation);
      for (int a = 0; a < kNumAttributes; ++a) out.push_back(base_concept + p.concept_set[a]);
      break;
    default:
      break;
  }
  for (const auto& c : p.children) collect_tokens(c, cat, out);
}

bool relation_word_between(const ExtractedTokens& tokens, int lo_pos, int hi_pos) {
  for (const auto& r : tokens.relations)
    if (r.pos > lo_pos && r.pos < hi_pos) return true;
  return false;
}

int template_index(const Program& p, const std::vector<ProgramTemplate>& lib) {
  int hops = hop_count(p);
  for (int i = 0; i < static_cast<int>(lib.size()); ++i)
    if (lib[i].op == p.op && lib[i].hops == hops) return i;
  fail("parser: candidate outside the template library");
}

}  // namespace

std::vector<int> program_tokens(const Program& p, const AttributeCatalog& cat) {
  std::vector<int> out;
  collect_tokens(p, cat, out);
  require(static_cast<int>(out.size()) <= kMaxProgramTokens,
          "parser: program token stream too long");
  return out;
}

std::array<double, kNumAlignFeatures> alignment_features(const ExtractedTokens& tokens,
                                                         const std::vector<int>& bounds,
                                                         int reasoning_groups) {
  int m = static_cast<int>(tokens.concepts.size());
  int rels = static_cast<int>(tokens.relations.size());
  // chain relations start after any op-consumed leading relation
  int fr = rels + 1 - reasoning_groups;
  std::array<double, kNumAlignFeatures> f{};
  int good = 0, boundaries = 0, good_boundaries = 0, max_group = 0, empty_groups = 0;
  int prev = 0;
  std::vector<std::pair<int, int>> ranges;
  for (int k = 0; k < reasoning_groups; ++k) {
    int hi = k == reasoning_groups - 1 ? m : bounds[k];
    ranges.emplace_back(prev, hi);
    max_group = std::max(max_group, hi - prev);
    if (prev == hi) ++empty_groups;
    // group k's words sit between its flanking relation words in the text
    int lo_pos = k + fr - 1 >= 0 && k + fr - 1 < rels ? tokens.relations[k + fr - 1].pos : -1;
    int hi_pos = k + fr < rels ? tokens.relations[k + fr].pos : 1 << 30;
    for (int i = prev; i < hi; ++i)
      if (tokens.concepts[i].pos > lo_pos && tokens.concepts[i].pos < hi_pos) ++good;
    prev = hi;
  }
  for (int k = 0; k + 1 < reasoning_groups; ++k) {
    auto [llo, lhi] = ranges[k];
    auto [rlo, rhi] = ranges[k + 1];
    if (llo == lhi || rlo == rhi) continue;  // empty group: no boundary words
    ++boundaries;
    if (relation_word_between(tokens, tokens.concepts[lhi - 1].pos,
                              tokens.concepts[rlo].pos))
      ++good_boundaries;
  }
  f[0] = m == 0 ? 1.0 : static_cast<double>(good) / m;
  f[1] = boundaries == 0 ? 1.0 : static_cast<double>(good_boundaries) / boundaries;
  f[2] = empty_groups / 4.0;
  f[3] = max_group / 4.0;
  return f;
}

double candidate_reward(const Program& p, const SymbolicView& view, double pos, double neg) {
  return reasoning_selects(p, view) ? pos : neg;
}

ParserModel::ParserModel(const AttributeCatalog& cat, const Lexicon& lex)
    : cat_(&cat), lex_(&lex), vocab_(ParserVocab::from_lexicon(lex)) {}

void ParserModel::init_params(uint64_t seed) {
  Rng rng(seed);
  auto normal_vec = [&](int n, double s) {
    auto t = ad::TensorT<float>::vec(n);
    for (auto& x : t.data) x = static_cast<float>(s * rng.normal());
    return t;
  };
  for (int i = 0; i < static_cast<int>(vocab_.words.size()); ++i)
    store_.create("parser.word." + std::to_string(i), normal_vec(kWordDim, 0.1));
  auto w = ad::TensorT<float>::mat(kEncDim, kWordDim);
  double s = 1.0 / std::sqrt(static_cast<double>(kWordDim));
  for (auto& x : w.data) x = static_cast<float>(s * rng.normal());
  store_.create("parser.enc.W", std::move(w));
  store_.create("parser.enc.b", ad::TensorT<float>::vec(kEncDim));
  for (int i = 0; i < num_program_tokens(*cat_); ++i)
    store_.create("parser.tok." + std::to_string(i), normal_vec(kEncDim, 0.1));
  for (int k = 0; k < kMaxProgramTokens; ++k)
    store_.create("parser.pos." + std::to_string(k), normal_vec(kEncDim, 0.1));
  // alignment prior: segmentations whose groups respect relation-word
  // boundaries start ahead, the embedding pathway refines from there
  auto fw = ad::TensorT<float>::vec(kNumAlignFeatures);
  fw.data[0] = 8.0f;
  fw.data[1] = 4.0f;
  store_.create("parser.feat_w", std::move(fw));
  store_.create("parser.tpl_bias",
                ad::TensorT<float>::vec(static_cast<int>(template_library().size())));
}

RecordEncoding ParserModel::encode_record(const std::string& text, const SymbolicView* view,
                                          double pos_reward, double neg_reward) const {
  RecordEncoding rec;
  for (const auto& w : tokenize_words(text)) rec.word_ids.push_back(vocab_.id(w));
  auto ext = extract_tokens(text, *lex_, *cat_);
  auto lib = template_library();
  auto cs = enumerate_candidates_detailed(ext, *cat_, lib);
  rec.programs = std::move(cs.programs);
  for (int i = 0; i < static_cast<int>(rec.programs.size()); ++i) {
    CandidateFeatures c;
    c.tokens = program_tokens(rec.programs[i], *cat_);
    c.feats = alignment_features(ext, cs.boundaries[i],
                                 static_cast<int>(cs.boundaries[i].size()) + 1);
    c.template_idx = template_index(rec.programs[i], lib);
    rec.cands.push_back(std::move(c));
    if (view)
      rec.rewards.push_back(candidate_reward(rec.programs[i], *view, pos_reward, neg_reward));
  }
  return rec;
}

ParseOutcome parse_instruction(ParserModel& model, const std::string& text) {
  ParseOutcome out;
  auto rec = model.encode_record(text, nullptr, 0.0, 0.0);
  if (rec.cands.empty() || rec.word_ids.empty()) return out;
  ad::TapeT<float> tape;
  auto scores = record_score_vars(tape, model.store(), rec);
  std::vector<double> vals;
  vals.reserve(scores.size());
  for (auto v : scores) vals.push_back(tape.val(v).data[0]);
  out.ok = true;
  out.candidate_index = argmaxd(vals);
  out.program = rec.programs[out.candidate_index];
  return out;
}

ParserMetrics selection_accuracy(ParserModel& model,
                                 const std::vector<InstructionText>& records,
                                 const std::map<int, SymbolicView>& views) {
  ParserMetrics m;
  std::array<int, 4> hits{};
  for (const auto& r : records) {
    require(r.hops >= 0 && r.hops < 4, "selection_accuracy: hops out of range");
    m.hop_counts[r.hops]++;
    auto parsed = parse_instruction(model, r.text);
    if (!parsed.ok) {
      m.skipped_records++;
      continue;
    }
    auto it = views.find(r.scene_id);
    require(it != views.end(), "selection_accuracy: missing scene view");
    if (reasoning_selects(parsed.program, it->second)) hits[r.hops]++;
  }
  int total = 0, hit = 0;
  for (int h = 0; h < 4; ++h) {
    m.by_hops[h] = m.hop_counts[h] > 0
                       ? static_cast<double>(hits[h]) / m.hop_counts[h]
                       : 0.0;
    total += m.hop_counts[h];
    hit += hits[h];
  }
  m.selection_accuracy = total > 0 ? static_cast<double>(hit) / total : 0.0;
  return m;
}

ParserMetrics train_parser(ParserModel& model, const std::vector<InstructionText>& train,
                           const std::vector<InstructionText>& val,
                           const std::map<int, SymbolicView>& views,
                           const ParserTrainConfig& cfg, const std::string& log_path) {
  auto t0 = std::chrono::steady_clock::now();

  // Rewards depend only on the quantized scene, never on the policy, so each
  // record is encoded exactly once.
  std::vector<RecordEncoding> encs;
  int skipped = 0;
  for (const auto& r : train) {
    auto it = views.find(r.scene_id);
    require(it != views.end(), "train_parser: missing scene view");
    auto rec = model.encode_record(r.text, &it->second, cfg.pos_reward, cfg.neg_reward);
    if (rec.cands.empty() || rec.word_ids.empty()) {
      ++skipped;
      continue;
    }
    rec.hops = r.hops;
    rec.scene_id = r.scene_id;
    encs.push_back(std::move(rec));
  }

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    require(log.good(), "train_parser: cannot write " + log_path);
    log << "epoch,train_loss,val_selection\n";
  }

  ParserMetrics metrics;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(Rng::derive(cfg.seed, "parser_epoch", epoch));
    std::vector<int> order(encs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);

    double epoch_loss = 0.0;
    for (int start = 0; start < static_cast<int>(order.size()); start += cfg.batch) {
      int end = std::min(start + cfg.batch, static_cast<int>(order.size()));
      for (int b = start; b < end; ++b) {
        const auto& rec = encs[order[b]];
        auto [lo, hi] =
            std::minmax_element(rec.rewards.begin(), rec.rewards.end());
        if (*lo == *hi) continue;  // constant reward: exactly zero gradient
        ad::TapeT<float> tape;
        auto loss = record_loss_var(tape, model.store(), rec);
        epoch_loss += tape.val(loss).data[0];
        tape.backward(tape.scale(loss, 1.0f / static_cast<float>(end - start)));
      }
      model.store().adamw_step(cfg.opt);
    }

    bool eval_now = (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs;
    double mean_loss = encs.empty() ? 0.0 : epoch_loss / static_cast<double>(encs.size());
    if (eval_now) {
      metrics = selection_accuracy(model, val, views);
      if (log.is_open())
        log << epoch << "," << mean_loss << "," << metrics.selection_accuracy << "\n";
    } else if (log.is_open()) {
      log << epoch << "," << mean_loss << ",\n";
    }
  }
  metrics.skipped_records = skipped;
  metrics.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

}  // namespace sgm
