#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgm/dsl.hpp"
#include "sgm/executor.hpp"
#include "sgm/lexicon.hpp"
#include "sgm/param_store.hpp"
#include "sgm/rng.hpp"
#include "sgm/scenegraph.hpp"
#include "sgm/tape.hpp"

namespace sgm {

constexpr int kWordDim = 64;
constexpr int kEncDim = 128;
constexpr int kMaxProgramTokens = 48;
constexpr int kNumAlignFeatures = 4;

/// Fixed word list: every lexicon surface plus an unknown slot.
struct ParserVocab {
  std::vector<std::string> words;
  std::map<std::string, int> id_of;
  int unk = 0;

  static ParserVocab from_lexicon(const Lexicon& lex);
  int id(const std::string& w) const {
    auto it = id_of.find(w);
    return it == id_of.end() ? unk : it->second;
  }
};

/// Pre-order program token ids over ops, concepts, relations and attributes.
std::vector<int> program_tokens(const Program& p, const AttributeCatalog& cat);
int num_program_tokens(const AttributeCatalog& cat);

/// Segmentation-alignment features for one candidate:
///  0: fraction of concept words lying inside their group's text window
///     (between the group's flanking relation words); 1 when vacuous
///  1: fraction of non-empty group boundaries with a relation word strictly
///     between the adjacent concept words; 1 when vacuous
///  2: empty group count / 4
///  3: largest group size / 4
std::array<double, kNumAlignFeatures> alignment_features(const ExtractedTokens& tokens,
                                                         const std::vector<int>& bounds,
                                                         int reasoning_groups);

/// Host-side encoding of one instruction: everything the scoring tape needs.
struct CandidateFeatures {
  std::vector<int> tokens;  // program token ids
  std::array<double, kNumAlignFeatures> feats{};
  int template_idx = 0;
};

struct RecordEncoding {
  std::vector<int> word_ids;
  std::vector<Program> programs;
  std::vector<CandidateFeatures> cands;
  std::vector<double> rewards;
  int hops = 0;
  int scene_id = 0;
};

/// reasoning_selects decides between the two configured reward levels.
double candidate_reward(const Program& p, const SymbolicView& view, double pos, double neg);

class ParserModel {
 public:
  ParserModel(const AttributeCatalog& cat, const Lexicon& lex);

  void init_params(uint64_t seed);
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }
  const ParserVocab& vocab() const { return vocab_; }
  const AttributeCatalog& catalog() const { return *cat_; }
  const Lexicon& lexicon() const { return *lex_; }

  /// Tokens, features, template index and reward per enumerated candidate.
  /// With a null view the reward vector stays empty (scoring-only use).
  RecordEncoding encode_record(const std::string& text, const SymbolicView* view,
                               double pos_reward, double neg_reward) const;

 private:
  const AttributeCatalog* cat_;
  const Lexicon* lex_;
  ParserVocab vocab_;
  ad::ParamStore store_;
};

// ---------------------------------------------------------------------------
// Scoring on tape (templated so gradient checks run in double).

template <typename T>
typename ad::TapeT<T>::Var encode_text_var(ad::TapeT<T>& tape, ad::ParamStoreT<T>& store,
                                           const std::vector<int>& word_ids) {
  using Var = typename ad::TapeT<T>::Var;
  require(!word_ids.empty(), "parser: empty instruction");
  Var mean;
  for (size_t i = 0; i < word_ids.size(); ++i) {
    Var w = tape.param(store.at("parser.word." + std::to_string(word_ids[i])));
    mean = i == 0 ? w : tape.add(mean, w);
  }
  mean = tape.scale(mean, static_cast<T>(1.0 / static_cast<double>(word_ids.size())));
  return tape.add(tape.matvec(tape.param(store.at("parser.enc.W")), mean),
                  tape.param(store.at("parser.enc.b")));
}

template <typename T>
typename ad::TapeT<T>::Var candidate_score_var(ad::TapeT<T>& tape, ad::ParamStoreT<T>& store,
                                               typename ad::TapeT<T>::Var text_enc,
                                               const CandidateFeatures& cand) {
  using Var = typename ad::TapeT<T>::Var;
  require(static_cast<int>(cand.tokens.size()) <= kMaxProgramTokens,
          "parser: program token stream too long");
  Var emb;
  for (size_t k = 0; k < cand.tokens.size(); ++k) {
    Var tok = tape.param(store.at("parser.tok." + std::to_string(cand.tokens[k])));
    Var pos = tape.param(store.at("parser.pos." + std::to_string(k)));
    Var term = tape.mul(tok, pos);
    emb = k == 0 ? term : tape.add(emb, term);
  }
  Var score = tape.dot(text_enc, emb);
  auto f = ad::TensorT<T>::vec(kNumAlignFeatures);
  for (int i = 0; i < kNumAlignFeatures; ++i) f.data[i] = static_cast<T>(cand.feats[i]);
  score = tape.add(score, tape.dot(tape.param(store.at("parser.feat_w")),
                                   tape.constant(std::move(f))));
  return tape.add(score,
                  tape.select(tape.param(store.at("parser.tpl_bias")), cand.template_idx));
}

/// Candidate scores for one instruction, in enumeration order.
template <typename T>
std::vector<typename ad::TapeT<T>::Var> record_score_vars(ad::TapeT<T>& tape,
                                                          ad::ParamStoreT<T>& store,
                                                          const RecordEncoding& rec) {
  auto u = encode_text_var(tape, store, rec.word_ids);
  std::vector<typename ad::TapeT<T>::Var> scores;
  scores.reserve(rec.cands.size());
  for (const auto& c : rec.cands) scores.push_back(candidate_score_var(tape, store, u, c));
  return scores;
}

/// Exact expected-reward objective over the enumerated candidates:
/// loss = -sum_P pi_P (R_P - b), b = mean reward. Its gradient equals the
/// full REINFORCE sum without sampling; a constant reward vector yields an
/// exactly zero gradient.
template <typename T>
typename ad::TapeT<T>::Var record_loss_var(ad::TapeT<T>& tape, ad::ParamStoreT<T>& store,
                                           const RecordEncoding& rec) {
  require(!rec.cands.empty(), "parser: loss over zero candidates");
  auto scores = record_score_vars(tape, store, rec);
  auto pi = tape.softmax(tape.pack(scores));
  double b = 0.0;
  for (double r : rec.rewards) b += r;
  b /= static_cast<double>(rec.rewards.size());
  auto adv = ad::TensorT<T>::vec(static_cast<int>(rec.rewards.size()));
  for (int i = 0; i < adv.size(); ++i) adv.data[i] = static_cast<T>(rec.rewards[i] - b);
  return tape.scale(tape.dot(pi, tape.constant(std::move(adv))), T(-1));
}

// ---------------------------------------------------------------------------
// Training and evaluation.

struct ParserTrainConfig {
  int epochs = 12;
  int batch = 32;
  double pos_reward = 8.0;
  double neg_reward = 2.0;
  int eval_every = 5;
  ad::AdamWConfig opt;
  uint64_t seed = 0;
};

struct ParserMetrics {
  double selection_accuracy = 0.0;
  std::array<double, 4> by_hops{};       // hops 0..3
  std::array<int, 4> hop_counts{};
  int skipped_records = 0;               // zero-candidate instructions
  double train_seconds = 0.0;
};

struct ParseOutcome {
  bool ok = false;
  Program program;
  int candidate_index = -1;
};

/// Argmax of the candidate policy; ties resolve to the lowest index. Scores
/// run forward-only but bind parameters mutably, hence the non-const model.
ParseOutcome parse_instruction(ParserModel& model, const std::string& text);

struct InstructionText {
  int scene_id = 0;
  int hops = 0;
  std::string text;
};

/// Fraction of records whose parsed program's reasoning selects the required
/// number of objects on the record's quantized view.
ParserMetrics selection_accuracy(ParserModel& model,
                                 const std::vector<InstructionText>& records,
                                 const std::map<int, SymbolicView>& views);

ParserMetrics train_parser(ParserModel& model, const std::vector<InstructionText>& train,
                           const std::vector<InstructionText>& val,
                           const std::map<int, SymbolicView>& views,
                           const ParserTrainConfig& cfg, const std::string& log_path = "");

}  // namespace sgm
