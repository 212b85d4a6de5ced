#include "sgm/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "sgm/common.hpp"

namespace sgm {

Lexicon Lexicon::clevr_default(const AttributeCatalog& cat) {
  Lexicon lex;
  lex.surfaces.resize(cat.num_concepts());
  for (int c = 0; c < cat.num_concepts(); ++c) lex.surfaces[c] = {cat.concept_name(c)};

  auto alias = [&](const std::string& canonical, const std::string& word) {
    auto id = cat.concept_by_name(canonical);
    require(id.has_value(), "lexicon: unknown concept " + canonical);
    lex.surfaces[*id].push_back(word);
  };
  alias("metal", "metallic");
  alias("metal", "shiny");
  alias("rubber", "matte");
  alias("small", "tiny");
  alias("large", "big");
  alias("cube", "block");
  alias("sphere", "ball");

  for (int c = 0; c < cat.num_concepts(); ++c)
    for (const auto& w : lex.surfaces[c]) {
      require(!lex.concept_of_word.count(w), "lexicon: ambiguous word " + w);
      lex.concept_of_word[w] = c;
    }
  for (int r = 0; r < static_cast<int>(cat.relations.size()); ++r)
    lex.relation_of_word[cat.relations[r]] = r;

  lex.generic_words = {"thing", "object"};
  lex.noise_words = {"the",  "a",      "an",     "that",  "is",    "of",
                     "to",   "in",     "add",    "change", "remove", "every",
                     "thing", "object"};
  return lex;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    std::string clean;
    for (char ch : w)
      if (std::isalnum(static_cast<unsigned char>(ch)))
        clean.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (!clean.empty()) words.push_back(clean);
  }
  return words;
}

ExtractedTokens extract_tokens(const std::string& text, const Lexicon& lex,
                               const AttributeCatalog& cat) {
  ExtractedTokens out;
  auto words = tokenize_words(text);
  int n = static_cast<int>(words.size());
  std::vector<bool> consumed(n, false);

  // add descriptor: leading maximal run of concept words, one per attribute
  if (n > 0 && words[0] == "add") {
    int start = -1;
    for (int i = 1; i < n && start < 0; ++i)
      if (lex.concept_of_word.count(words[i])) start = i;
    if (start >= 0) {
      int end = start;
      while (end < n && lex.concept_of_word.count(words[end])) ++end;
      if (end - start == kNumAttributes) {
        std::array<int, kNumAttributes> set{-1, -1, -1, -1};
        bool ok = true;
        for (int i = start; i < end; ++i) {
          int c = lex.concept_of_word.at(words[i]);
          int a = cat.attribute_of_concept(c);
          if (set[a] >= 0) ok = false;
          set[a] = c;
        }
        if (ok) {
          out.concept_set = set;
          for (int i = start; i < end; ++i) consumed[i] = true;
        }
      }
    }
  }

  // change target: "to" directly followed by a concept word (the last such
  // pair wins; generated texts put the target at the end)
  int target_pos = -1;
  for (int i = 0; i + 1 < n; ++i) {
    if (words[i] != "to" || consumed[i + 1]) continue;
    if (lex.concept_of_word.count(words[i + 1])) target_pos = i + 1;
  }
  if (target_pos >= 0) {
    out.target_concept = TokenRef{lex.concept_of_word.at(words[target_pos]), target_pos};
    consumed[target_pos] = true;
  }

  for (int i = 0; i < n; ++i) {
    if (consumed[i]) continue;
    if (auto it = lex.concept_of_word.find(words[i]); it != lex.concept_of_word.end()) {
      out.concepts.push_back({it->second, i});
      continue;
    }
    if (auto it = lex.relation_of_word.find(words[i]); it != lex.relation_of_word.end()) {
      out.relations.push_back({it->second, i});
      continue;
    }
    if (!lex.noise_words.count(words[i])) out.unknown_words.push_back(words[i]);
  }
  return out;
}

}  // namespace sgm
