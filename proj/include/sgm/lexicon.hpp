#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sgm/dsl.hpp"
#include "sgm/scenegraph.hpp"

namespace sgm {

/// Surface vocabulary: concept words (with synonyms), relation words, and
/// words carrying no token. "thing"/"object" deliberately map to nothing, so
/// a shapeless descriptor contributes no shape concept.
struct Lexicon {
  std::map<std::string, int> concept_of_word;
  std::map<std::string, int> relation_of_word;
  std::vector<std::vector<std::string>> surfaces;  // per concept id, canonical first
  std::vector<std::string> generic_words;          // thing / object
  std::set<std::string> noise_words;

  static Lexicon clevr_default(const AttributeCatalog& cat);
};

/// Lowercase whitespace tokenization.
std::vector<std::string> tokenize_words(const std::string& text);

/// Extracts instruction tokens with word positions:
///  - an "add" instruction's leading run of concept words becomes the
///    concept set (only when it covers all four attributes exactly once);
///  - "to" immediately followed by a concept word marks the change target;
///  - every other concept word joins the reasoning chain in text order;
///  - relation words are collected in text order;
///  - words outside the vocabulary are recorded, never fatal.
ExtractedTokens extract_tokens(const std::string& text, const Lexicon& lex,
                               const AttributeCatalog& cat);

}  // namespace sgm
