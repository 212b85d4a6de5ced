#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sgm/scenegraph.hpp"

namespace sgm {

enum class DslType { ObjConcept, Attribute, RelConcept, Object, ObjectSet, ConceptSet, Graph, Bool };

enum class OpTag { Scene, InputGraph, Filter, Relate, Query, Exist, Change, Add, Remove };

const char* op_name(OpTag op);

/// Typed program AST. Signatures:
///   Scene() -> ObjSet                  Filter(ObjSet, ObjConcept) -> ObjSet
///   Relate(ObjSet, RelConcept, Obj) -> ObjSet
///   Query(Obj, Attribute) -> ObjConcept    Exist(ObjSet) -> Bool
///   Change(Obj, ObjConcept) -> Obj
///   Add(Graph, RelConcept, Obj, ConceptSet) -> Graph
///   Remove(Graph, ObjSet) -> Graph
/// Object slots accept ObjectSet subtrees; uniqueness is checked at run time.
struct Program {
  OpTag op = OpTag::Scene;
  std::vector<Program> children;
  int concept_id = -1;                                   // Filter / Change
  int attribute = -1;                                 // Query
  int relation = -1;                                  // Relate / Add
  std::array<int, kNumAttributes> concept_set{-1, -1, -1, -1};  // Add

  bool operator==(const Program&) const = default;

  static Program scene() { return Program{}; }
  static Program input_graph() {
    Program p;
    p.op = OpTag::InputGraph;
    return p;
  }
  static Program filter(Program s, int concept_id) {
    Program p;
    p.op = OpTag::Filter;
    p.children.push_back(std::move(s));
    p.concept_id = concept_id;
    return p;
  }
  static Program relate(Program s, int relation, Program obj) {
    Program p;
    p.op = OpTag::Relate;
    p.children.push_back(std::move(s));
    p.children.push_back(std::move(obj));
    p.relation = relation;
    return p;
  }
  static Program query(Program obj, int attribute) {
    Program p;
    p.op = OpTag::Query;
    p.children.push_back(std::move(obj));
    p.attribute = attribute;
    return p;
  }
  static Program exist(Program s) {
    Program p;
    p.op = OpTag::Exist;
    p.children.push_back(std::move(s));
    return p;
  }
  static Program change(Program obj, int concept_id) {
    Program p;
    p.op = OpTag::Change;
    p.children.push_back(std::move(obj));
    p.concept_id = concept_id;
    return p;
  }
  static Program remove(Program graph, Program s) {
    Program p;
    p.op = OpTag::Remove;
    p.children.push_back(std::move(graph));
    p.children.push_back(std::move(s));
    return p;
  }
  static Program add(Program graph, int relation, Program obj,
                     std::array<int, kNumAttributes> cs) {
    Program p;
    p.op = OpTag::Add;
    p.children.push_back(std::move(graph));
    p.children.push_back(std::move(obj));
    p.relation = relation;
    p.concept_set = cs;
    return p;
  }
};

DslType result_type(const Program& p);
bool typecheck(const Program& p, const AttributeCatalog& cat);

bool is_manipulation(const Program& p);

/// Instruction-level hop count: number of Relate nodes, plus one for the Add
/// operator's own relation.
int hop_count(const Program& p);

/// Canonical text form, e.g. Remove(Filter(Scene(),cube)). The implicit
/// InputGraph argument of Add/Remove is omitted. ConceptSet prints as
/// {color,shape,size,material}-ordered names. No whitespace.
std::string canonical_serialize(const Program& p, const AttributeCatalog& cat);

/// Strict inverse of canonical_serialize; nullopt on any malformed input.
std::optional<Program> parse_program(const std::string& text, const AttributeCatalog& cat);

/// Token extracted from an instruction text, with its word position recorded
/// so candidate scoring can use textual alignment.
struct TokenRef {
  int id = -1;
  int pos = -1;
};

struct ExtractedTokens {
  std::vector<TokenRef> concepts;   // reasoning-chain concepts, text order
  std::vector<TokenRef> relations;  // text order
  std::optional<std::array<int, kNumAttributes>> concept_set;  // add descriptor
  std::optional<TokenRef> target_concept;                      // change "to <value>"
  std::vector<std::string> unknown_words;
};

struct ProgramTemplate {
  OpTag op = OpTag::Remove;  // Change, Add or Remove
  int hops = 0;              // instruction-level hops (Add: >= 1)
};

/// Change hops 0-3, Add hops 1-3, Remove hops 0-3, in that order.
std::vector<ProgramTemplate> template_library();

/// Builds a filter chain over `base` from a concept group, nesting in
/// canonical attribute order (innermost = lowest attribute index).
Program build_filter_chain(Program base, std::vector<int> concepts,
                           const AttributeCatalog& cat);

/// All well-typed instantiations of the templates that consume every
/// extracted token exactly once. A template matches only if its operation's
/// required tokens are present (Change: target_concept, Add: concept_set,
/// Remove: neither) and its hop count equals the number of extracted
/// relations. Concepts are assigned by order-preserving contiguous
/// segmentation into one group per hop segment (at most one concept per
/// attribute per group, chains in canonical attribute order); relations are
/// consumed in text order. Output order: template library order, then
/// segmentation boundaries lexicographically.
std::vector<Program> enumerate_candidates(const ExtractedTokens& tokens,
                                          const AttributeCatalog& cat,
                                          const std::vector<ProgramTemplate>& templates);

/// Same enumeration, with each candidate's segmentation boundaries kept for
/// alignment scoring: boundaries[k] splits the concept sequence before index
/// boundaries[k][g] for group g+1.
struct CandidateSet {
  std::vector<Program> programs;
  std::vector<std::vector<int>> boundaries;
};
CandidateSet enumerate_candidates_detailed(const ExtractedTokens& tokens,
                                           const AttributeCatalog& cat,
                                           const std::vector<ProgramTemplate>& templates);

}  // namespace sgm
