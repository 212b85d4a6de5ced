#include "sgm/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace sgm {

const char* op_name(OpTag op) {
  switch (op) {
    case OpTag::Scene: return "Scene";
    case OpTag::InputGraph: return "InputGraph";
    case OpTag::Filter: return "Filter";
    case OpTag::Relate: return "Relate";
    case OpTag::Query: return "Query";
    case OpTag::Exist: return "Exist";
    case OpTag::Change: return "Change";
    case OpTag::Add: return "Add";
    case OpTag::Remove: return "Remove";
  }
  return "?";
}

DslType result_type(const Program& p) {
  switch (p.op) {
    case OpTag::Scene: return DslType::ObjectSet;
    case OpTag::InputGraph: return DslType::Graph;
    case OpTag::Filter: return DslType::ObjectSet;
    case OpTag::Relate: return DslType::ObjectSet;
    case OpTag::Query: return DslType::ObjConcept;
    case OpTag::Exist: return DslType::Bool;
    case OpTag::Change: return DslType::Object;
    case OpTag::Add: return DslType::Graph;
    case OpTag::Remove: return DslType::Graph;
  }
  return DslType::Bool;
}

namespace {

bool objset_like(const Program& p) { return result_type(p) == DslType::ObjectSet; }

bool valid_concept(int c, const AttributeCatalog& cat) {
  return c >= 0 && c < cat.num_concepts();
}

}  // namespace

bool typecheck(const Program& p, const AttributeCatalog& cat) {
  for (const auto& c : p.children)
    if (!typecheck(c, cat)) return false;
  switch (p.op) {
    case OpTag::Scene:
    case OpTag::InputGraph:
      return p.children.empty();
    case OpTag::Filter:
      return p.children.size() == 1 && objset_like(p.children[0]) &&
             valid_concept(p.concept_id, cat);
    case OpTag::Relate:
      return p.children.size() == 2 && objset_like(p.children[0]) &&
             objset_like(p.children[1]) && p.relation >= 0 &&
             p.relation < static_cast<int>(cat.relations.size());
    case OpTag::Query:
      return p.children.size() == 1 && objset_like(p.children[0]) &&
             p.attribute >= 0 && p.attribute < cat.num_attributes();
    case OpTag::Exist:
      return p.children.size() == 1 && objset_like(p.children[0]);
    case OpTag::Change:
      return p.children.size() == 1 && objset_like(p.children[0]) &&
             valid_concept(p.concept_id, cat);
    case OpTag::Remove:
      return p.children.size() == 2 &&
             result_type(p.children[0]) == DslType::Graph &&
             objset_like(p.children[1]);
    case OpTag::Add: {
      if (p.children.size() != 2 || result_type(p.children[0]) != DslType::Graph ||
          !objset_like(p.children[1]))
        return false;
      if (p.relation < 0 || p.relation >= static_cast<int>(cat.relations.size()))
        return false;
      for (int a = 0; a < cat.num_attributes(); ++a) {
        if (!valid_concept(p.concept_set[a], cat)) return false;
        if (cat.attribute_of_concept(p.concept_set[a]) != a) return false;
      }
      return true;
    }
  }
  return false;
}

bool is_manipulation(const Program& p) {
  return p.op == OpTag::Change || p.op == OpTag::Add || p.op == OpTag::Remove;
}

int hop_count(const Program& p) {
  int n = p.op == OpTag::Relate ? 1 : 0;
  if (p.op == OpTag::Add) n += 1;
  for (const auto& c : p.children) n += hop_count(c);
  return n;
}

std::string canonical_serialize(const Program& p, const AttributeCatalog& cat) {
  switch (p.op) {
    case OpTag::Scene:
      return "Scene()";
    case OpTag::InputGraph:
      return "InputGraph()";
    case OpTag::Filter:
      return "Filter(" + canonical_serialize(p.children[0], cat) + "," +
             cat.concept_name(p.concept_id) + ")";
    case OpTag::Relate:
      return "Relate(" + canonical_serialize(p.children[0], cat) + "," +
             cat.relations[p.relation] + "," + canonical_serialize(p.children[1], cat) + ")";
    case OpTag::Query:
      return "Query(" + canonical_serialize(p.children[0], cat) + "," +
             cat.attribute_names[p.attribute] + ")";
    case OpTag::Exist:
      return "Exist(" + canonical_serialize(p.children[0], cat) + ")";
    case OpTag::Change:
      return "Change(" + canonical_serialize(p.children[0], cat) + "," +
             cat.concept_name(p.concept_id) + ")";
    case OpTag::Remove: {
      std::string inner = canonical_serialize(p.children[1], cat);
      if (p.children[0].op == OpTag::InputGraph) return "Remove(" + inner + ")";
      return "Remove(" + canonical_serialize(p.children[0], cat) + "," + inner + ")";
    }
    case OpTag::Add: {
      std::string cs = "{";
      for (int a = 0; a < kNumAttributes; ++a) {
        if (a) cs += ",";
        cs += cat.concept_name(p.concept_set[a]);
      }
      cs += "}";
      std::string head = "Add(";
      if (p.children[0].op != OpTag::InputGraph)
        head += canonical_serialize(p.children[0], cat) + ",";
      return head + cat.relations[p.relation] + "," +
             canonical_serialize(p.children[1], cat) + "," + cs + ")";
    }
  }
  return "";
}

namespace {

/// Strict recursive-descent reader over the canonical grammar.
class ProgramReader {
 public:
  ProgramReader(const std::string& s, const AttributeCatalog& cat) : s_(s), cat_(cat) {}

  std::optional<Program> read() {
    auto p = read_expr();
    if (!p || pos_ != s_.size()) return std::nullopt;
    return p;
  }

 private:
  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::optional<std::string> read_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) return std::nullopt;
    return s_.substr(start, pos_ - start);
  }

  std::optional<Program> read_expr() {
    auto name = read_ident();
    if (!name || !eat('(')) return std::nullopt;
    if (*name == "Scene") {
      if (!eat(')')) return std::nullopt;
      return Program::scene();
    }
    if (*name == "InputGraph") {
      if (!eat(')')) return std::nullopt;
      return Program::input_graph();
    }
    if (*name == "Filter") {
      auto s = read_expr();
      if (!s || !eat(',')) return std::nullopt;
      auto c = read_ident();
      if (!c || !eat(')')) return std::nullopt;
      auto id = cat_.concept_by_name(*c);
      if (!id) return std::nullopt;
      return Program::filter(std::move(*s), *id);
    }
    if (*name == "Relate") {
      auto s = read_expr();
      if (!s || !eat(',')) return std::nullopt;
      auto r = read_ident();
      if (!r || !eat(',')) return std::nullopt;
      auto rel = cat_.relation_by_name(*r);
      if (!rel) return std::nullopt;
      auto obj = read_expr();
      if (!obj || !eat(')')) return std::nullopt;
      return Program::relate(std::move(*s), *rel, std::move(*obj));
    }
    if (*name == "Query") {
      auto obj = read_expr();
      if (!obj || !eat(',')) return std::nullopt;
      auto a = read_ident();
      if (!a || !eat(')')) return std::nullopt;
      auto attr = cat_.attribute_by_name(*a);
      if (!attr) return std::nullopt;
      return Program::query(std::move(*obj), *attr);
    }
    if (*name == "Exist") {
      auto s = read_expr();
      if (!s || !eat(')')) return std::nullopt;
      return Program::exist(std::move(*s));
    }
    if (*name == "Change") {
      auto obj = read_expr();
      if (!obj || !eat(',')) return std::nullopt;
      auto c = read_ident();
      if (!c || !eat(')')) return std::nullopt;
      auto id = cat_.concept_by_name(*c);
      if (!id) return std::nullopt;
      return Program::change(std::move(*obj), *id);
    }
    if (*name == "Remove") {
      auto first = read_expr();
      if (!first) return std::nullopt;
      if (eat(')'))
        return Program::remove(Program::input_graph(), std::move(*first));
      if (!eat(',')) return std::nullopt;
      auto second = read_expr();
      if (!second || !eat(')')) return std::nullopt;
      return Program::remove(std::move(*first), std::move(*second));
    }
    if (*name == "Add") {
      Program graph = Program::input_graph();
      size_t mark = pos_;
      if (auto g = read_expr(); g && g->op == OpTag::InputGraph && eat(',')) {
        graph = std::move(*g);
      } else {
        pos_ = mark;
      }
      auto r = read_ident();
      if (!r || !eat(',')) return std::nullopt;
      auto rel = cat_.relation_by_name(*r);
      if (!rel) return std::nullopt;
      auto obj = read_expr();
      if (!obj || !eat(',') || !eat('{')) return std::nullopt;
      std::array<int, kNumAttributes> cs{-1, -1, -1, -1};
      for (int a = 0; a < kNumAttributes; ++a) {
        if (a && !eat(',')) return std::nullopt;
        auto c = read_ident();
        if (!c) return std::nullopt;
        auto id = cat_.concept_by_name(*c);
        if (!id || cat_.attribute_of_concept(*id) != a) return std::nullopt;
        cs[a] = *id;
      }
      if (!eat('}') || !eat(')')) return std::nullopt;
      return Program::add(std::move(graph), *rel, std::move(*obj), cs);
    }
    return std::nullopt;
  }

  const std::string& s_;
  const AttributeCatalog& cat_;
  size_t pos_ = 0;
};

}  // namespace

std::optional<Program> parse_program(const std::string& text, const AttributeCatalog& cat) {
  auto p = ProgramReader(text, cat).read();
  if (p && !typecheck(*p, cat)) return std::nullopt;
  return p;
}

std::vector<ProgramTemplate> template_library() {
  std::vector<ProgramTemplate> out;
  for (int h = 0; h <= 3; ++h) out.push_back({OpTag::Change, h});
  for (int h = 1; h <= 3; ++h) out.push_back({OpTag::Add, h});
  for (int h = 0; h <= 3; ++h) out.push_back({OpTag::Remove, h});
  return out;
}

Program build_filter_chain(Program base, std::vector<int> concepts,
                           const AttributeCatalog& cat) {
  std::sort(concepts.begin(), concepts.end(), [&](int a, int b) {
    return cat.attribute_of_concept(a) < cat.attribute_of_concept(b);
  });
  Program p = std::move(base);
  for (int c : concepts) p = Program::filter(std::move(p), c);
  return p;
}

namespace {

constexpr int kMaxGroupSize = 4;

bool group_ok(const std::vector<TokenRef>& concepts, int lo, int hi,
              const AttributeCatalog& cat) {
  if (hi - lo > kMaxGroupSize) return false;
  bool used[kNumAttributes] = {false, false, false, false};
  for (int i = lo; i < hi; ++i) {
    int a = cat.attribute_of_concept(concepts[i].id);
    if (used[a]) return false;
    used[a] = true;
  }
  return true;
}

std::vector<int> group_ids(const std::vector<TokenRef>& concepts, int lo, int hi) {
  std::vector<int> ids;
  ids.reserve(hi - lo);
  for (int i = lo; i < hi; ++i) ids.push_back(concepts[i].id);
  return ids;
}

/// Reasoning chain over groups g0..gLast with the given relations:
///   chain(k) = filters(g_k)(Relate(Scene(), rel_k, chain(k+1)))
Program build_reasoning(const ExtractedTokens& toks, const AttributeCatalog& cat,
                        const std::vector<int>& bounds, int first_relation) {
  int groups = static_cast<int>(bounds.size()) + 1;
  std::function<Program(int)> build = [&](int k) -> Program {
    int lo = k == 0 ? 0 : bounds[k - 1];
    int hi = k == groups - 1 ? static_cast<int>(toks.concepts.size()) : bounds[k];
    Program base;
    if (k == groups - 1) {
      base = Program::scene();
    } else {
      base = Program::relate(Program::scene(), toks.relations[first_relation + k].id,
                             build(k + 1));
    }
    return build_filter_chain(std::move(base), group_ids(toks.concepts, lo, hi), cat);
  };
  return build(0);
}

void enumerate_segmentations(int m, int groups, const ExtractedTokens& toks,
                             const AttributeCatalog& cat,
                             const std::function<void(const std::vector<int>&)>& emit) {
  std::vector<int> bounds(groups - 1, 0);
  std::function<void(int, int)> rec = [&](int g, int lo) {
    if (g == groups - 1) {
      // validate every group
      int prev = 0;
      for (int k = 0; k < groups; ++k) {
        int hi = k == groups - 1 ? m : bounds[k];
        if (!group_ok(toks.concepts, prev, hi, cat)) return;
        prev = hi;
      }
      emit(bounds);
      return;
    }
    for (int b = lo; b <= m; ++b) {
      bounds[g] = b;
      rec(g + 1, b);
    }
  };
  if (groups == 1) {
    if (group_ok(toks.concepts, 0, m, cat)) emit(bounds);
  } else {
    rec(0, 0);
  }
}

}  // namespace

CandidateSet enumerate_candidates_detailed(const ExtractedTokens& tokens,
                                           const AttributeCatalog& cat,
                                           const std::vector<ProgramTemplate>& templates) {
  CandidateSet out;
  int m = static_cast<int>(tokens.concepts.size());
  int rels = static_cast<int>(tokens.relations.size());
  for (const auto& tpl : templates) {
    if (tpl.hops != rels) continue;
    if (tpl.op == OpTag::Change && (!tokens.target_concept || tokens.concept_set)) continue;
    if (tpl.op == OpTag::Add && (!tokens.concept_set || tokens.target_concept)) continue;
    if (tpl.op == OpTag::Remove && (tokens.target_concept || tokens.concept_set)) continue;
    // Add consumes its first relation itself; the reasoning chain gets the rest.
    int reasoning_groups = tpl.op == OpTag::Add ? tpl.hops : tpl.hops + 1;
    int first_relation = tpl.op == OpTag::Add ? 1 : 0;
    enumerate_segmentations(m, reasoning_groups, tokens, cat,
                            [&](const std::vector<int>& bounds) {
      Program reasoning = build_reasoning(tokens, cat, bounds, first_relation);
      Program p;
      switch (tpl.op) {
        case OpTag::Change:
          p = Program::change(std::move(reasoning), tokens.target_concept->id);
          break;
        case OpTag::Add:
          p = Program::add(Program::input_graph(), tokens.relations[0].id,
                           std::move(reasoning), *tokens.concept_set);
          break;
        default:
          p = Program::remove(Program::input_graph(), std::move(reasoning));
          break;
      }
      out.programs.push_back(std::move(p));
      out.boundaries.push_back(bounds);
    });
  }
  return out;
}

std::vector<Program> enumerate_candidates(const ExtractedTokens& tokens,
                                          const AttributeCatalog& cat,
                                          const std::vector<ProgramTemplate>& templates) {
  return enumerate_candidates_detailed(tokens, cat, templates).programs;
}

}  // namespace sgm
