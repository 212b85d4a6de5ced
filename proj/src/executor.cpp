#include "sgm/executor.hpp"

#include <algorithm>
#include <cmath>

namespace sgm {

SymbolicView SymbolicView::from_scene(const SymbolicScene& s) {
  SymbolicView v;
  int n = static_cast<int>(s.objects.size());
  for (const auto& o : s.objects) {
    v.ids.push_back(o.id);
    v.attrs.push_back(o.concepts);
  }
  v.rel.resize(static_cast<size_t>(n) * (n > 0 ? n - 1 : 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) v.rel[v.slot(i, j)] = derive_relation(s.objects[i], s.objects[j]);
  return v;
}

SymbolicView SymbolicView::from_quantized(const SceneGraph& g, const ConceptSpace& cs) {
  SymbolicView v;
  int n = g.num_nodes();
  for (const auto& node : g.nodes) {
    v.ids.push_back(node.id);
    v.attrs.push_back(cs.quantize(node.embedding));
  }
  v.rel.resize(static_cast<size_t>(n) * (n > 0 ? n - 1 : 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) v.rel[v.slot(i, j)] = cs.quantize_relation(g.edge(i, j));
  return v;
}

const char* exec_status_name(ExecStatus s) {
  switch (s) {
    case ExecStatus::Ok: return "ok";
    case ExecStatus::NonUniqueReferent: return "non_unique_referent";
    case ExecStatus::PlacementFailed: return "placement_failed";
    case ExecStatus::MissingPlacementRng: return "missing_placement_rng";
  }
  return "?";
}

namespace {

ExecResult error(ExecStatus s) {
  ExecResult r;
  r.status = s;
  return r;
}

ExecResult objset_result(std::vector<int> positions) {
  ExecResult r;
  r.value.kind = ExecValue::Kind::ObjectSet;
  r.value.objset = std::move(positions);
  return r;
}

/// Referent coercion: an ObjectSet flows into an Object slot only when it has
/// exactly one member.
bool unique_position(const ExecResult& r, int* out) {
  if (r.value.kind == ExecValue::Kind::Object) {
    *out = r.value.object;
    return true;
  }
  if (r.value.kind == ExecValue::Kind::ObjectSet && r.value.objset.size() == 1) {
    *out = r.value.objset[0];
    return true;
  }
  return false;
}

}  // namespace

ExecResult exec_reasoning(const Program& p, const SymbolicView& view) {
  switch (p.op) {
    case OpTag::Scene: {
      std::vector<int> all(view.n());
      for (int i = 0; i < view.n(); ++i) all[i] = i;
      return objset_result(std::move(all));
    }
    case OpTag::Filter: {
      auto in = exec_reasoning(p.children[0], view);
      if (!in.ok()) return in;
      std::vector<int> out;
      for (int i : in.value.objset) {
        for (int a = 0; a < kNumAttributes; ++a) {
          if (view.attrs[i][a] == p.concept_id) {
            out.push_back(i);
            break;
          }
        }
      }
      return objset_result(std::move(out));
    }
    case OpTag::Relate: {
      auto in = exec_reasoning(p.children[0], view);
      if (!in.ok()) return in;
      auto ref = exec_reasoning(p.children[1], view);
      if (!ref.ok()) return ref;
      int x = -1;
      if (!unique_position(ref, &x)) return error(ExecStatus::NonUniqueReferent);
      std::vector<int> out;
      for (int y : in.value.objset)
        if (y != x && view.has_relation(x, y, p.relation)) out.push_back(y);
      return objset_result(std::move(out));
    }
    case OpTag::Query: {
      auto in = exec_reasoning(p.children[0], view);
      if (!in.ok()) return in;
      int x = -1;
      if (!unique_position(in, &x)) return error(ExecStatus::NonUniqueReferent);
      ExecResult r;
      r.value.kind = ExecValue::Kind::Concept;
      r.value.concept_id = view.attrs[x][p.attribute];
      return r;
    }
    case OpTag::Exist: {
      auto in = exec_reasoning(p.children[0], view);
      if (!in.ok()) return in;
      ExecResult r;
      r.value.kind = ExecValue::Kind::Bool;
      r.value.boolean = !in.value.objset.empty();
      return r;
    }
    default:
      fail("exec_reasoning: unexpected operator " + std::string(op_name(p.op)));
  }
}

namespace {

/// Samples a position for an added object: the relation's axis constraint
/// against the reference plus pairwise separation from every existing object.
bool sample_position(const SymbolicScene& scene, const SymbolicObject& ref, int relation,
                     const ExecOptions& opts, double* out_x, double* out_y) {
  for (int t = 0; t < opts.max_placement_tries; ++t) {
    double x = opts.placement_rng->uniform();
    double y = opts.placement_rng->uniform();
    if (relation == kRelLeft && !(x < ref.x)) continue;
    if (relation == kRelRight && !(x > ref.x)) continue;
    if (relation == kRelFront && !(y > ref.y)) continue;
    if (relation == kRelBehind && !(y < ref.y)) continue;
    bool ok = true;
    for (const auto& o : scene.objects) {
      if (std::abs(o.x - x) < opts.separation || std::abs(o.y - y) < opts.separation) {
        ok = false;
        break;
      }
    }
    if (ok) {
      *out_x = x;
      *out_y = y;
      return true;
    }
  }
  return false;
}

}  // namespace

ExecResult exec_symbolic(const Program& p, const SymbolicScene& scene,
                         const AttributeCatalog& cat, const SymbolicView* view,
                         ExecOptions opts) {
  SymbolicView derived;
  if (!view) {
    derived = SymbolicView::from_scene(scene);
    view = &derived;
  }
  switch (p.op) {
    case OpTag::InputGraph: {
      ExecResult r;
      r.value.kind = ExecValue::Kind::Graph;
      r.value.graph = scene;
      return r;
    }
    case OpTag::Change: {
      auto in = exec_reasoning(p.children[0], *view);
      if (!in.ok()) return in;
      int x = -1;
      if (!unique_position(in, &x)) return error(ExecStatus::NonUniqueReferent);
      ExecResult r;
      r.value.kind = ExecValue::Kind::Graph;
      r.value.object = x;
      r.value.graph = scene;
      r.value.graph.objects[x].concepts[cat.attribute_of_concept(p.concept_id)] = p.concept_id;
      return r;
    }
    case OpTag::Remove: {
      auto base = exec_symbolic(p.children[0], scene, cat, view, opts);
      if (!base.ok()) return base;
      require(base.value.kind == ExecValue::Kind::Graph, "Remove: graph argument expected");
      // The common case leaves the input untouched before removal; a
      // transformed intermediate graph needs its own view.
      const SymbolicScene& cur = base.value.graph;
      SymbolicView cur_view;
      const SymbolicView* vp = view;
      if (p.children[0].op != OpTag::InputGraph) {
        cur_view = SymbolicView::from_scene(cur);
        vp = &cur_view;
      }
      auto sel = exec_reasoning(p.children[1], *vp);
      if (!sel.ok()) return sel;
      require(sel.value.kind == ExecValue::Kind::ObjectSet, "Remove: object set expected");
      ExecResult r;
      r.value.kind = ExecValue::Kind::Graph;
      r.value.objset = sel.value.objset;
      std::vector<bool> drop(cur.objects.size(), false);
      for (int pos : sel.value.objset) drop[pos] = true;
      for (size_t i = 0; i < cur.objects.size(); ++i)
        if (!drop[i]) r.value.graph.objects.push_back(cur.objects[i]);
      return r;
    }
    case OpTag::Add: {
      auto base = exec_symbolic(p.children[0], scene, cat, view, opts);
      if (!base.ok()) return base;
      require(base.value.kind == ExecValue::Kind::Graph, "Add: graph argument expected");
      const SymbolicScene& cur = base.value.graph;
      SymbolicView cur_view;
      const SymbolicView* vp = view;
      if (p.children[0].op != OpTag::InputGraph) {
        cur_view = SymbolicView::from_scene(cur);
        vp = &cur_view;
      }
      auto ref = exec_reasoning(p.children[1], *vp);
      if (!ref.ok()) return ref;
      int x = -1;
      if (!unique_position(ref, &x)) return error(ExecStatus::NonUniqueReferent);
      if (!opts.placement_rng) return error(ExecStatus::MissingPlacementRng);
      SymbolicObject added;
      added.id = 0;
      for (const auto& o : cur.objects) added.id = std::max(added.id, o.id + 1);
      added.concepts = p.concept_set;
      if (!sample_position(cur, cur.objects[x], p.relation, opts, &added.x, &added.y))
        return error(ExecStatus::PlacementFailed);
      ExecResult r;
      r.value.kind = ExecValue::Kind::Graph;
      r.value.object = x;
      r.value.graph = cur;
      r.value.graph.objects.push_back(added);
      return r;
    }
    default:
      return exec_reasoning(p, *view);
  }
}

const Program& reasoning_subtree(const Program& manip) {
  switch (manip.op) {
    case OpTag::Change: return manip.children[0];
    case OpTag::Remove: return manip.children[1];
    case OpTag::Add: return manip.children[1];
    default: fail("reasoning_subtree: not a manipulation program");
  }
}

bool reasoning_selects(const Program& manip, const SymbolicView& view) {
  auto r = exec_reasoning(reasoning_subtree(manip), view);
  if (!r.ok()) return false;
  size_t n = r.value.kind == ExecValue::Kind::Object ? 1 : r.value.objset.size();
  return manip.op == OpTag::Remove ? n >= 1 : n == 1;
}

}  // namespace sgm
