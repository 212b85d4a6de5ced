#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgm/concepts.hpp"
#include "sgm/dsl.hpp"
#include "sgm/rng.hpp"
#include "sgm/scenegraph.hpp"

namespace sgm {

/// Symbolic facts the executor reasons over: one concept per attribute per
/// node and one relation per axis per ordered pair. Built either from ground
/// truth or from quantized embeddings; the executor cannot tell the difference.
struct SymbolicView {
  std::vector<int> ids;                             // node ids, graph order
  std::vector<std::array<int, kNumAttributes>> attrs;
  std::vector<std::pair<int, int>> rel;             // slot (i,j): relations of j w.r.t. i

  int n() const { return static_cast<int>(ids.size()); }
  int slot(int i, int j) const { return i * (n() - 1) + (j < i ? j : j - 1); }
  bool has_relation(int i, int j, int r) const {
    const auto& p = rel[slot(i, j)];
    return p.first == r || p.second == r;
  }

  static SymbolicView from_scene(const SymbolicScene& s);
  static SymbolicView from_quantized(const SceneGraph& g, const ConceptSpace& cs);
};

enum class ExecStatus { Ok, NonUniqueReferent, PlacementFailed, MissingPlacementRng };

const char* exec_status_name(ExecStatus s);

struct ExecValue {
  enum class Kind { ObjectSet, Object, Concept, Bool, Graph };
  Kind kind = Kind::ObjectSet;
  std::vector<int> objset;  // node positions, ascending
  int object = -1;          // node position
  int concept_id = -1;
  bool boolean = false;
  SymbolicScene graph;      // manipulation result
};

struct ExecResult {
  ExecStatus status = ExecStatus::Ok;
  ExecValue value;
  bool ok() const { return status == ExecStatus::Ok; }
};

struct ExecOptions {
  Rng* placement_rng = nullptr;  // required for Add
  double separation = 0.02;
  int max_placement_tries = 1000;
};

/// Set-semantics evaluation of a reasoning subtree (Scene/Filter/Relate/
/// Query/Exist). Referent errors are values, never exceptions.
ExecResult exec_reasoning(const Program& p, const SymbolicView& view);

/// Full symbolic execution including manipulation structure. Manipulation
/// results carry the edited symbolic scene; Add samples a position consistent
/// with its relation (placement_rng required). When `view` is null it is
/// derived from the scene's ground truth.
ExecResult exec_symbolic(const Program& p, const SymbolicScene& scene,
                         const AttributeCatalog& cat, const SymbolicView* view = nullptr,
                         ExecOptions opts = {});

/// The reasoning subtree of a manipulation program (Change/Add: the referent
/// argument; Remove: the object-set argument).
const Program& reasoning_subtree(const Program& manip);

/// True iff the reasoning subtree selects a target: exactly one object for
/// Change and for Add's reference; at least one object for Remove.
bool reasoning_selects(const Program& manip, const SymbolicView& view);

// ---------------------------------------------------------------------------
// Differentiable execution (VQA ops only).

template <typename T>
struct SoftValue {
  enum class Kind { ObjectSet, Concept, Bool };
  Kind kind = Kind::ObjectSet;
  typename ad::TapeT<T>::Var mask;  // ObjectSet: per-node membership in [0,1]
  typename ad::TapeT<T>::Var dist;  // Concept: distribution over an attribute's values
  typename ad::TapeT<T>::Var prob;  // Bool: probability
  int attribute = -1;               // Concept: which attribute the dist ranges over
};

/// Per-scene soft execution context. Attribute and relation distributions are
/// computed once per node/edge and shared across questions on the same tape.
template <typename T>
class SoftExecContext {
 public:
  using Var = typename ad::TapeT<T>::Var;

  SoftExecContext(ad::TapeT<T>& tape, const SceneGraph& g, const ConceptTapeRefs<T>& refs,
                  const AttributeCatalog& cat)
      : tape_(&tape), g_(&g), refs_(refs), cat_(&cat),
        node_vars_(g.num_nodes()), attr_dist_(g.num_nodes()),
        edge_axis_(static_cast<size_t>(g.num_nodes()) *
                   (g.num_nodes() > 0 ? g.num_nodes() - 1 : 0)) {}

  ad::TapeT<T>& tape() { return *tape_; }
  const SceneGraph& graph() const { return *g_; }
  const AttributeCatalog& cat() const { return *cat_; }

  Var node_var(int i) {
    if (!node_vars_[i].ok()) {
      const auto& emb = g_->nodes[i].embedding;
      ad::TensorT<T> t = ad::TensorT<T>::vec(static_cast<int>(emb.size()));
      for (int k = 0; k < t.size(); ++k) t.data[k] = static_cast<T>(emb[k]);
      node_vars_[i] = tape_->constant(std::move(t));
    }
    return node_vars_[i];
  }

  Var attr_dist(int i, int attr) {
    auto& slot = attr_dist_[i][attr];
    if (!slot.ok())
      slot = attr_distribution_var(*tape_, refs_, *cat_, node_var(i), attr);
    return slot;
  }

  /// p(h_r(e_{i,j}) = r): relation r of node j relative to node i.
  Var relation_prob(int i, int j, int r) {
    auto& axes = edge_axis_[g_->edge_slot(i, j)];
    if (!axes.first.ok()) {
      const auto& e = g_->edge(i, j);
      ad::TensorT<T> t = ad::TensorT<T>::vec(static_cast<int>(e.size()));
      for (int k = 0; k < t.size(); ++k) t.data[k] = static_cast<T>(e[k]);
      axes = relation_axis_vars(*tape_, refs_, tape_->constant(std::move(t)));
    }
    if (r == kRelLeft) return tape_->select(axes.first, 0);
    if (r == kRelRight) return tape_->select(axes.first, 1);
    if (r == kRelFront) return tape_->select(axes.second, 0);
    return tape_->select(axes.second, 1);
  }

 private:
  ad::TapeT<T>* tape_;
  const SceneGraph* g_;
  ConceptTapeRefs<T> refs_;
  const AttributeCatalog* cat_;
  std::vector<Var> node_vars_;
  std::vector<std::array<Var, kNumAttributes>> attr_dist_;
  std::vector<std::pair<Var, Var>> edge_axis_;
};

/// Soft semantics: Filter multiplies the mask by concept probabilities;
/// Relate transports mask mass through relation probabilities of the
/// attention-normalized referent; Exist is the mask maximum; Query is the
/// attention-weighted mixture of concept distributions.
template <typename T>
SoftValue<T> exec_differentiable(const Program& p, SoftExecContext<T>& ctx) {
  using Var = typename ad::TapeT<T>::Var;
  auto& tape = ctx.tape();
  int n = ctx.graph().num_nodes();
  switch (p.op) {
    case OpTag::Scene: {
      SoftValue<T> v;
      v.kind = SoftValue<T>::Kind::ObjectSet;
      v.mask = tape.constant(ad::TensorT<T>::vec(n, T(1)));
      return v;
    }
    case OpTag::Filter: {
      auto in = exec_differentiable(p.children[0], ctx);
      int attr = ctx.cat().attribute_of_concept(p.concept_id);
      int vidx = ctx.cat().value_index_of_concept(p.concept_id);
      std::vector<Var> probs;
      probs.reserve(n);
      for (int i = 0; i < n; ++i) probs.push_back(tape.select(ctx.attr_dist(i, attr), vidx));
      SoftValue<T> v;
      v.kind = SoftValue<T>::Kind::ObjectSet;
      v.mask = tape.mul(in.mask, tape.pack(probs));
      return v;
    }
    case OpTag::Relate: {
      auto in = exec_differentiable(p.children[0], ctx);
      auto ref = exec_differentiable(p.children[1], ctx);
      auto attn = tape.normalize_sum(ref.mask);
      std::vector<Var> transported;
      transported.reserve(n);
      for (int j = 0; j < n; ++j) {
        std::vector<Var> col;
        col.reserve(n);
        for (int i = 0; i < n; ++i) {
          if (i == j)
            col.push_back(tape.scalar(T(0)));
          else
            col.push_back(ctx.relation_prob(i, j, p.relation));
        }
        transported.push_back(tape.dot(attn, tape.pack(col)));
      }
      SoftValue<T> v;
      v.kind = SoftValue<T>::Kind::ObjectSet;
      v.mask = tape.mul(in.mask, tape.pack(transported));
      return v;
    }
    case OpTag::Exist: {
      auto in = exec_differentiable(p.children[0], ctx);
      SoftValue<T> v;
      v.kind = SoftValue<T>::Kind::Bool;
      v.prob = tape.vmax(in.mask);
      return v;
    }
    case OpTag::Query: {
      auto in = exec_differentiable(p.children[0], ctx);
      auto attn = tape.normalize_sum(in.mask);
      Var mix;
      for (int i = 0; i < n; ++i) {
        Var term = tape.scale_by(ctx.attr_dist(i, p.attribute), tape.select(attn, i));
        mix = i == 0 ? term : tape.add(mix, term);
      }
      SoftValue<T> v;
      v.kind = SoftValue<T>::Kind::Concept;
      v.dist = mix;
      v.attribute = p.attribute;
      return v;
    }
    default:
      fail("exec_differentiable: manipulation ops are not differentiable-executable");
  }
}

}  // namespace sgm
