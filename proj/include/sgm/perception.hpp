#pragma once

#include <cstdint>

#include "sgm/param_store.hpp"
#include "sgm/rng.hpp"
#include "sgm/scenegraph.hpp"

namespace sgm {

struct Dims {
  int d_obj = 256;
  int d_attr = 64;
  int d_edge = 256;
};

/// Simulated perception. Object embeddings are a frozen random linear map of
/// [one-hot concepts; x; y] plus Gaussian noise; edge embeddings project the
/// concatenated endpoint embeddings through a second frozen random map. Both
/// maps are fixed once per experiment seed, so embeddings are derived data and
/// never serialized with scenes.
class Perception {
 public:
  Perception(const AttributeCatalog& cat, Dims dims, double sigma, uint64_t seed);

  int sym_dim() const { return cat_->num_concepts() + 2; }
  const Dims& dims() const { return dims_; }
  double sigma() const { return sigma_; }

  std::vector<float> embed_object(const SymbolicObject& o, Rng& noise) const;
  std::vector<float> project_edge(const std::vector<float>& oi,
                                  const std::vector<float>& oj) const;
  SceneGraph perceive(const SymbolicScene& s, uint64_t noise_seed) const;

  /// Frozen maps are stored in checkpoints under "percep.*" so persisted runs
  /// are self-contained.
  void export_params(ad::ParamStore& store) const;
  static Perception from_params(const AttributeCatalog& cat, Dims dims, double sigma,
                                const ad::ParamStore& store);

 private:
  Perception(const AttributeCatalog& cat, Dims dims, double sigma);

  const AttributeCatalog* cat_;
  Dims dims_;
  double sigma_;
  ad::Tensor w_;          // d_obj x sym_dim
  ad::Tensor edge_proj_;  // d_edge x 2*d_obj
};

}  // namespace sgm
