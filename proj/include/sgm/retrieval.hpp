#pragma once

#include <limits>
#include <vector>

#include "sgm/scenegraph.hpp"

namespace sgm {

/// Square assignment-cost matrix, row-major.
struct CostMatrix {
  int n = 0;
  std::vector<float> data;

  static CostMatrix zeros(int n);
  /// Errors on ragged or non-square input.
  static CostMatrix from_rows(const std::vector<std::vector<float>>& rows);

  float at(int i, int j) const { return data[i * n + j]; }
  float& at(int i, int j) { return data[i * n + j]; }
};

struct Assignment {
  std::vector<int> perm;  // row i matched to column perm[i]
  double cost = 0.0;
};

/// Minimum-total-cost perfect matching, O(n^3) shortest-augmenting-path form.
/// Entries must be finite.
Assignment hungarian(const CostMatrix& m);

inline constexpr double kGedInfinity = std::numeric_limits<double>::infinity();

/// Node-matching graph distance: +inf when the node counts differ, otherwise
/// the optimal assignment total over cost(i, j) = -cos(a_i, b_j). Edges do
/// not participate.
double ged(const SceneGraph& a, const SceneGraph& b);

struct RankedResult {
  int index = 0;      // corpus position
  double score = 0.0; // ged(query, corpus[index])
};

/// Whole-corpus scores sorted by ascending distance; ties (including
/// unmatchable +inf entries) keep corpus order. Serial reference.
std::vector<RankedResult> rank_corpus_serial(const SceneGraph& query,
                                             const std::vector<SceneGraph>& corpus);

/// Same output as the serial form; candidate scoring runs in parallel.
std::vector<RankedResult> rank_corpus(const SceneGraph& query,
                                      const std::vector<SceneGraph>& corpus);

/// Top-k corpus positions (k clamped to the corpus size). Empty corpus errors.
std::vector<int> retrieve(const SceneGraph& query, const std::vector<SceneGraph>& corpus,
                          int k);

/// Fraction of queries whose gold corpus position appears in the first k
/// entries of its ranking.
double recall_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& gold,
                   int k);

}  // namespace sgm
