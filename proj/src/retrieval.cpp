#include "sgm/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "sgm/common.hpp"

namespace sgm {

CostMatrix CostMatrix::zeros(int n) {
  require(n >= 0, "CostMatrix: negative size");
  CostMatrix m;
  m.n = n;
  m.data.assign(static_cast<size_t>(n) * n, 0.0f);
  return m;
}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
  int n = static_cast<int>(rows.size());
  CostMatrix m = zeros(n);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(rows[i].size()) == n, "CostMatrix: non-square input");
    for (int j = 0; j < n; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

Assignment hungarian(const CostMatrix& m) {
  int n = m.n;
  require(static_cast<int>(m.data.size()) == n * n, "hungarian: malformed matrix");
  for (float c : m.data) require(std::isfinite(c), "hungarian: non-finite cost");
  Assignment out;
  out.perm.assign(n, -1);
  if (n == 0) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials over rows/columns with a 0 sentinel; p[j] is the row matched to
  // column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = static_cast<double>(m.at(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) out.perm[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.cost += static_cast<double>(m.at(i, out.perm[i]));
  return out;
}

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  double denom = std::sqrt(na) * std::sqrt(nb);
  return dot / std::max(denom, 1e-12);
}

}  // namespace

double ged(const SceneGraph& a, const SceneGraph& b) {
  if (a.num_nodes() != b.num_nodes()) return kGedInfinity;
  int n = a.num_nodes();
  if (n == 0) return 0.0;
  CostMatrix m = CostMatrix::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m.at(i, j) = static_cast<float>(-cosine(a.nodes[i].embedding, b.nodes[j].embedding));
  return hungarian(m).cost;
}

namespace {

std::vector<RankedResult> sort_ranked(std::vector<RankedResult> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const RankedResult& x, const RankedResult& y) { return x.score < y.score; });
  return scores;
}

}  // namespace

std::vector<RankedResult> rank_corpus_serial(const SceneGraph& query,
                                             const std::vector<SceneGraph>& corpus) {
  require(!corpus.empty(), "rank_corpus: empty corpus");
  std::vector<RankedResult> scores(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i)
    scores[i] = {static_cast<int>(i), ged(query, corpus[i])};
  return sort_ranked(std::move(scores));
}

std::vector<RankedResult> rank_corpus(const SceneGraph& query,
                                      const std::vector<SceneGraph>& corpus) {
  require(!corpus.empty(), "rank_corpus: empty corpus");
  std::vector<RankedResult> scores(corpus.size());
  int count = static_cast<int>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) scores[i] = {i, ged(query, corpus[i])};
  return sort_ranked(std::move(scores));
}

std::vector<int> retrieve(const SceneGraph& query, const std::vector<SceneGraph>& corpus,
                          int k) {
  require(k >= 1, "retrieve: k must be positive");
  auto ranked = rank_corpus(query, corpus);
  int take = std::min<int>(k, static_cast<int>(ranked.size()));
  std::vector<int> out(take);
  for (int i = 0; i < take; ++i) out[i] = ranked[i].index;
  return out;
}

double recall_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& gold,
                   int k) {
  require(rankings.size() == gold.size(), "recall_at_k: rankings/gold size mismatch");
  require(k >= 1, "recall_at_k: k must be positive");
  if (rankings.empty()) return 0.0;
  int hits = 0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    int take = std::min<int>(k, static_cast<int>(rankings[q].size()));
    for (int i = 0; i < take; ++i)
      if (rankings[q][i] == gold[q]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

}  // namespace sgm
