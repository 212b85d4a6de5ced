// Times corpus ranking with the serial reference against the OpenMP kernel
// and verifies both produce identical rankings.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "sgm/datagen.hpp"
#include "sgm/perception.hpp"
#include "sgm/retrieval.hpp"
#include "sgm/rng.hpp"

using namespace sgm;
using clock_type = std::chrono::steady_clock;

static double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

int main(int argc, char** argv) {
  int corpus_size = argc > 1 ? std::atoi(argv[1]) : 400;
  int num_queries = argc > 2 ? std::atoi(argv[2]) : 20;

  auto cat = AttributeCatalog::clevr();
  DatasetConfig cfg;
  cfg.num_scenes = corpus_size + num_queries;
  cfg.questions_per_scene = 1;
  cfg.seed = 17;
  auto scenes = gen_scenes(cat, cfg);
  Perception percep(cat, Dims{}, 0.05, 5);
  std::vector<SceneGraph> graphs;
  for (int sid = 0; sid < cfg.num_scenes; ++sid)
    graphs.push_back(percep.perceive(scenes[sid], Rng::derive(cfg.seed, "noise", sid)));

  std::vector<SceneGraph> corpus(graphs.begin(), graphs.begin() + corpus_size);
  std::vector<SceneGraph> queries(graphs.begin() + corpus_size, graphs.end());

  std::printf("corpus=%d queries=%d\n", corpus_size, num_queries);

  auto t0 = clock_type::now();
  std::vector<std::vector<RankedResult>> serial;
  for (const auto& q : queries) serial.push_back(rank_corpus_serial(q, corpus));
  double serial_ms = ms_since(t0);

  t0 = clock_type::now();
  std::vector<std::vector<RankedResult>> parallel;
  for (const auto& q : queries) parallel.push_back(rank_corpus(q, corpus));
  double parallel_ms = ms_since(t0);

  for (int q = 0; q < num_queries; ++q)
    for (size_t i = 0; i < serial[q].size(); ++i)
      if (serial[q][i].index != parallel[q][i].index ||
          serial[q][i].score != parallel[q][i].score) {
        std::fprintf(stderr, "mismatch at query %d position %zu\n", q, i);
        return 1;
      }

  std::printf("serial:   %8.1f ms total  %7.2f ms/query\n", serial_ms,
              serial_ms / num_queries);
  std::printf("parallel: %8.1f ms total  %7.2f ms/query\n", parallel_ms,
              parallel_ms / num_queries);
  std::printf("speedup:  %.2fx\n", serial_ms / parallel_ms);
  return 0;
}
