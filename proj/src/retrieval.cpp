#include "bowlab/retrieval.hpp"

#include <algorithm>

namespace bowlab::retrieval {

void Collection::add(std::string pid, std::string text) {
  if (index.count(pid)) throw DataError("collection has duplicate passage id " + pid);
  index.emplace(pid, pids.size());
  pids.push_back(std::move(pid));
  texts.push_back(std::move(text));
}

const std::string& Collection::text_of(const std::string& pid) const {
  const auto it = index.find(pid);
  if (it == index.end()) throw DataError("passage id " + pid + " not in collection");
  return texts[it->second];
}

RunResult brute_force_search(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus, int top_n,
                             SearchInfo* info) {
  if (top_n < 1) throw ConfigError("brute_force_search: top_n must be >= 1");
  if (queries.d != corpus.d)
    throw ShapeError("brute_force_search: dim mismatch " + std::to_string(queries.d) + " vs " +
                     std::to_string(corpus.d));
  if (corpus.n == 0) throw DataError("brute_force_search: empty corpus");
  if (top_n > corpus.n) {
    if (info) ++info->clipped_queries;
    top_n = corpus.n;
  }

  // Scores per query are independent; order within a query is fixed, so the
  // parallel loop is deterministic.
  std::vector<std::vector<RunEntry>> per_query(static_cast<std::size_t>(queries.n));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (kernels::parallel_enabled())
#endif
  for (int q = 0; q < queries.n; ++q) {
    const std::span<const float> qv = queries.row(q);
    std::vector<std::pair<double, int>> scored(static_cast<std::size_t>(corpus.n));
    for (int pnum = 0; pnum < corpus.n; ++pnum) {
      const std::span<const float> pv = corpus.row(pnum);
      double dot = 0.0;
      for (int j = 0; j < corpus.d; ++j)
        dot += static_cast<double>(qv[static_cast<std::size_t>(j)]) *
               static_cast<double>(pv[static_cast<std::size_t>(j)]);
      scored[static_cast<std::size_t>(pnum)] = {dot, pnum};
    }
    const auto better = [&corpus](const std::pair<double, int>& a, const std::pair<double, int>& b) {
      if (a.first != b.first) return a.first > b.first;
      return corpus.ids[static_cast<std::size_t>(a.second)] < corpus.ids[static_cast<std::size_t>(b.second)];
    };
    std::partial_sort(scored.begin(), scored.begin() + top_n, scored.end(), better);
    std::vector<RunEntry>& out = per_query[static_cast<std::size_t>(q)];
    out.reserve(static_cast<std::size_t>(top_n));
    for (int r = 0; r < top_n; ++r)
      out.push_back({corpus.ids[static_cast<std::size_t>(scored[static_cast<std::size_t>(r)].second)],
                     scored[static_cast<std::size_t>(r)].first});
  }

  RunResult run;
  for (int q = 0; q < queries.n; ++q)
    run.add(queries.ids[static_cast<std::size_t>(q)], std::move(per_query[static_cast<std::size_t>(q)]));
  return run;
}

}  // namespace bowlab::retrieval
