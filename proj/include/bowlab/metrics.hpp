#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bowlab/errors.hpp"

namespace bowlab::retrieval {

struct RunEntry {
  std::string pid;
  double score = 0.0;
};

// Ranked retrieval output per query. Entries are score-descending with no
// duplicate passage ids.
struct RunResult {
  std::vector<std::string> qids;  // insertion order
  std::unordered_map<std::string, std::vector<RunEntry>> ranked;

  void add(const std::string& qid, std::vector<RunEntry> entries);
};

// query id -> passage id -> relevance grade (>= 0).
struct Qrels {
  std::unordered_map<std::string, std::map<std::string, int>> grades;

  bool has_query(const std::string& qid) const { return grades.count(qid) > 0; }
};

struct MetricWarnings {
  int queries_without_qrels = 0;
  int queries_without_positive = 0;
};

double mrr_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn = nullptr);
double recall_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn = nullptr);
// Gain 2^grade - 1, discount log2(rank+1), normalized by the ideal ranking;
// queries with zero ideal DCG are excluded.
double ndcg_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn = nullptr);

}  // namespace bowlab::retrieval
