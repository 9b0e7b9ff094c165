#include "bowlab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace bowlab::retrieval {

void RunResult::add(const std::string& qid, std::vector<RunEntry> entries) {
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i - 1].score < entries[i].score)
      throw DataError("run for query " + qid + ": scores increase at rank " + std::to_string(i + 1));
  std::vector<std::string> pids;
  for (const RunEntry& e : entries) pids.push_back(e.pid);
  std::sort(pids.begin(), pids.end());
  if (std::adjacent_find(pids.begin(), pids.end()) != pids.end())
    throw DataError("run for query " + qid + " has duplicate passage ids");
  if (ranked.count(qid)) throw DataError("run has duplicate query " + qid);
  qids.push_back(qid);
  ranked.emplace(qid, std::move(entries));
}

namespace {

bool relevant(const std::map<std::string, int>& grades, const std::string& pid) {
  const auto it = grades.find(pid);
  return it != grades.end() && it->second > 0;
}

}  // namespace

double mrr_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn) {
  if (k < 1) throw ConfigError("mrr_at_k: k must be >= 1");
  double total = 0.0;
  int scored = 0;
  for (const std::string& qid : run.qids) {
    const auto git = qrels.grades.find(qid);
    if (git == qrels.grades.end()) {
      if (warn) ++warn->queries_without_qrels;
      continue;
    }
    ++scored;
    const auto& entries = run.ranked.at(qid);
    for (int r = 0; r < k && r < static_cast<int>(entries.size()); ++r) {
      if (relevant(git->second, entries[static_cast<std::size_t>(r)].pid)) {
        total += 1.0 / (r + 1);
        break;
      }
    }
  }
  if (scored == 0) throw DataError("mrr_at_k: no query overlaps the qrels");
  return total / scored;
}

double recall_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn) {
  if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
  double total = 0.0;
  int scored = 0;
  for (const std::string& qid : run.qids) {
    const auto git = qrels.grades.find(qid);
    if (git == qrels.grades.end()) {
      if (warn) ++warn->queries_without_qrels;
      continue;
    }
    int n_rel = 0;
    for (const auto& [pid, g] : git->second)
      if (g > 0) ++n_rel;
    if (n_rel == 0) {
      if (warn) ++warn->queries_without_positive;
      continue;
    }
    ++scored;
    int hit = 0;
    const auto& entries = run.ranked.at(qid);
    for (int r = 0; r < k && r < static_cast<int>(entries.size()); ++r)
      if (relevant(git->second, entries[static_cast<std::size_t>(r)].pid)) ++hit;
    total += static_cast<double>(hit) / n_rel;
  }
  if (scored == 0) throw DataError("recall_at_k: no query overlaps the qrels");
  return total / scored;
}

double ndcg_at_k(const RunResult& run, const Qrels& qrels, int k, MetricWarnings* warn) {
  if (k < 1) throw ConfigError("ndcg_at_k: k must be >= 1");
  double total = 0.0;
  int scored = 0;
  for (const std::string& qid : run.qids) {
    const auto git = qrels.grades.find(qid);
    if (git == qrels.grades.end()) {
      if (warn) ++warn->queries_without_qrels;
      continue;
    }
    std::vector<int> ideal;
    for (const auto& [pid, g] : git->second)
      if (g > 0) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    double idcg = 0.0;
    for (int r = 0; r < k && r < static_cast<int>(ideal.size()); ++r)
      idcg += (std::pow(2.0, ideal[static_cast<std::size_t>(r)]) - 1.0) / std::log2(r + 2.0);
    if (idcg == 0.0) {
      if (warn) ++warn->queries_without_positive;
      continue;
    }
    ++scored;
    double dcg = 0.0;
    const auto& entries = run.ranked.at(qid);
    for (int r = 0; r < k && r < static_cast<int>(entries.size()); ++r) {
      const auto it = git->second.find(entries[static_cast<std::size_t>(r)].pid);
      if (it != git->second.end() && it->second > 0)
        dcg += (std::pow(2.0, it->second) - 1.0) / std::log2(r + 2.0);
    }
    total += dcg / idcg;
  }
  if (scored == 0) throw DataError("ndcg_at_k: no query overlaps the qrels");
  return total / scored;
}

}  // namespace bowlab::retrieval
