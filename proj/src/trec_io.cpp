#include "bowlab/trec_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace bowlab::retrieval {

namespace {

std::ifstream open_in(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path, const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(std::string("cannot write ") + what + " file: " + path);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Collection read_collection(const std::string& path) {
  std::ifstream in = open_in(path, "collection");
  Collection coll;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected pid<TAB>text");
    coll.add(line.substr(0, tab), line.substr(tab + 1));
  }
  if (coll.pids.empty()) throw DataError("collection file is empty: " + path);
  return coll;
}

void write_collection(const Collection& coll, const std::string& path) {
  std::ofstream out = open_out(path, "collection");
  for (std::size_t i = 0; i < coll.pids.size(); ++i) out << coll.pids[i] << '\t' << coll.texts[i] << '\n';
}

std::vector<Triple> read_triples(const std::string& path) {
  std::ifstream in = open_in(path, "triples");
  std::vector<Triple> triples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected query<TAB>pos<TAB>negs");
    Triple t;
    t.query = line.substr(0, t1);
    t.pos_pid = line.substr(t1 + 1, t2 - t1 - 1);
    std::string negs = line.substr(t2 + 1);
    std::stringstream ss(negs);
    std::string neg;
    while (std::getline(ss, neg, ','))
      if (!neg.empty()) t.neg_pids.push_back(neg);
    for (const std::string& n : t.neg_pids)
      if (n == t.pos_pid)
        throw DataError(path + ":" + std::to_string(lineno) + ": positive listed among negatives");
    triples.push_back(std::move(t));
  }
  if (triples.empty()) throw DataError("triples file is empty: " + path);
  return triples;
}

void write_triples(const std::vector<Triple>& triples, const std::string& path) {
  std::ofstream out = open_out(path, "triples");
  for (const Triple& t : triples) {
    out << t.query << '\t' << t.pos_pid << '\t';
    for (std::size_t i = 0; i < t.neg_pids.size(); ++i) out << (i ? "," : "") << t.neg_pids[i];
    out << '\n';
  }
}

Qrels read_qrels(const std::string& path) {
  std::ifstream in = open_in(path, "qrels");
  Qrels q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string qid, zero, pid;
    int grade = -1;
    if (!(ss >> qid >> zero >> pid >> grade) || grade < 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected \"qid 0 pid grade\" with grade >= 0");
    q.grades[qid][pid] = grade;
  }
  if (q.grades.empty()) throw DataError("qrels file is empty: " + path);
  return q;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
  std::ofstream out = open_out(path, "qrels");
  std::map<std::string, std::map<std::string, int>> ordered(qrels.grades.begin(), qrels.grades.end());
  for (const auto& [qid, pids] : ordered)
    for (const auto& [pid, grade] : pids) out << qid << " 0 " << pid << ' ' << grade << '\n';
}

void write_run(const RunResult& run, const std::string& path, const std::string& tag) {
  std::ofstream out = open_out(path, "run");
  for (const std::string& qid : run.qids) {
    const auto& entries = run.ranked.at(qid);
    for (std::size_t r = 0; r < entries.size(); ++r)
      out << qid << " Q0 " << entries[r].pid << ' ' << (r + 1) << ' ' << entries[r].score << ' ' << tag
          << '\n';
  }
}

RunResult read_run(const std::string& path) {
  std::ifstream in = open_in(path, "run");
  std::vector<std::string> order;
  std::map<std::string, std::vector<RunEntry>> acc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string qid, q0, pid, tag;
    long rank = 0;
    double score = 0.0;
    if (!(ss >> qid >> q0 >> pid >> rank >> score >> tag))
      throw DataError(path + ":" + std::to_string(lineno) + ": expected \"qid Q0 pid rank score tag\"");
    if (!acc.count(qid)) order.push_back(qid);
    acc[qid].push_back({pid, score});
  }
  if (acc.empty()) throw DataError("run file is empty: " + path);
  RunResult run;
  for (const std::string& qid : order) run.add(qid, std::move(acc[qid]));
  return run;
}

}  // namespace bowlab::retrieval
