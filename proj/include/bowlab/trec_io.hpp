#pragma once

#include <string>
#include <vector>

#include "bowlab/metrics.hpp"
#include "bowlab/retrieval.hpp"

namespace bowlab::retrieval {

// TSV: pid <TAB> text
Collection read_collection(const std::string& path);
void write_collection(const Collection& coll, const std::string& path);

// TSV: query <TAB> pos_pid <TAB> neg_pid_1,neg_pid_2,...
std::vector<Triple> read_triples(const std::string& path);
void write_triples(const std::vector<Triple>& triples, const std::string& path);

// Whitespace separated: qid 0 pid grade
Qrels read_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, const std::string& path);

// TREC run: qid Q0 pid rank score tag (rank starts at 1)
void write_run(const RunResult& run, const std::string& path, const std::string& tag = "bowlab");
RunResult read_run(const std::string& path);

}  // namespace bowlab::retrieval
