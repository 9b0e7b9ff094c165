#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bowlab/retrieval.hpp"

namespace bowlab::synth {

// Deterministic pseudo-words: base-26 letter strings, shortest first.
std::vector<std::string> word_list(int n);

struct CorpusSpec {
  int n_docs = 5000;
  int vocab_words = 1995;  // distinct words available to the sampler
  int min_len = 6;
  int max_len = 22;
  double zipf_s = 1.05;  // 0 = uniform
  std::uint64_t seed = 42;
};

// One document per entry, Zipf-weighted word draws.
std::vector<std::string> make_corpus(const CorpusSpec& spec);

struct RetrievalSpec {
  int n_passages = 300;
  int n_train_queries = 64;
  int n_eval_queries = 48;
  int vocab_words = 1200;
  int passage_min_len = 8;
  int passage_max_len = 20;
  int query_min_len = 3;
  int query_max_len = 6;
  int negatives_per_query = 8;
  double zipf_s = 1.05;
  double overlap_threshold = 0.6;  // passage relevant iff it covers >= this share of query tokens
  std::uint64_t seed = 42;
};

// Passages plus train triples and eval qrels. Relevance is generator-derived:
// a passage is relevant to a query iff it contains at least overlap_threshold
// of the query's distinct content tokens.
struct RetrievalData {
  retrieval::Collection collection;
  std::vector<retrieval::Triple> train_triples;
  std::vector<std::string> eval_qids;
  std::vector<std::string> eval_queries;
  retrieval::Qrels eval_qrels;
};

RetrievalData make_retrieval_data(const RetrievalSpec& spec);

}  // namespace bowlab::synth
