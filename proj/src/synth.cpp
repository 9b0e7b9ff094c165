#include "bowlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "bowlab/rng.hpp"
#include "bowlab/vocab.hpp"

namespace bowlab::synth {

std::vector<std::string> word_list(int n) {
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(n));
  int len = 1;
  long block = 26;
  long emitted = 0;
  while (static_cast<int>(words.size()) < n) {
    for (long i = 0; i < block && static_cast<int>(words.size()) < n; ++i) {
      std::string w(static_cast<std::size_t>(len), 'a');
      long x = i;
      for (int p = len - 1; p >= 0; --p) {
        w[static_cast<std::size_t>(p)] = static_cast<char>('a' + (x % 26));
        x /= 26;
      }
      words.push_back(std::move(w));
    }
    emitted += block;
    block *= 26;
    ++len;
  }
  (void)emitted;
  return words;
}

namespace {

// Cumulative Zipf weights over ranks 0..n-1.
std::vector<double> zipf_cdf(int n, double s) {
  std::vector<double> cdf(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += s == 0.0 ? 1.0 : 1.0 / std::pow(static_cast<double>(i + 1), s);
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  for (double& v : cdf) v /= acc;
  return cdf;
}

int sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.real01();
  return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

std::string make_doc(const std::vector<std::string>& words, const std::vector<double>& cdf, int len,
                     Rng& rng) {
  std::ostringstream os;
  for (int i = 0; i < len; ++i) {
    if (i) os << ' ';
    os << words[static_cast<std::size_t>(sample_cdf(cdf, rng))];
  }
  return os.str();
}

}  // namespace

std::vector<std::string> make_corpus(const CorpusSpec& spec) {
  if (spec.n_docs < 1 || spec.vocab_words < 1 || spec.min_len < 1 || spec.max_len < spec.min_len)
    throw ConfigError("make_corpus: invalid spec");
  const std::vector<std::string> words = word_list(spec.vocab_words);
  const std::vector<double> cdf = zipf_cdf(spec.vocab_words, spec.zipf_s);
  Rng rng(spec.seed);
  std::vector<std::string> docs;
  docs.reserve(static_cast<std::size_t>(spec.n_docs));
  for (int i = 0; i < spec.n_docs; ++i) {
    const int len = spec.min_len + static_cast<int>(rng.below(
                                       static_cast<std::uint64_t>(spec.max_len - spec.min_len + 1)));
    docs.push_back(make_doc(words, cdf, len, rng));
  }
  return docs;
}

RetrievalData make_retrieval_data(const RetrievalSpec& spec) {
  if (spec.n_passages < 2 || spec.n_train_queries < 1 || spec.n_eval_queries < 1)
    throw ConfigError("make_retrieval_data: invalid spec");
  const std::vector<std::string> words = word_list(spec.vocab_words);
  const std::vector<double> cdf = zipf_cdf(spec.vocab_words, spec.zipf_s);
  Rng rng(mix_seed(spec.seed, 0x5e7));

  RetrievalData data;
  std::vector<std::set<std::string>> passage_sets;
  for (int i = 0; i < spec.n_passages; ++i) {
    const int len = spec.passage_min_len +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(
                        spec.passage_max_len - spec.passage_min_len + 1)));
    std::string text = make_doc(words, cdf, len, rng);
    std::ostringstream pid;
    pid << "p" << std::setw(5) << std::setfill('0') << i;
    const auto toks = text::tokenize(text);
    passage_sets.emplace_back(toks.begin(), toks.end());
    data.collection.add(pid.str(), std::move(text));
  }

  // A query samples distinct tokens from one source passage, so the source is
  // always relevant under the overlap rule.
  const auto make_query = [&](std::vector<std::string>& out_tokens) -> int {
    const int src = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_passages)));
    std::vector<std::string> pool(passage_sets[static_cast<std::size_t>(src)].begin(),
                                  passage_sets[static_cast<std::size_t>(src)].end());
    const int want = spec.query_min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                              spec.query_max_len - spec.query_min_len + 1)));
    const int take = std::min<int>(want, static_cast<int>(pool.size()));
    rng.partial_shuffle(pool, static_cast<std::size_t>(take));
    out_tokens.assign(pool.begin(), pool.begin() + take);
    return src;
  };

  const auto relevant_passages = [&](const std::vector<std::string>& qtoks) {
    std::vector<int> rel;
    for (int pnum = 0; pnum < spec.n_passages; ++pnum) {
      int hit = 0;
      for (const std::string& t : qtoks)
        if (passage_sets[static_cast<std::size_t>(pnum)].count(t)) ++hit;
      if (static_cast<double>(hit) >= spec.overlap_threshold * static_cast<double>(qtoks.size()))
        rel.push_back(pnum);
    }
    return rel;
  };

  for (int q = 0; q < spec.n_train_queries; ++q) {
    std::vector<std::string> qtoks;
    const int src = make_query(qtoks);
    retrieval::Triple t;
    std::ostringstream qs;
    for (std::size_t i = 0; i < qtoks.size(); ++i) qs << (i ? " " : "") << qtoks[i];
    t.query = qs.str();
    t.pos_pid = data.collection.pids[static_cast<std::size_t>(src)];
    const std::vector<int> rel = relevant_passages(qtoks);
    std::set<int> rel_set(rel.begin(), rel.end());
    while (static_cast<int>(t.neg_pids.size()) < spec.negatives_per_query) {
      const int cand = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_passages)));
      if (rel_set.count(cand)) continue;
      t.neg_pids.push_back(data.collection.pids[static_cast<std::size_t>(cand)]);
    }
    data.train_triples.push_back(std::move(t));
  }

  for (int q = 0; q < spec.n_eval_queries; ++q) {
    std::vector<std::string> qtoks;
    make_query(qtoks);
    std::ostringstream qs;
    for (std::size_t i = 0; i < qtoks.size(); ++i) qs << (i ? " " : "") << qtoks[i];
    std::ostringstream qid;
    qid << "q" << std::setw(4) << std::setfill('0') << q;
    data.eval_qids.push_back(qid.str());
    data.eval_queries.push_back(qs.str());
    for (const int pnum : relevant_passages(qtoks))
      data.eval_qrels.grades[data.eval_qids.back()][data.collection.pids[static_cast<std::size_t>(pnum)]] = 1;
  }
  return data;
}

}  // namespace bowlab::synth
