#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bowlab/emb_io.hpp"
#include "bowlab/synth.hpp"
#include "bowlab/trec_io.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace bowlab;
using namespace bowlab::retrieval;
using helpers::tiny_cfg;
using helpers::toy_vocab;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

EmbeddingMatrix matrix_of(std::vector<std::vector<float>> rows, std::vector<std::string> ids) {
  EmbeddingMatrix m;
  m.n = static_cast<int>(rows.size());
  m.d = static_cast<int>(rows[0].size());
  m.ids = std::move(ids);
  for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
  return m;
}

}  // namespace

TEST_CASE("similarity in dot and cosine modes") {
  const std::vector<float> unit = {1, 0, 0};
  CHECK(similarity<float>(unit, unit, SimMode::Dot) == doctest::Approx(1.0));
  CHECK(similarity<float>(unit, unit, SimMode::Cosine) == doctest::Approx(1.0));

  const std::vector<float> ortho = {0, 1, 0};
  CHECK(similarity<float>(unit, ortho, SimMode::Dot) == doctest::Approx(0.0));

  const std::vector<float> scaled = {2.5f, 0, 0};
  CHECK(similarity<float>(scaled, unit, SimMode::Cosine) ==
        doctest::Approx(similarity<float>(unit, unit, SimMode::Cosine)));

  const std::vector<float> zero = {0, 0, 0};
  CHECK_THROWS_AS(similarity<float>(zero, unit, SimMode::Cosine), DataError);
  const std::vector<float> short_v = {1, 2};
  CHECK_THROWS_AS(similarity<float>(short_v, unit), ShapeError);
}

TEST_CASE("contrastive loss: confident, uniform and oracle cases") {
  using core::Tensor;
  {
    // B=1, G=2: positive much closer than the negative.
    const auto q = Tensor<double>::from({1, 2}, {10, 0});
    const auto p = Tensor<double>::from({2, 2}, {10, 0, -10, 0});
    CHECK(contrastive_loss(q, p, 2, 1.0).item() < 1e-6);
  }
  {
    // All similarities equal -> ln(B*G).
    const auto q = Tensor<double>::from({2, 2}, {0, 0, 0, 0});
    const auto p = Tensor<double>::from({4, 2}, std::vector<double>(8, 1.0));
    CHECK(contrastive_loss(q, p, 2, 1.0).item() == doctest::Approx(std::log(4.0)).epsilon(1e-9));
  }
  {
    Rng rng(3);
    std::vector<double> qv(2 * 4), pv(6 * 4);
    for (auto& v : qv) v = rng.normal();
    for (auto& v : pv) v = rng.normal();
    const auto q = Tensor<double>::from({2, 4}, qv);
    const auto p = Tensor<double>::from({6, 4}, pv);
    const double tau = 0.7;
    const double got = contrastive_loss(q, p, 3, tau).item();
    double expect = 0;
    for (int i = 0; i < 2; ++i) {
      std::vector<double> logits(6);
      for (int j = 0; j < 6; ++j) {
        double dot = 0;
        for (int c = 0; c < 4; ++c) dot += qv[static_cast<std::size_t>(i) * 4 + c] * pv[static_cast<std::size_t>(j) * 4 + c];
        logits[static_cast<std::size_t>(j)] = dot / tau;
      }
      expect += oracles::ce_logits(logits, i * 3) / 2;
    }
    CHECK(std::fabs(got - expect) < 1e-6);
  }
  {
    const auto q = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
    const auto p = Tensor<double>::from({3, 2}, {1, 0, 0, 1, 1, 1});
    CHECK_THROWS_AS(contrastive_loss(q, p, 2, 1.0), ShapeError);  // 3 != 2*2
  }
}

TEST_CASE("encode_corpus is deterministic with duplicate passages matching") {
  const auto cfg = tiny_cfg(40, 16);
  const auto p = model::init_params<float>(cfg);
  const text::Vocab vocab = toy_vocab(35);
  const std::vector<std::string> ids = {"a", "b", "c"};
  const std::vector<std::string> texts = {"w1 w2 w3", "w4 w5", "w1 w2 w3"};
  const auto m1 = encode_corpus(p, vocab, ids, texts);
  const auto m2 = encode_corpus(p, vocab, ids, texts);
  CHECK(m1.data == m2.data);
  for (int j = 0; j < m1.d; ++j)
    CHECK(m1.data[static_cast<std::size_t>(j)] == m1.data[2 * static_cast<std::size_t>(m1.d) + j]);

  const auto single = encode_corpus(p, vocab, {ids.data(), 1}, {texts.data(), 1});
  CHECK(single.n == 1);
  CHECK(single.d == 16);
}

TEST_CASE("brute force search is exact against the full-sort oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(80));
    const int d = 4 + static_cast<int>(rng.below(12));
    std::vector<std::vector<float>> rows(static_cast<std::size_t>(n), std::vector<float>(static_cast<std::size_t>(d)));
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
      for (auto& v : rows[static_cast<std::size_t>(i)])
        v = static_cast<float>((static_cast<int>(rng.below(7)) - 3));  // coarse values force ties
      char buf[16];
      std::snprintf(buf, sizeof buf, "p%04d", i);
      ids.push_back(buf);
    }
    const auto corpus = matrix_of(rows, ids);
    std::vector<float> qv(static_cast<std::size_t>(d));
    for (auto& v : qv) v = static_cast<float>(rng.normal());
    const auto queries = matrix_of({std::vector<float>(qv)}, {"q0"});

    const int top_n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const auto run = brute_force_search(queries, corpus, top_n);

    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double dot = 0;
      for (int j = 0; j < d; ++j) dot += static_cast<double>(qv[static_cast<std::size_t>(j)]) * corpus.row(i)[static_cast<std::size_t>(j)];
      scores[static_cast<std::size_t>(i)] = dot;
    }
    const auto expect = oracles::topk(scores, top_n);
    const auto& entries = run.ranked.at("q0");
    REQUIRE(static_cast<int>(entries.size()) == top_n);
    for (int r = 0; r < top_n; ++r)
      CHECK(entries[static_cast<std::size_t>(r)].pid == ids[static_cast<std::size_t>(expect[static_cast<std::size_t>(r)])]);
  }
}

TEST_CASE("search finds an exact duplicate at rank one and clips top_n") {
  const auto corpus = matrix_of({{1, 0}, {0.9f, 0.1f}, {0, 1}}, {"a", "b", "c"});
  const auto queries = matrix_of({{1, 0}}, {"q"});
  SearchInfo info;
  const auto run = brute_force_search(queries, corpus, 10, &info);
  CHECK(info.clipped_queries == 1);
  CHECK(run.ranked.at("q").size() == 3);
  CHECK(run.ranked.at("q")[0].pid == "a");
}

TEST_CASE("run validation rejects bad rankings") {
  RunResult run;
  CHECK_THROWS_AS(run.add("q", {{"a", 1.0}, {"b", 2.0}}), DataError);       // increasing scores
  CHECK_THROWS_AS(run.add("q", {{"a", 2.0}, {"a", 1.0}}), DataError);       // duplicate pid
  run.add("q", {{"a", 2.0}, {"b", 1.0}});
  CHECK_THROWS_AS(run.add("q", {{"c", 1.0}}), DataError);                   // duplicate query
}

TEST_CASE("metric fixtures match hand-computed values") {
  Qrels qrels;
  qrels.grades["q1"]["d1"] = 1;
  qrels.grades["q2"]["d9"] = 1;
  qrels.grades["q3"]["d7"] = 1;

  RunResult run;
  run.add("q1", {{"d1", 5.0}, {"d2", 4.0}, {"d3", 3.0}});                    // relevant at rank 1
  run.add("q2", {{"d2", 5.0}, {"d3", 4.0}, {"d4", 3.0}, {"d9", 2.0}});       // relevant at rank 4
  run.add("q3", {{"d2", 5.0}, {"d3", 4.0}, {"d4", 3.0}});                    // never retrieved

  CHECK(mrr_at_k(run, qrels, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(mrr_at_k(run, qrels, 10) == doctest::Approx((1.0 + 0.25 + 0.0) / 3.0).epsilon(1e-9));
  CHECK(recall_at_k(run, qrels, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // Single query, single grade-1 relevant at rank 2: NDCG@10 = 1/log2(3).
  Qrels q2;
  q2.grades["q"]["hit"] = 1;
  RunResult r2;
  r2.add("q", {{"miss", 2.0}, {"hit", 1.0}});
  CHECK(ndcg_at_k(r2, q2, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-9));

  // Perfect ranking -> 1.0.
  Qrels q3;
  q3.grades["q"]["a"] = 2;
  q3.grades["q"]["b"] = 1;
  RunResult r3;
  r3.add("q", {{"a", 2.0}, {"b", 1.0}});
  CHECK(ndcg_at_k(r3, q3, 10) == doctest::Approx(1.0).epsilon(1e-12));

  // Recall with two relevants, one retrieved.
  Qrels q4;
  q4.grades["q"]["a"] = 1;
  q4.grades["q"]["b"] = 1;
  RunResult r4;
  r4.add("q", {{"a", 2.0}, {"x", 1.0}});
  CHECK(recall_at_k(r4, q4, 2) == doctest::Approx(0.5).epsilon(1e-12));

  // Queries missing from qrels are excluded with a warning count.
  RunResult r5;
  r5.add("q", {{"a", 2.0}});
  r5.add("unknown", {{"a", 2.0}});
  MetricWarnings warn;
  CHECK(mrr_at_k(r5, q4, 10, &warn) == doctest::Approx(1.0));
  CHECK(warn.queries_without_qrels == 1);
}

TEST_CASE("metrics are monotone in k and bounded") {
  Qrels qrels;
  qrels.grades["q1"]["d3"] = 1;
  qrels.grades["q2"]["d2"] = 1;
  RunResult run;
  run.add("q1", {{"d1", 3.0}, {"d2", 2.0}, {"d3", 1.0}});
  run.add("q2", {{"d2", 3.0}, {"d3", 2.0}});
  double prev_m = 0, prev_r = 0;
  for (int k = 1; k <= 5; ++k) {
    const double m = mrr_at_k(run, qrels, k);
    const double r = recall_at_k(run, qrels, k);
    CHECK(m >= prev_m);
    CHECK(r >= prev_r);
    CHECK(m >= 0);
    CHECK(m <= 1);
    CHECK(r >= 0);
    CHECK(r <= 1);
    prev_m = m;
    prev_r = r;
  }
}

TEST_CASE("embedding file round-trips exactly") {
  const auto m = matrix_of({{1.5f, -2.25f}, {0.125f, 3.75f}}, {"p1", "p2"});
  const std::string path = temp_file("bowlab_emb_test.bin");
  write_embeddings(m, path);
  const auto back = read_embeddings(path);
  CHECK(back.n == 2);
  CHECK(back.d == 2);
  CHECK(back.data == m.data);
  CHECK(back.ids == m.ids);

  // Bad magic.
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE" << std::string(16, '\0');
  }
  CHECK_THROWS_WITH_AS(read_embeddings(path), doctest::Contains("bad magic"), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("trec run and qrels files round-trip") {
  RunResult run;
  run.add("q1", {{"d1", 2.5}, {"d2", 1.5}});
  run.add("q2", {{"d9", 9.0}});
  const std::string rpath = temp_file("bowlab_run_test.txt");
  write_run(run, rpath, "tagx");
  const auto back = read_run(rpath);
  CHECK(back.qids == std::vector<std::string>{"q1", "q2"});
  CHECK(back.ranked.at("q1")[0].pid == "d1");
  CHECK(back.ranked.at("q1")[1].score == doctest::Approx(1.5));
  std::filesystem::remove(rpath);

  Qrels qrels;
  qrels.grades["q1"]["d1"] = 2;
  qrels.grades["q2"]["d4"] = 1;
  const std::string qpath = temp_file("bowlab_qrels_test.txt");
  write_qrels(qrels, qpath);
  const auto qback = read_qrels(qpath);
  CHECK(qback.grades.at("q1").at("d1") == 2);
  CHECK(qback.grades.at("q2").at("d4") == 1);
  std::filesystem::remove(qpath);
}

TEST_CASE("collection and triples files round-trip") {
  Collection coll;
  coll.add("p1", "alpha beta");
  coll.add("p2", "gamma delta");
  const std::string cpath = temp_file("bowlab_coll_test.tsv");
  write_collection(coll, cpath);
  const auto cback = read_collection(cpath);
  CHECK(cback.pids == coll.pids);
  CHECK(cback.text_of("p2") == "gamma delta");
  std::filesystem::remove(cpath);

  std::vector<Triple> triples = {{"query one", "p1", {"p2", "p3"}}, {"query two", "p2", {}}};
  const std::string tpath = temp_file("bowlab_triples_test.tsv");
  write_triples(triples, tpath);
  const auto tback = read_triples(tpath);
  REQUIRE(tback.size() == 2);
  CHECK(tback[0].neg_pids == std::vector<std::string>{"p2", "p3"});
  CHECK(tback[1].neg_pids.empty());
  std::filesystem::remove(tpath);
}

TEST_CASE("finetune with zero epochs leaves parameters untouched") {
  const auto cfg = tiny_cfg(40, 16);
  auto p = model::init_params<float>(cfg);
  const auto before = p.tok_emb.values();
  const text::Vocab vocab = toy_vocab(35);
  Collection coll;
  coll.add("p1", "w1 w2 w3");
  coll.add("p2", "w4 w5 w6");
  FinetuneConfig fc;
  fc.epochs = 0;
  fc.group_size = 2;
  const auto log = finetune(p, {{"w1 w2", "p1", {"p2"}}}, coll, vocab, fc);
  CHECK(log.epoch_mean_loss.empty());
  CHECK(std::equal(before.begin(), before.end(), p.tok_emb.values().begin()));
}

TEST_CASE("finetune loss decreases on a toy dataset") {
  synth::RetrievalSpec spec;
  spec.n_passages = 40;
  spec.n_train_queries = 24;
  spec.n_eval_queries = 4;
  spec.vocab_words = 120;
  spec.seed = 5;
  const auto data = synth::make_retrieval_data(spec);
  const text::Vocab vocab = text::Vocab::build(data.collection.texts, 256);
  model::EncoderConfig cfg = tiny_cfg(vocab.size(), 32);
  auto p = model::init_params<float>(cfg);
  FinetuneConfig fc;
  fc.epochs = 6;
  fc.batch_queries = 8;
  fc.group_size = 4;
  fc.opt.lr = 2e-3;
  fc.seed = 7;
  const auto log = finetune(p, data.train_triples, data.collection, vocab, fc);
  REQUIRE(log.epoch_mean_loss.size() == 6);
  CHECK(log.epoch_mean_loss.back() < log.epoch_mean_loss.front() * 0.7);
}

TEST_CASE("mined negatives exclude the known positives") {
  synth::RetrievalSpec spec;
  spec.n_passages = 30;
  spec.n_train_queries = 10;
  spec.n_eval_queries = 2;
  spec.vocab_words = 80;
  spec.seed = 11;
  const auto data = synth::make_retrieval_data(spec);
  const text::Vocab vocab = text::Vocab::build(data.collection.texts, 128);
  model::EncoderConfig cfg = tiny_cfg(vocab.size(), 16);
  auto p = model::init_params<float>(cfg);
  const auto mined = mine_negatives(p, vocab, data.train_triples, data.collection, 10);
  REQUIRE(mined.size() == data.train_triples.size());
  for (std::size_t i = 0; i < mined.size(); ++i) {
    CHECK(!mined[i].neg_pids.empty());
    for (const auto& neg : mined[i].neg_pids) CHECK(neg != mined[i].pos_pid);
  }
}

TEST_CASE("synthetic retrieval data honors the lexical-overlap relevance rule") {
  synth::RetrievalSpec spec;
  spec.n_passages = 25;
  spec.n_train_queries = 8;
  spec.n_eval_queries = 10;
  spec.seed = 3;
  const auto data = synth::make_retrieval_data(spec);
  // The source passage of each training query is always relevant, so the
  // positive is never among the sampled negatives.
  for (const auto& t : data.train_triples)
    for (const auto& n : t.neg_pids) CHECK(n != t.pos_pid);
  // Every eval query has at least one relevant passage (its source).
  for (const auto& qid : data.eval_qids) {
    REQUIRE(data.eval_qrels.grades.count(qid));
    CHECK(!data.eval_qrels.grades.at(qid).empty());
  }
}
