#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bowlab/interpret.hpp"
#include "bowlab/trainer.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace bowlab;
using namespace bowlab::interpret;
using helpers::seq_of;
using helpers::tiny_cfg;
using helpers::toy_vocab;

TEST_CASE("project_to_vocab matches the LM head") {
  const auto p = model::init_params<double>(tiny_cfg(40));
  std::vector<double> zero(16, 0.0);
  for (const double s : project_to_vocab(p, std::span<const double>(zero))) CHECK(s == 0.0);

  Rng rng(3);
  std::vector<double> h(16);
  for (auto& v : h) v = rng.normal();
  const auto scores = project_to_vocab(p, std::span<const double>(h));
  const auto logits = model::lm_logits(p, core::Tensor<double>::from({1, 16}, h));
  for (int v = 0; v < 40; ++v)
    CHECK(std::fabs(scores[static_cast<std::size_t>(v)] - logits.values()[static_cast<std::size_t>(v)]) <
          1e-9);

  const auto again = project_to_vocab(p, std::span<const double>(h));
  CHECK(scores == again);
}

TEST_CASE("topk_tokens selects and tie-breaks like the full-sort oracle") {
  const std::vector<double> s1 = {0, 3, 1};
  CHECK(topk_tokens(s1, 2) == std::vector<std::int32_t>{1, 2});

  const std::vector<double> equal = {5, 5, 5};
  CHECK(topk_tokens(equal, 3) == std::vector<std::int32_t>{0, 1, 2});

  CHECK_THROWS_AS(topk_tokens(equal, 4), ConfigError);

  Rng rng(5);
  std::vector<double> scores(200);
  for (auto& v : scores) v = rng.below(40);  // plenty of ties
  for (int k = 1; k <= 200; ++k) {
    const auto got = topk_tokens(scores, k);
    const auto expect = oracles::topk(scores, k);
    for (int i = 0; i < k; ++i) CHECK(got[static_cast<std::size_t>(i)] == expect[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("input_token_coverage counts set intersections") {
  const auto seq = seq_of({7, 8, 9, 8});
  const std::vector<std::int32_t> super = {5, 6, 7, 8, 9, 10};
  CHECK(input_token_coverage(super, seq) == 1.0);
  const std::vector<std::int32_t> none = {20, 21};
  CHECK(input_token_coverage(none, seq) == 0.0);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int32_t> content;
    for (int i = 0; i < 6; ++i)
      content.push_back(text::kNumSpecials + static_cast<std::int32_t>(rng.below(30)));
    const auto s = seq_of(content);
    std::vector<std::int32_t> topk;
    for (int i = 0; i < 10; ++i) topk.push_back(static_cast<std::int32_t>(rng.below(40)));
    std::vector<int> topk_int(topk.begin(), topk.end());
    std::vector<int> set_int;
    for (const auto id : input_token_set(s)) set_int.push_back(id);
    CHECK(input_token_coverage(topk, s) == doctest::Approx(oracles::coverage(topk_int, set_int)));
  }

  CHECK_THROWS_WITH_AS(input_token_coverage(super, seq_of({})), doctest::Contains("no content tokens"),
                       DataError);
}

TEST_CASE("eval_mlm_loss is reproducible and near ln V at init") {
  const auto cfg = tiny_cfg(50, 16);
  const auto p = model::init_params<float>(cfg);
  const text::Vocab vocab = toy_vocab(45);
  const auto seqs = helpers::random_seqs(32, 6, 12, 45, 3);
  const double l1 = eval_mlm_loss(p, seqs, vocab, 0.15, 99);
  const double l2 = eval_mlm_loss(p, seqs, vocab, 0.15, 99);
  CHECK(l1 == l2);
  CHECK(std::fabs(l1 - std::log(50.0)) < 0.3);
}

TEST_CASE("training lowers the evaluation MLM loss") {
  const text::Vocab vocab = toy_vocab(59);
  const auto train = helpers::random_seqs(60, 6, 12, 59, 7);
  const auto held_out = helpers::random_seqs(24, 6, 12, 59, 8);
  model::EncoderConfig cfg = tiny_cfg(vocab.size(), 32);
  objectives::ObjectiveSettings fp;
  fp.objective = objectives::Objective::FurtherPretrain;
  core::AdamHyper opt;
  opt.lr = 1e-3;
  objectives::Trainer<float> trainer(cfg, vocab, fp, opt, 5);
  const double before = eval_mlm_loss(trainer.encoder(), held_out, vocab, 0.15, 123);
  for (int k = 0; k < 300; ++k) {
    const auto batch = objectives::sample_batch(train, 8, 5, static_cast<std::uint64_t>(k));
    trainer.step(batch, static_cast<std::uint64_t>(k));
  }
  const double after = eval_mlm_loss(trainer.encoder(), held_out, vocab, 0.15, 123);
  CHECK(after < before);
}

TEST_CASE("coverage report aggregates, saturates at k=V and is monotone in k") {
  const auto cfg = tiny_cfg(40, 16);
  const auto p = model::init_params<float>(cfg);
  const auto seqs = helpers::random_seqs(12, 4, 10, 35, 21);
  const auto report = coverage_report(p, seqs, {4, 8, 16, 40});
  REQUIRE(report.k_grid == std::vector<int>{4, 8, 16, 40});

  // Aggregate equals the mean of per-text values.
  for (std::size_t g = 0; g < report.k_grid.size(); ++g) {
    double mean = 0;
    for (const auto& tc : report.texts) mean += tc.r_by_k[g];
    mean /= static_cast<double>(report.texts.size());
    CHECK(std::fabs(mean - report.mean_r[g]) < 1e-9);
  }

  // k = V covers everything; coverage is non-decreasing in k.
  for (const auto& tc : report.texts) {
    CHECK(tc.r_by_k.back() == 1.0);
    for (std::size_t g = 1; g < tc.r_by_k.size(); ++g) CHECK(tc.r_by_k[g] >= tc.r_by_k[g - 1]);
  }

  const auto report2 = coverage_report(p, seqs, {4, 8, 16, 40});
  for (std::size_t g = 0; g < report.mean_r.size(); ++g) CHECK(report.mean_r[g] == report2.mean_r[g]);
}

TEST_CASE("bias-free top-k ranking is invariant under positive scaling") {
  const auto cfg = tiny_cfg(40, 16);
  const auto p = model::init_params<double>(cfg);
  Rng rng(11);
  std::vector<double> h(16);
  for (auto& v : h) v = rng.normal();
  std::vector<double> h3(h);
  for (auto& v : h3) v *= 3.7;
  const auto s1 = project_to_vocab(p, std::span<const double>(h), /*with_bias=*/false);
  const auto s2 = project_to_vocab(p, std::span<const double>(h3), /*with_bias=*/false);
  CHECK(topk_tokens(s1, 16) == topk_tokens(s2, 16));
}

TEST_CASE("coverage CSVs carry the documented headers") {
  const auto cfg = tiny_cfg(40, 16);
  const auto p = model::init_params<float>(cfg);
  const text::Vocab vocab = toy_vocab(35);
  const auto seqs = helpers::random_seqs(4, 4, 8, 35, 31);
  const auto report = coverage_report(p, seqs, {4, 8});
  const auto dir = std::filesystem::temp_directory_path();
  const std::string cov = (dir / "bowlab_cov_test.csv").string();
  const std::string top = (dir / "bowlab_top_test.csv").string();
  write_coverage_csv(report, cov);
  write_top_tokens_csv(report, vocab, top);
  std::string line;
  std::ifstream c(cov);
  std::getline(c, line);
  CHECK(line == "text_id,k,r_dominate");
  std::ifstream t(top);
  std::getline(t, line);
  CHECK(line == "text_id,rank,token,score,hit");
  std::filesystem::remove(cov);
  std::filesystem::remove(top);
}
