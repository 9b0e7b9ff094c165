#include "bowlab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>

#include "bowlab/emb_io.hpp"
#include "bowlab/interpret.hpp"
#include "bowlab/session.hpp"
#include "bowlab/synth.hpp"
#include "bowlab/trec_io.hpp"

namespace bowlab::cli {

namespace {

void set_threads(int threads, bool serial) {
  if (serial) kernels::set_parallel(false);
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

text::Vocab vocab_for_docs(const std::string& vocab_path, const std::vector<std::string>& docs,
                           int max_size) {
  if (std::filesystem::exists(vocab_path)) return text::Vocab::load(vocab_path);
  text::Vocab v = text::Vocab::build(docs, static_cast<std::size_t>(max_size));
  v.save(vocab_path);
  std::cout << "built vocab of " << v.size() << " tokens -> " << vocab_path << "\n";
  return v;
}

std::vector<text::TokenSeq> encode_docs(const text::Vocab& v, const std::vector<std::string>& docs,
                                        int max_seq_len) {
  std::vector<text::TokenSeq> seqs;
  seqs.reserve(docs.size());
  for (const std::string& d : docs) seqs.push_back(text::encode_text(v, d, max_seq_len));
  return seqs;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) {
      try {
        out.push_back(std::stoi(item));
      } catch (...) {
        throw UsageError(std::string("bad ") + what + " list entry: " + item);
      }
    }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

// Encoder-only checkpoint (no optimizer state); enough for every eval command.
ckpt::Checkpoint params_checkpoint(const model::EncoderParams<float>& params, TrainConfig cfg) {
  ckpt::Checkpoint c;
  c.config_text = serialize_config(cfg);
  for (auto& [name, tensor] : model::named_params(params))
    c.tensors.push_back(detail::to_record(name, tensor));
  return c;
}

struct PretrainOpts {
  std::string config, resume, corpus, vocab;
  std::string out = "model.ckpt";
  std::string metrics = "train_metrics.csv";
  std::string objective;
  long steps = -1;
  int batch = -1;
  long seed = -1;
  double lr = -1;
  int candidates = -1;
  bool paper = false;
  int log_every = 200;
};

int cmd_pretrain(const PretrainOpts& o) {
  std::unique_ptr<Session<float>> session;
  if (!o.resume.empty()) {
    session = std::make_unique<Session<float>>(Session<float>::from_checkpoint(o.resume, o.vocab));
    if (o.steps >= 0) session->cfg.steps = o.steps;
  } else {
    TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_config(o.config);
    if (o.paper) apply_paper_scale(cfg);
    if (!o.objective.empty()) cfg.objective = o.objective;
    if (o.steps >= 0) cfg.steps = o.steps;
    if (o.batch > 0) cfg.batch_size = o.batch;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.lr > 0) cfg.lr = o.lr;
    if (o.candidates > 0) cfg.candidates = o.candidates;
    if (!o.corpus.empty()) cfg.corpus_path = o.corpus;
    if (!o.vocab.empty()) cfg.vocab_path = o.vocab;
    if (cfg.corpus_path.empty()) throw UsageError("pretrain needs --corpus (or corpus_path in the config)");
    if (cfg.vocab_path.empty()) cfg.vocab_path = o.out + ".vocab";
    cfg.validate();
    const std::vector<std::string> docs = text::read_corpus(cfg.corpus_path);
    text::Vocab vocab = vocab_for_docs(cfg.vocab_path, docs, cfg.vocab_size);
    session = std::make_unique<Session<float>>(cfg, std::move(vocab));
  }

  const TrainConfig& cfg = session->cfg;
  const std::vector<std::string> docs = text::read_corpus(cfg.corpus_path);
  const std::vector<text::TokenSeq> seqs = encode_docs(*session->vocab, docs, cfg.max_seq_len);

  objectives::MetricsCsv csv(o.metrics);
  auto& trainer = *session->trainer;
  const long start = session->start_step;
  std::cout << "pretraining objective=" << cfg.objective << " steps=" << start << ".." << cfg.steps
            << " batch=" << cfg.batch_size << " vocab=" << session->vocab->size() << "\n";
  for (long k = start; k < cfg.steps; ++k) {
    const auto batch = objectives::sample_batch(seqs, cfg.batch_size, cfg.seed,
                                                static_cast<std::uint64_t>(k));
    const objectives::LossBundle b = trainer.step(batch, static_cast<std::uint64_t>(k));
    csv.row(static_cast<std::uint64_t>(k), trainer.settings().objective, b);
    if (o.log_every > 0 && (k % o.log_every == 0 || k + 1 == cfg.steps))
      std::cout << "step " << k << " l_enc=" << b.l_enc << " l_dec=" << b.l_dec << " l_total=" << b.l_total
                << " (" << b.timings.total_ms << " ms)\n";
  }
  session->save(o.out);
  std::cout << "saved checkpoint -> " << o.out << "\n";
  return 0;
}

struct FinetuneOpts {
  std::string config, checkpoint, collection, triples, vocab;
  std::string out = "finetuned.ckpt";
  bool random_init = false;
  int epochs = -1;
  long seed = -1;
  double lr = -1;
  bool mine = false;
};

int cmd_finetune(const FinetuneOpts& o) {
  if (o.collection.empty() || o.triples.empty())
    throw UsageError("finetune needs --collection and --triples");
  if (o.checkpoint.empty() && !o.random_init)
    throw UsageError("finetune needs --checkpoint, or --random-init with --config dims");

  retrieval::Collection coll = retrieval::read_collection(o.collection);
  std::vector<retrieval::Triple> triples = retrieval::read_triples(o.triples);

  TrainConfig cfg;
  std::unique_ptr<text::Vocab> vocab;
  model::EncoderParams<float> params;
  if (!o.checkpoint.empty()) {
    LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
    cfg = loaded.cfg;
    vocab = std::move(loaded.vocab);
    params = std::move(loaded.params);
  } else {
    cfg = o.config.empty() ? TrainConfig{} : load_config(o.config);
    if (cfg.vocab_path.empty() && o.vocab.empty()) cfg.vocab_path = o.out + ".vocab";
    if (!o.vocab.empty()) cfg.vocab_path = o.vocab;
    vocab = std::make_unique<text::Vocab>(vocab_for_docs(cfg.vocab_path, coll.texts, cfg.vocab_size));
    params = model::init_params<float>(encoder_config_from(cfg, vocab->size()));
  }
  if (o.epochs >= 0) cfg.epochs = o.epochs;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.lr > 0) cfg.lr = o.lr;
  if (o.mine) cfg.mine_negatives = true;

  retrieval::FinetuneConfig fc;
  fc.epochs = cfg.epochs;
  fc.group_size = cfg.group_size;
  fc.temperature = cfg.temperature;
  fc.opt = adam_hyper_from(cfg);
  fc.seed = cfg.seed;
  fc.mine_negatives = cfg.mine_negatives;
  fc.mine_top_n = cfg.mine_top_n;
  std::cout << "fine-tuning on " << triples.size() << " triples over " << coll.pids.size()
            << " passages, epochs=" << fc.epochs << " group=" << fc.group_size << "\n";
  const retrieval::FinetuneLog log = retrieval::finetune(params, triples, coll, *vocab, fc);
  for (std::size_t e = 0; e < log.epoch_mean_loss.size(); ++e)
    std::cout << "epoch " << e << " mean contrastive loss " << log.epoch_mean_loss[e] << "\n";
  if (log.mined_triples) std::cout << "mined negatives for " << log.mined_triples << " triples\n";

  ckpt::save_checkpoint(o.out, params_checkpoint(params, cfg));
  std::cout << "saved checkpoint -> " << o.out << "\n";
  return 0;
}

struct EvalMlmOpts {
  std::string checkpoint, corpus, vocab;
  int n = 1000;
  double r_enc = -1;
  long seed = -1;
};

int cmd_eval_mlm(const EvalMlmOpts& o) {
  LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
  const std::vector<std::string> docs = text::read_corpus(o.corpus);
  const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : loaded.cfg.seed;
  std::vector<std::size_t> idx(docs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0x5a17));
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(o.n), docs.size());
  rng.partial_shuffle(idx, n);
  std::vector<text::TokenSeq> seqs;
  for (std::size_t i = 0; i < n; ++i)
    seqs.push_back(text::encode_text(*loaded.vocab, docs[idx[i]], loaded.cfg.max_seq_len));
  const double r = o.r_enc > 0 ? o.r_enc : loaded.cfg.r_enc;
  const double loss = interpret::eval_mlm_loss(loaded.params, seqs, *loaded.vocab, r, seed);
  std::cout << "eval_mlm_loss = " << loss << "  (texts=" << n << ", r_enc=" << r << ", seed=" << seed
            << ")\n";
  return 0;
}

struct CoverageOpts {
  std::string checkpoint, corpus, vocab;
  std::string k_list = "8,16,32,64,128";
  int limit = 200;
  std::string out_prefix = "coverage";
  bool no_bias = false;
};

int cmd_coverage(const CoverageOpts& o) {
  LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
  std::vector<std::string> docs = text::read_corpus(o.corpus);
  if (o.limit > 0 && static_cast<int>(docs.size()) > o.limit) docs.resize(static_cast<std::size_t>(o.limit));
  const std::vector<text::TokenSeq> seqs = encode_docs(*loaded.vocab, docs, loaded.cfg.max_seq_len);
  const std::vector<int> ks = parse_int_list(o.k_list, "k");
  const interpret::CoverageReport report =
      interpret::coverage_report(loaded.params, seqs, ks, 20, !o.no_bias);
  const std::string cov_path = o.out_prefix + ".coverage.csv";
  const std::string top_path = o.out_prefix + ".top_tokens.csv";
  interpret::write_coverage_csv(report, cov_path);
  interpret::write_top_tokens_csv(report, *loaded.vocab, top_path);
  std::cout << "texts: " << report.texts.size() << "\n";
  for (std::size_t g = 0; g < report.k_grid.size(); ++g)
    std::cout << "mean r_dominate @ k=" << report.k_grid[g] << " : " << report.mean_r[g] << "\n";
  std::cout << "wrote " << cov_path << " and " << top_path << "\n";
  return 0;
}

struct EncodeOpts {
  std::string checkpoint, collection, vocab;
  std::string out = "embeddings.bin";
  int batch = 32;
};

int cmd_encode(const EncodeOpts& o) {
  LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
  const retrieval::Collection coll = retrieval::read_collection(o.collection);
  const retrieval::EmbeddingMatrix m =
      retrieval::encode_corpus(loaded.params, *loaded.vocab, coll.pids, coll.texts, o.batch);
  retrieval::write_embeddings(m, o.out);
  std::cout << "encoded " << m.n << " passages (d=" << m.d << ") -> " << o.out << "\n";
  return 0;
}

struct SearchOpts {
  std::string checkpoint, queries, embeddings, vocab;
  std::string out = "run.txt";
  std::string tag = "bowlab";
  int top_n = 10;
};

int cmd_search(const SearchOpts& o) {
  LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
  const retrieval::Collection queries = retrieval::read_collection(o.queries);
  const retrieval::EmbeddingMatrix corpus = retrieval::read_embeddings(o.embeddings);
  const retrieval::EmbeddingMatrix qm =
      retrieval::encode_corpus(loaded.params, *loaded.vocab, queries.pids, queries.texts);
  retrieval::SearchInfo info;
  const retrieval::RunResult run = retrieval::brute_force_search(qm, corpus, o.top_n, &info);
  retrieval::write_run(run, o.out, o.tag);
  if (info.clipped_queries)
    std::cerr << "warning: top_n clipped to collection size for " << info.clipped_queries << " queries\n";
  std::cout << "searched " << qm.n << " queries over " << corpus.n << " passages, top_n=" << o.top_n
            << " -> " << o.out << "\n";
  return 0;
}

struct EvalRetrievalOpts {
  std::string run, qrels;
  std::string metrics = "mrr@10,recall@50,ndcg@10";
};

int cmd_eval_retrieval(const EvalRetrievalOpts& o) {
  const retrieval::RunResult run = retrieval::read_run(o.run);
  const retrieval::Qrels qrels = retrieval::read_qrels(o.qrels);
  retrieval::MetricWarnings warn;
  std::stringstream ss(o.metrics);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const std::size_t at = item.find('@');
    if (at == std::string::npos) throw UsageError("metric must look like mrr@10, got " + item);
    const std::string name = item.substr(0, at);
    int k = 0;
    try {
      k = std::stoi(item.substr(at + 1));
    } catch (...) {
      throw UsageError("bad metric cutoff in " + item);
    }
    double value = 0;
    if (name == "mrr")
      value = retrieval::mrr_at_k(run, qrels, k, &warn);
    else if (name == "recall")
      value = retrieval::recall_at_k(run, qrels, k, &warn);
    else if (name == "ndcg")
      value = retrieval::ndcg_at_k(run, qrels, k, &warn);
    else
      throw UsageError("unknown metric " + name + " (expected mrr|recall|ndcg)");
    std::cout << item << " = " << value << "\n";
  }
  if (warn.queries_without_qrels)
    std::cerr << "warning: " << warn.queries_without_qrels << " run queries missing from qrels\n";
  return 0;
}

struct BenchOpts {
  std::string config;
  std::string objectives = "all";
  int steps = 50;
  int warmup = 10;
  int batch = -1;
  int candidates = 256;
  int docs = 256;
  long seed = -1;
  std::string csv = "bench.csv";
};

int cmd_bench(const BenchOpts& o) {
  TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_config(o.config);
  if (o.batch > 0) cfg.batch_size = o.batch;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  cfg.candidates = o.candidates;

  std::vector<objectives::Objective> objs;
  if (o.objectives == "all") {
    objs = {objectives::Objective::FurtherPretrain, objectives::Objective::AutoEncoding,
            objectives::Objective::AutoRegression, objectives::Objective::EnhancedDecoding,
            objectives::Objective::Bow};
  } else {
    std::stringstream ss(o.objectives);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) objs.push_back(objectives::parse_objective(item));
    if (objs.empty()) throw UsageError("empty --objectives list");
  }

  // Self-contained synthetic corpus with near-full-length documents.
  synth::CorpusSpec cs;
  cs.n_docs = o.docs;
  cs.vocab_words = std::max(32, cfg.vocab_size - text::kNumSpecials);
  cs.max_len = std::max(4, cfg.max_seq_len - 2);
  cs.min_len = std::max(4, cs.max_len - 4);
  cs.seed = cfg.seed;
  const std::vector<std::string> docs = synth::make_corpus(cs);
  const text::Vocab vocab = text::Vocab::build(docs, static_cast<std::size_t>(cfg.vocab_size));
  const std::vector<text::TokenSeq> seqs = encode_docs(vocab, docs, cfg.max_seq_len);

  objectives::ObjectiveSettings base = objective_settings_from(cfg);
  const std::vector<objectives::BenchRow> rows = objectives::run_benchmark<float>(
      encoder_config_from(cfg, vocab.size()), vocab, base, objs, seqs, cfg.batch_size, o.steps, o.warmup,
      cfg.seed);

  std::ofstream csv(o.csv);
  if (!csv) throw DataError("cannot write bench csv: " + o.csv);
  csv << "objective,data_ms,encoder_ms,decoder_ms,total_ms,samples_per_sec,degeneration_pct\n";
  std::cout << "objective            data_ms  encoder_ms  decoder_ms  total_ms  samples/s  degeneration\n";
  for (const objectives::BenchRow& r : rows) {
    csv << r.objective << ',' << r.data_ms << ',' << r.encoder_ms << ',' << r.decoder_ms << ','
        << r.total_ms << ',' << r.samples_per_sec << ',' << r.degeneration_pct << '\n';
    std::printf("%-20s %8.3f %11.3f %11.3f %9.3f %10.1f %12.1f%%\n", r.objective.c_str(), r.data_ms,
                r.encoder_ms, r.decoder_ms, r.total_ms, r.samples_per_sec, r.degeneration_pct);
  }
  std::cout << "wrote " << o.csv << "\n";
  return 0;
}

struct InspectOpts {
  std::string checkpoint, corpus, vocab;
  std::vector<std::string> texts;
  int limit = 5;
  int k = 20;
  bool no_bias = false;
};

int cmd_inspect_topk(const InspectOpts& o) {
  LoadedEncoder<float> loaded = load_encoder<float>(o.checkpoint, o.vocab);
  std::vector<std::string> docs = o.texts;
  if (docs.empty()) {
    if (o.corpus.empty()) throw UsageError("inspect-topk needs --text or --corpus");
    docs = text::read_corpus(o.corpus);
    if (static_cast<int>(docs.size()) > o.limit) docs.resize(static_cast<std::size_t>(o.limit));
  }
  const std::vector<text::TokenSeq> seqs = encode_docs(*loaded.vocab, docs, loaded.cfg.max_seq_len);
  const interpret::CoverageReport report =
      interpret::coverage_report(loaded.params, seqs, {o.k}, o.k, !o.no_bias);
  for (const interpret::TextCoverage& tc : report.texts) {
    std::cout << "text " << tc.text_id << ": " << docs[static_cast<std::size_t>(tc.text_id)] << "\n";
    std::cout << "  r_dominate@" << report.k_grid.back() << " = " << tc.r_by_k.back() << "\n";
    for (int r = 0; r < o.k && r < static_cast<int>(tc.top_ids.size()); ++r) {
      const std::int32_t id = tc.top_ids[static_cast<std::size_t>(r)];
      const bool hit = std::find(tc.input_set.begin(), tc.input_set.end(), id) != tc.input_set.end();
      std::printf("  %3d  %-16s %9.4f  %s\n", r + 1, loaded.vocab->token_of(id).c_str(),
                  tc.top_scores[static_cast<std::size_t>(r)], hit ? "hit" : "miss");
    }
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"bowlab: desk-scale dense-retrieval pre-training laboratory"};
  app.require_subcommand(1);
  int threads = 0;
  bool serial = false;
  app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");
  app.add_flag("--serial", serial, "force the serial reference kernels");

  PretrainOpts pre;
  CLI::App* sp = app.add_subcommand("pretrain", "train one objective on a text corpus");
  sp->add_option("--config", pre.config, "key = value config file");
  sp->add_option("--resume", pre.resume, "checkpoint to resume from");
  sp->add_option("--corpus", pre.corpus, "corpus file, one document per line");
  sp->add_option("--vocab", pre.vocab, "vocab file (built from the corpus when absent)");
  sp->add_option("--objective", pre.objective,
                 "further_pretrain|auto_encoding|auto_regression|enhanced_decoding|bow");
  sp->add_option("--steps", pre.steps, "total training steps");
  sp->add_option("--batch-size", pre.batch, "batch size");
  sp->add_option("--seed", pre.seed, "seed override");
  sp->add_option("--lr", pre.lr, "learning rate override");
  sp->add_option("--candidates", pre.candidates, "enhanced-decoding mask candidates");
  sp->add_option("--out", pre.out, "checkpoint output path");
  sp->add_option("--metrics-csv", pre.metrics, "per-step metrics CSV path");
  sp->add_option("--log-every", pre.log_every, "stdout progress interval");
  sp->add_flag("--paper-scale", pre.paper, "use the documented full-scale hyperparameters");

  FinetuneOpts fin;
  CLI::App* sf = app.add_subcommand("finetune", "contrastive fine-tuning on training triples");
  sf->add_option("--config", fin.config, "config file (for --random-init dims)");
  sf->add_option("--checkpoint", fin.checkpoint, "pre-trained checkpoint to start from");
  sf->add_flag("--random-init", fin.random_init, "start from random initialization");
  sf->add_option("--collection", fin.collection, "TSV pid<TAB>text");
  sf->add_option("--triples", fin.triples, "TSV query<TAB>pos_pid<TAB>neg,neg,...");
  sf->add_option("--vocab", fin.vocab, "vocab file override");
  sf->add_option("--out", fin.out, "checkpoint output path");
  sf->add_option("--epochs", fin.epochs, "fine-tuning epochs");
  sf->add_option("--seed", fin.seed, "seed override");
  sf->add_option("--lr", fin.lr, "learning rate override");
  sf->add_flag("--mine-negatives", fin.mine, "one mined-negative round after the main epochs");

  EvalMlmOpts ev;
  CLI::App* se = app.add_subcommand("eval-mlm", "held-out masked-language-model loss");
  se->add_option("--checkpoint", ev.checkpoint)->required();
  se->add_option("--corpus", ev.corpus)->required();
  se->add_option("--vocab", ev.vocab, "vocab file override");
  se->add_option("--n", ev.n, "number of sampled texts");
  se->add_option("--r-enc", ev.r_enc, "mask ratio (default from checkpoint config)");
  se->add_option("--seed", ev.seed, "evaluation seed");

  CoverageOpts cov;
  CLI::App* sc = app.add_subcommand("coverage", "input-token coverage report");
  sc->add_option("--checkpoint", cov.checkpoint)->required();
  sc->add_option("--corpus", cov.corpus)->required();
  sc->add_option("--vocab", cov.vocab, "vocab file override");
  sc->add_option("--k", cov.k_list, "comma-separated k grid");
  sc->add_option("--limit", cov.limit, "max texts (0 = all)");
  sc->add_option("--out-prefix", cov.out_prefix, "CSV path prefix");
  sc->add_flag("--no-bias", cov.no_bias, "project without the LM-head bias");

  EncodeOpts enc;
  CLI::App* sn = app.add_subcommand("encode", "encode a collection into an embedding file");
  sn->add_option("--checkpoint", enc.checkpoint)->required();
  sn->add_option("--collection", enc.collection)->required();
  sn->add_option("--vocab", enc.vocab, "vocab file override");
  sn->add_option("--out", enc.out, "embedding file path");
  sn->add_option("--batch-size", enc.batch);

  SearchOpts sea;
  CLI::App* ss = app.add_subcommand("search", "exact maximum-inner-product search");
  ss->add_option("--checkpoint", sea.checkpoint)->required();
  ss->add_option("--queries", sea.queries, "TSV qid<TAB>text")->required();
  ss->add_option("--embeddings", sea.embeddings, "corpus embedding file")->required();
  ss->add_option("--vocab", sea.vocab, "vocab file override");
  ss->add_option("--top-n", sea.top_n);
  ss->add_option("--out", sea.out, "TREC run output");
  ss->add_option("--tag", sea.tag, "run tag");

  EvalRetrievalOpts evr;
  CLI::App* sr = app.add_subcommand("eval-retrieval", "score a TREC run against qrels");
  sr->add_option("--run", evr.run)->required();
  sr->add_option("--qrels", evr.qrels)->required();
  sr->add_option("--metrics", evr.metrics, "e.g. mrr@10,recall@50,ndcg@10");

  BenchOpts ben;
  CLI::App* sb = app.add_subcommand("bench", "step-time benchmark across objectives");
  sb->add_option("--config", ben.config, "config file for model dims");
  sb->add_option("--objectives", ben.objectives, "all or comma-separated names");
  sb->add_option("--steps", ben.steps, "timed steps (>= 10)");
  sb->add_option("--warmup", ben.warmup, "discarded warmup steps");
  sb->add_option("--batch-size", ben.batch);
  sb->add_option("--candidates", ben.candidates, "enhanced-decoding mask candidates");
  sb->add_option("--docs", ben.docs, "synthetic corpus size");
  sb->add_option("--seed", ben.seed);
  sb->add_option("--csv", ben.csv, "benchmark CSV output");

  InspectOpts ins;
  CLI::App* si = app.add_subcommand("inspect-topk", "top-k vocabulary projection of texts");
  si->add_option("--checkpoint", ins.checkpoint)->required();
  si->add_option("--text", ins.texts, "literal text (repeatable)");
  si->add_option("--corpus", ins.corpus, "corpus file to take texts from");
  si->add_option("--vocab", ins.vocab, "vocab file override");
  si->add_option("--limit", ins.limit, "max corpus texts");
  si->add_option("--k", ins.k);
  si->add_flag("--no-bias", ins.no_bias, "project without the LM-head bias");

  std::vector<const char*> argv;
  argv.push_back("bowlab");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  }
  set_threads(threads, serial);

  if (sp->parsed()) return cmd_pretrain(pre);
  if (sf->parsed()) return cmd_finetune(fin);
  if (se->parsed()) return cmd_eval_mlm(ev);
  if (sc->parsed()) return cmd_coverage(cov);
  if (sn->parsed()) return cmd_encode(enc);
  if (ss->parsed()) return cmd_search(sea);
  if (sr->parsed()) return cmd_eval_retrieval(evr);
  if (sb->parsed()) return cmd_bench(ben);
  if (si->parsed()) return cmd_inspect_topk(ins);
  return 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  try {
    return run(args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bowlab::cli
