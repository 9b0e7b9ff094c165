#include "bowlab/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bowlab/objectives.hpp"

namespace bowlab {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& constraint) {
  throw ConfigError("config key \"" + key + "\": value \"" + value + "\" violates constraint: " + constraint);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v, "must be a number");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, v, "must be a number");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long l = std::stol(v, &used);
    if (used != v.size()) bad_value(key, v, "must be an integer");
    return l;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, v, "must be an integer");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, v, "must be a boolean (0/1/true/false)");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  objectives::parse_objective(objective);  // throws on unknown names
  const auto ratio = [](const char* key, double r) {
    if (!(r > 0.0 && r < 1.0))
      throw ConfigError(std::string("config key \"") + key + "\": value \"" + fmt(r) +
                        "\" violates constraint: must lie in (0,1)");
  };
  ratio("r_enc", r_enc);
  ratio("r_dec", r_dec);
  ratio("r_attn", r_attn);
  if (objective == "auto_encoding" && !(r_dec > r_enc))
    throw ConfigError("config: auto_encoding requires r_dec > r_enc (r_dec=" + fmt(r_dec) +
                      ", r_enc=" + fmt(r_enc) + ")");
  if (layers < 1 || heads < 1 || hidden < 1 || ffn < 1)
    throw ConfigError("config: model dimensions must be >= 1");
  if (hidden % heads != 0) throw ConfigError("config: hidden must be divisible by heads");
  if (vocab_size < 6) throw ConfigError("config key \"vocab_size\": must be >= 6");
  if (max_seq_len < 3) throw ConfigError("config key \"max_seq_len\": must be >= 3");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config key \"dropout\": must lie in [0,1)");
  if (lr <= 0.0) throw ConfigError("config key \"lr\": must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("config: betas must lie in [0,1)");
  if (adam_eps <= 0.0) throw ConfigError("config key \"adam_eps\": must be > 0");
  if (weight_decay < 0.0) throw ConfigError("config key \"weight_decay\": must be >= 0");
  if (batch_size < 1) throw ConfigError("config key \"batch_size\": must be >= 1");
  if (steps < 0) throw ConfigError("config key \"steps\": must be >= 0");
  if (epochs < 0) throw ConfigError("config key \"epochs\": must be >= 0");
  if (candidates < 1) throw ConfigError("config key \"candidates\": must be >= 1");
  if (temperature <= 0.0) throw ConfigError("config key \"temperature\": must be > 0");
  if (group_size < 2) throw ConfigError("config key \"group_size\": must be >= 2");
  if (mine_top_n < 1) throw ConfigError("config key \"mine_top_n\": must be >= 1");
  if (completed_steps < 0) throw ConfigError("config key \"completed_steps\": must be >= 0");
}

void apply_paper_scale(TrainConfig& cfg) {
  cfg.batch_size = paper_scale::kBatchSize;
  cfg.epochs = paper_scale::kEpochs;
  cfg.max_seq_len = paper_scale::kMaxSeqLen;
  cfg.lr = paper_scale::kPretrainLr;
  cfg.group_size = paper_scale::kGroupSize;
  cfg.candidates = paper_scale::kEnhancedCandidates;
  cfg.r_enc = paper_scale::kDefaultEncMaskRatio;
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::set<std::string> seen;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"objective", [&](const std::string&, const std::string& v) { cfg.objective = v; }},
      {"r_enc", [&](const std::string& k, const std::string& v) { cfg.r_enc = parse_double(k, v); }},
      {"r_dec", [&](const std::string& k, const std::string& v) { cfg.r_dec = parse_double(k, v); }},
      {"r_attn", [&](const std::string& k, const std::string& v) { cfg.r_attn = parse_double(k, v); }},
      {"layers", [&](const std::string& k, const std::string& v) { cfg.layers = static_cast<int>(parse_long(k, v)); }},
      {"heads", [&](const std::string& k, const std::string& v) { cfg.heads = static_cast<int>(parse_long(k, v)); }},
      {"hidden", [&](const std::string& k, const std::string& v) { cfg.hidden = static_cast<int>(parse_long(k, v)); }},
      {"ffn", [&](const std::string& k, const std::string& v) { cfg.ffn = static_cast<int>(parse_long(k, v)); }},
      {"vocab_size", [&](const std::string& k, const std::string& v) { cfg.vocab_size = static_cast<int>(parse_long(k, v)); }},
      {"max_seq_len", [&](const std::string& k, const std::string& v) { cfg.max_seq_len = static_cast<int>(parse_long(k, v)); }},
      {"dropout", [&](const std::string& k, const std::string& v) { cfg.dropout = parse_double(k, v); }},
      {"lr", [&](const std::string& k, const std::string& v) { cfg.lr = parse_double(k, v); }},
      {"beta1", [&](const std::string& k, const std::string& v) { cfg.beta1 = parse_double(k, v); }},
      {"beta2", [&](const std::string& k, const std::string& v) { cfg.beta2 = parse_double(k, v); }},
      {"adam_eps", [&](const std::string& k, const std::string& v) { cfg.adam_eps = parse_double(k, v); }},
      {"weight_decay", [&](const std::string& k, const std::string& v) { cfg.weight_decay = parse_double(k, v); }},
      {"batch_size", [&](const std::string& k, const std::string& v) { cfg.batch_size = static_cast<int>(parse_long(k, v)); }},
      {"steps", [&](const std::string& k, const std::string& v) { cfg.steps = parse_long(k, v); }},
      {"epochs", [&](const std::string& k, const std::string& v) { cfg.epochs = static_cast<int>(parse_long(k, v)); }},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = static_cast<std::uint64_t>(parse_long(k, v)); }},
      {"candidates", [&](const std::string& k, const std::string& v) { cfg.candidates = static_cast<int>(parse_long(k, v)); }},
      {"temperature", [&](const std::string& k, const std::string& v) { cfg.temperature = parse_double(k, v); }},
      {"group_size", [&](const std::string& k, const std::string& v) { cfg.group_size = static_cast<int>(parse_long(k, v)); }},
      {"mine_negatives", [&](const std::string& k, const std::string& v) { cfg.mine_negatives = parse_bool(k, v); }},
      {"mine_top_n", [&](const std::string& k, const std::string& v) { cfg.mine_top_n = static_cast<int>(parse_long(k, v)); }},
      {"bag_count_weighted", [&](const std::string& k, const std::string& v) { cfg.bag_count_weighted = parse_bool(k, v); }},
      {"bag_from_masked", [&](const std::string& k, const std::string& v) { cfg.bag_from_masked = parse_bool(k, v); }},
      {"completed_steps", [&](const std::string& k, const std::string& v) { cfg.completed_steps = parse_long(k, v); }},
      {"corpus_path", [&](const std::string&, const std::string& v) { cfg.corpus_path = v; }},
      {"vocab_path", [&](const std::string&, const std::string& v) { cfg.vocab_path = v; }},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value, got \"" + line +
                        "\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key \"" + key + "\"");
    it->second(key, value);
    seen.insert(key);
  }

  // r_enc follows the auto-encoding convention when the user did not pin it.
  if (cfg.objective == "auto_encoding" && !seen.count("r_enc")) cfg.r_enc = 0.30;

  if (const char* env = std::getenv("BOWLAB_SEED")) {
    cfg.seed = static_cast<std::uint64_t>(parse_long("BOWLAB_SEED", env));
  }

  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "objective = " << cfg.objective << '\n';
  os << "r_enc = " << fmt(cfg.r_enc) << '\n';
  os << "r_dec = " << fmt(cfg.r_dec) << '\n';
  os << "r_attn = " << fmt(cfg.r_attn) << '\n';
  os << "layers = " << cfg.layers << '\n';
  os << "heads = " << cfg.heads << '\n';
  os << "hidden = " << cfg.hidden << '\n';
  os << "ffn = " << cfg.ffn << '\n';
  os << "vocab_size = " << cfg.vocab_size << '\n';
  os << "max_seq_len = " << cfg.max_seq_len << '\n';
  os << "dropout = " << fmt(cfg.dropout) << '\n';
  os << "lr = " << fmt(cfg.lr) << '\n';
  os << "beta1 = " << fmt(cfg.beta1) << '\n';
  os << "beta2 = " << fmt(cfg.beta2) << '\n';
  os << "adam_eps = " << fmt(cfg.adam_eps) << '\n';
  os << "weight_decay = " << fmt(cfg.weight_decay) << '\n';
  os << "batch_size = " << cfg.batch_size << '\n';
  os << "steps = " << cfg.steps << '\n';
  os << "epochs = " << cfg.epochs << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "candidates = " << cfg.candidates << '\n';
  os << "temperature = " << fmt(cfg.temperature) << '\n';
  os << "group_size = " << cfg.group_size << '\n';
  os << "mine_negatives = " << (cfg.mine_negatives ? 1 : 0) << '\n';
  os << "mine_top_n = " << cfg.mine_top_n << '\n';
  os << "bag_count_weighted = " << (cfg.bag_count_weighted ? 1 : 0) << '\n';
  os << "bag_from_masked = " << (cfg.bag_from_masked ? 1 : 0) << '\n';
  os << "completed_steps = " << cfg.completed_steps << '\n';
  os << "corpus_path = " << cfg.corpus_path << '\n';
  os << "vocab_path = " << cfg.vocab_path << '\n';
  return os.str();
}

}  // namespace bowlab
