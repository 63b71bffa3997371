#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "tagformer/error.h"
#include "tagformer/training.h"

namespace tagformer {

namespace {

using KeyList = std::vector<std::pair<std::string, std::string>>;

const std::set<std::string> kEncoderKeys = {"d_model",       "n_heads", "n_layers",       "ffn_dim",
                                            "clip_distance", "window",  "attention_mode", "max_seq_len"};

KeyList encoder_keys() {
  const EncoderConfig e;
  return {{"d_model", std::to_string(e.d_model)},
          {"n_heads", std::to_string(e.n_heads)},
          {"n_layers", std::to_string(e.n_layers)},
          {"ffn_dim", std::to_string(e.ffn_dim)},
          {"clip_distance", std::to_string(e.clip_distance)},
          {"window", std::to_string(e.window)},
          {"attention_mode", to_string(e.mode)},
          {"max_seq_len", std::to_string(e.max_seq_len)}};
}

KeyList optimizer_keys(const std::string& lr) {
  return {{"learning_rate", lr},  {"beta1", "0.9"},           {"beta2", "0.999"},  {"adam_eps", "1e-8"},
          {"weight_decay", "0.01"}, {"warmup_fraction", "0.1"}, {"grad_clip", "1.0"}};
}

void append(KeyList& a, const KeyList& b) { a.insert(a.end(), b.begin(), b.end()); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for '" + key + "': '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad value for '" + key + "': '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad value for '" + key + "': '" + v + "' (expected true/false)");
}

}  // namespace

std::string to_string(PretrainObjective o) {
  switch (o) {
    case PretrainObjective::kMlm:
      return "mlm";
    case PretrainObjective::kMlmNsp:
      return "mlm+nsp";
    case PretrainObjective::kMlmSop:
      return "mlm+sop";
  }
  return "?";
}

PretrainObjective parse_objective(const std::string& s) {
  if (s == "mlm") return PretrainObjective::kMlm;
  if (s == "mlm+nsp") return PretrainObjective::kMlmNsp;
  if (s == "mlm+sop") return PretrainObjective::kMlmSop;
  throw ConfigError("unknown objective '" + s + "' (mlm, mlm+nsp, mlm+sop)");
}

std::string to_string(Task t) {
  switch (t) {
    case Task::kBuildVocab:
      return "build-vocab";
    case Task::kPretrain:
      return "pretrain";
    case Task::kFinetune:
      return "finetune";
    case Task::kEvaluate:
      return "evaluate";
    case Task::kPredict:
      return "predict";
    case Task::kFix:
      return "fix";
    case Task::kScore:
      return "score";
  }
  return "?";
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::kBuildVocab, Task::kPretrain, Task::kFinetune, Task::kEvaluate, Task::kPredict, Task::kFix,
                 Task::kScore}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown task '" + s + "'");
}

std::vector<std::pair<std::string, std::string>> config_keys(Task task) {
  KeyList keys;
  switch (task) {
    case Task::kBuildVocab:
      keys = {{"corpus", ""}, {"out", ""}, {"vocab_size", "8000"}};
      break;
    case Task::kPretrain:
      keys = {{"corpus", ""},     {"vocab", ""},    {"out", ""},         {"metrics", ""},
              {"objective", "mlm"}, {"wwm", "true"}, {"epochs", "500"}, {"samples_per_epoch", "100000"},
              {"batch_size", "48"}, {"seed", "1"}};
      append(keys, encoder_keys());
      append(keys, optimizer_keys("1e-4"));
      break;
    case Task::kFinetune:
      keys = {{"checkpoint", ""},      {"vocab", ""},          {"train", ""},           {"dev", ""},
              {"test", ""},            {"out", ""},            {"metrics", ""},         {"head", "lcrf_ner"},
              {"entity_fix", "true"},  {"hard_forbidden", "false"}, {"freeze_omega", "false"},
              {"epochs", "30"},        {"repeat", "1"},             {"samples_per_epoch", "0"}, {"batch_size", "16"}, {"seed", "1"}};
      append(keys, encoder_keys());
      append(keys, optimizer_keys("5e-5"));
      break;
    case Task::kEvaluate:
      keys = {{"checkpoint", ""}, {"vocab", ""},      {"input", ""},      {"out", ""},
              {"entity_fix", "true"}, {"buckets", "false"}, {"oracle", "false"}, {"seed", "1"}};
      break;
    case Task::kPredict:
      keys = {{"checkpoint", ""}, {"input", ""}, {"out", ""}, {"entity_fix", "true"}, {"seed", "1"}};
      break;
    case Task::kFix:
      keys = {{"input", ""}, {"out", ""}, {"seed", "1"}};
      break;
    case Task::kScore:
      keys = {{"gold", ""}, {"pred", ""}, {"out", ""}, {"seed", "1"}};
      break;
  }
  return keys;
}

std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config_text(in);
}

RunConfig make_run_config(Task task, const std::map<std::string, std::string>& values) {
  std::map<std::string, std::string> v;
  for (const auto& [k, d] : config_keys(task)) v[k] = d;
  for (const auto& [k, val] : values) {
    if (!v.count(k)) throw ConfigError("unknown config key '" + k + "' for " + to_string(task));
    v[k] = val;
  }

  RunConfig c;
  c.task = task;
  auto has = [&](const char* k) { return v.count(k) > 0; };
  auto str = [&](const char* k, std::string& dst) {
    if (has(k)) dst = v[k];
  };
  str("corpus", c.corpus);
  str("vocab", c.vocab);
  str("train", c.train);
  str("dev", c.dev);
  str("test", c.test);
  str("input", c.input);
  str("gold", c.gold);
  str("pred", c.pred);
  str("checkpoint", c.checkpoint);
  str("out", c.out);
  str("metrics", c.metrics);

  if (has("objective")) c.objective = parse_objective(v["objective"]);
  if (has("wwm")) c.wwm = parse_bool("wwm", v["wwm"]);
  if (has("head")) c.head = parse_ner_head(v["head"]);
  if (has("entity_fix")) c.entity_fix = parse_bool("entity_fix", v["entity_fix"]);
  if (has("hard_forbidden")) c.hard_forbidden = parse_bool("hard_forbidden", v["hard_forbidden"]);
  if (has("freeze_omega")) c.freeze_omega = parse_bool("freeze_omega", v["freeze_omega"]);
  if (has("buckets")) c.buckets = parse_bool("buckets", v["buckets"]);
  if (has("oracle")) c.oracle = parse_bool("oracle", v["oracle"]);
  if (has("epochs")) c.epochs = parse_number<int>("epochs", v["epochs"]);
  if (has("repeat")) c.repeat = parse_number<int>("repeat", v["repeat"]);
  if (has("samples_per_epoch")) c.samples_per_epoch = parse_number<long>("samples_per_epoch", v["samples_per_epoch"]);
  if (has("batch_size")) c.batch_size = parse_number<int>("batch_size", v["batch_size"]);
  if (has("seed")) c.seed = parse_number<std::uint64_t>("seed", v["seed"]);
  if (has("vocab_size")) c.vocab_size = parse_number<int>("vocab_size", v["vocab_size"]);

  if (has("learning_rate")) c.optimizer.learning_rate = parse_double("learning_rate", v["learning_rate"]);
  if (has("beta1")) c.optimizer.beta1 = parse_double("beta1", v["beta1"]);
  if (has("beta2")) c.optimizer.beta2 = parse_double("beta2", v["beta2"]);
  if (has("adam_eps")) c.optimizer.eps = parse_double("adam_eps", v["adam_eps"]);
  if (has("weight_decay")) c.optimizer.weight_decay = parse_double("weight_decay", v["weight_decay"]);
  if (has("warmup_fraction")) c.optimizer.warmup_fraction = parse_double("warmup_fraction", v["warmup_fraction"]);
  if (has("grad_clip")) c.optimizer.grad_clip = parse_double("grad_clip", v["grad_clip"]);

  for (const auto& k : kEncoderKeys) {
    if (!has(k.c_str())) continue;
    if (values.count(k)) c.encoder_overrides[k] = v[k];
  }
  if (has("d_model")) {
    c.encoder.d_model = parse_number<int>("d_model", v["d_model"]);
    c.encoder.n_heads = parse_number<int>("n_heads", v["n_heads"]);
    c.encoder.n_layers = parse_number<int>("n_layers", v["n_layers"]);
    c.encoder.ffn_dim = parse_number<int>("ffn_dim", v["ffn_dim"]);
    c.encoder.clip_distance = parse_number<int>("clip_distance", v["clip_distance"]);
    c.encoder.window = parse_number<int>("window", v["window"]);
    c.encoder.mode = parse_attention_mode(v["attention_mode"]);
    c.encoder.max_seq_len = parse_number<int>("max_seq_len", v["max_seq_len"]);
  }
  return c;
}

void RunConfig::validate() const {
  auto need = [&](const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(to_string(task) + " needs '" + key + "'");
  };
  auto positive = [](long value, const char* key) {
    if (value < 1) throw ConfigError(std::string("'") + key + "' must be positive");
  };
  switch (task) {
    case Task::kBuildVocab:
      need(corpus, "corpus");
      need(out, "out");
      positive(vocab_size, "vocab_size");
      return;
    case Task::kPretrain:
      need(corpus, "corpus");
      need(vocab, "vocab");
      need(out, "out");
      positive(samples_per_epoch, "samples_per_epoch");
      break;
    case Task::kFinetune:
      need(train, "train");
      need(out, "out");
      if (checkpoint.empty() && vocab.empty()) throw ConfigError("finetune needs 'checkpoint' or 'vocab'");
      if (samples_per_epoch < 0) throw ConfigError("'samples_per_epoch' must not be negative");
      positive(repeat, "repeat");
      break;
    case Task::kEvaluate:
      need(input, "input");
      if (checkpoint.empty() && !(oracle && !vocab.empty())) {
        throw ConfigError("evaluate needs 'checkpoint' (or 'oracle' with 'vocab')");
      }
      return;
    case Task::kPredict:
      need(input, "input");
      need(checkpoint, "checkpoint");
      return;
    case Task::kFix:
      need(input, "input");
      return;
    case Task::kScore:
      need(gold, "gold");
      need(pred, "pred");
      return;
  }
  positive(epochs, "epochs");
  positive(batch_size, "batch_size");
  const auto& o = optimizer;
  if (!(o.learning_rate > 0)) throw ConfigError("'learning_rate' must be positive");
  if (!(o.beta1 >= 0 && o.beta1 < 1) || !(o.beta2 >= 0 && o.beta2 < 1)) throw ConfigError("betas must be in [0, 1)");
  if (!(o.eps > 0)) throw ConfigError("'adam_eps' must be positive");
  if (!(o.weight_decay >= 0)) throw ConfigError("'weight_decay' must not be negative");
  if (!(o.warmup_fraction >= 0 && o.warmup_fraction <= 1)) throw ConfigError("'warmup_fraction' must be in [0, 1]");
  if (!(o.grad_clip >= 0)) throw ConfigError("'grad_clip' must not be negative");
  EncoderConfig e = encoder;
  e.vocab_size = std::max(e.vocab_size, 1);
  e.validate();
}

}  // namespace tagformer
