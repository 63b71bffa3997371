#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tagformer/checkpoint.h"
#include "tagformer/corpus.h"
#include "tagformer/eval.h"
#include "tagformer/optimizer.h"

namespace tagformer {

enum class PretrainObjective { kMlm, kMlmNsp, kMlmSop };
std::string to_string(PretrainObjective o);
PretrainObjective parse_objective(const std::string& s);

enum class Task { kBuildVocab, kPretrain, kFinetune, kEvaluate, kPredict, kFix, kScore };
std::string to_string(Task t);

struct RunConfig {
  Task task = Task::kPretrain;

  PretrainObjective objective = PretrainObjective::kMlm;
  bool wwm = true;
  EncoderConfig encoder;
  // encoder keys given explicitly; checked against a loaded checkpoint
  std::map<std::string, std::string> encoder_overrides;

  NerHead head = NerHead::kLcrfNer;
  bool entity_fix = true;
  bool hard_forbidden = false;
  bool freeze_omega = false;

  int epochs = 1;
  int repeat = 1;  // finetune: runs with seeds seed, seed+1, ...
  long samples_per_epoch = 0;  // 0: one pass over the training set (finetune)
  int batch_size = 1;
  std::uint64_t seed = 1;
  AdamWConfig optimizer;
  int vocab_size = 8000;  // build-vocab target

  std::string corpus, vocab, train, dev, test, input, gold, pred;
  std::string checkpoint;  // model to start from / evaluate
  std::string out;         // checkpoint, vocab or tagged output
  std::string metrics;     // metrics log, default <out>.metrics

  bool buckets = false;
  bool oracle = false;  // evaluate gold against itself

  // Throws ConfigError.
  void validate() const;
};

// Config keys accepted by `task`, with their defaults as text.
std::vector<std::pair<std::string, std::string>> config_keys(Task task);
Task parse_task(const std::string& s);

// "key = value" lines, '#' starts a comment. Throws ConfigError.
std::map<std::string, std::string> parse_config_text(std::istream& in);
std::map<std::string, std::string> load_config_file(const std::string& path);

// Task defaults overridden by `values`. Throws ConfigError on unknown keys or
// bad values.
RunConfig make_run_config(Task task, const std::map<std::string, std::string>& values);

struct EpochMetrics {
  int epoch = 0;
  long step = 0;
  std::map<std::string, double> values;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::string log;  // exactly what was written to the metrics file
  long optimizer_steps = 0;
  // finetune with a test set
  std::optional<double> test_f1;
  std::optional<double> test_f1_fixed;
};

// Throws ConfigError / DataError before any training on bad inputs.
TrainResult run_pretraining(const RunConfig& cfg, std::ostream* progress = nullptr);
TrainResult run_finetuning(const RunConfig& cfg, std::ostream* progress = nullptr);

// cfg.repeat fine-tuning runs with consecutive seeds; run k > 0 writes
// <out>.<k>. Returns the per-run results.
std::vector<TrainResult> run_finetuning_repeated(const RunConfig& cfg, std::ostream* progress = nullptr);

struct EvaluationResult {
  ScoreReport entity;
  ScoreReport entity_fixed;
  ScoreReport token;
  std::vector<ScoreReport> buckets;  // empty unless requested
  std::string text;                  // table + key=value lines
};

EvaluationResult run_evaluation(const RunConfig& cfg);

struct PredictionResult {
  std::vector<NerRecord> records;
  std::vector<std::string> errors;  // "record i: ..."
};

// Writes word TAB tag lines to cfg.out (stdout when empty is handled by the
// caller through `out`).
PredictionResult run_prediction(const RunConfig& cfg, std::ostream& out);

// One labeled sentence encoded with specials. Tags cover the content tokens
// only (no [CLS]/[SEP]); sequences over max_seq_len are cut at the tail.
struct NerExample {
  TokenizedText tok;
  std::vector<std::string> token_tags;
  int full_length = 0;  // content tokens before truncation
};

NerExample prepare_example(const NerRecord& record, const Vocabulary& vocab, int max_seq_len);

struct TokenPrediction {
  std::vector<std::string> raw;
  std::vector<std::string> fixed;
};

// Decodes content token tags with the model's head. Throws DataError when
// `tok` exceeds the model's max_seq_len.
TokenPrediction predict_tokens(Model& model, const TokenizedText& tok);

// Token-level predictions -> word tags. Spans are widened to whole words and
// later spans overlapping an earlier one are dropped.
std::vector<std::string> token_tags_to_word_tags(const std::vector<std::string>& content_tags,
                                                 const TokenizedText& tok, int n_content_words);

// Fresh fine-tuning model: encoder parameters of `base` plus a new head.
Model attach_head(const Model& base, NerHead head, const std::vector<std::string>& entities,
                  bool hard_forbidden, Rng& rng);

}  // namespace tagformer
