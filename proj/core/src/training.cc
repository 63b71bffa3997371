#include "tagformer/training.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tagformer/crf.h"
#include "tagformer/decode.h"
#include "tagformer/error.h"
#include "tagformer/ops.h"
#include "tagformer/pretrain_tasks.h"

namespace tagformer {

namespace {

std::string fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sci(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

Vocabulary load_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path);
  return Vocabulary::load(in);
}

// Index stream reshuffled after every full pass.
class ShuffledStream {
 public:
  ShuffledStream(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }
  std::size_t next() {
    if (pos_ == order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

EncoderInput input_of(const TokenizedText& tok, const std::vector<int>& segments = {}) {
  return EncoderInput{tok.token_ids, segments, tok.word_map, tok.n_words};
}

std::vector<int> content_rows(int n) {
  std::vector<int> rows;
  for (int i = 1; i + 1 < n; ++i) rows.push_back(i);
  return rows;
}

std::string format_epoch(const EpochMetrics& m, const std::vector<std::string>& order) {
  std::string line = "epoch=" + std::to_string(m.epoch) + " step=" + std::to_string(m.step);
  for (const auto& k : order) {
    auto it = m.values.find(k);
    if (it == m.values.end()) continue;
    line += " " + k + "=" + (k == "lr" ? sci(it->second) : fixed6(it->second));
  }
  return line + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

std::string metrics_path(const RunConfig& cfg) { return cfg.metrics.empty() ? cfg.out + ".metrics" : cfg.metrics; }

long steps_per_epoch(long samples, int batch) { return (samples + batch - 1) / batch; }

// Pre-training sample: consecutive sentences packed up to max_len (MLM
// only) or a sentence pair.
PretrainSample make_pretrain_sample(const RunConfig& cfg, const std::vector<Document>& docs,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& starts,
                                    ShuffledStream& stream, const Vocabulary& vocab, int max_len, Rng& rng) {
  if (cfg.objective == PretrainObjective::kMlm) {
    const auto [d, s0] = starts[stream.next()];
    const auto& sents = docs[d].sentences;
    std::vector<std::string> words = sents[s0];
    int used = encode(words, vocab, false).size();
    for (std::size_t s = s0 + 1; s < sents.size(); ++s) {
      const int extra = encode(sents[s], vocab, false).size();
      if (used + extra > max_len - 2) break;
      words.insert(words.end(), sents[s].begin(), sents[s].end());
      used += extra;
    }
    return apply_masking(encode_single(words, vocab, max_len), vocab, cfg.wwm, rng);
  }
  const PairMode mode = cfg.objective == PretrainObjective::kMlmNsp ? PairMode::kNsp : PairMode::kSop;
  const SentencePair pair = sample_sentence_pair(docs, mode, rng);
  std::vector<int> segments;
  const TokenizedText tok = encode_pair(pair.first, pair.second, vocab, max_len, segments);
  PretrainSample sample = apply_masking(tok, vocab, cfg.wwm, rng, segments);
  sample.pair_label = pair.label;
  return sample;
}

std::vector<std::string> diff_encoder(const EncoderConfig& have, const std::map<std::string, std::string>& want) {
  std::vector<std::string> out;
  const auto fields = have.to_fields();
  for (const auto& [k, v] : want) {
    if (k == "max_seq_len") continue;
    auto it = fields.find(k);
    if (it != fields.end() && it->second != v) out.push_back(k + " (config " + v + ", checkpoint " + it->second + ")");
  }
  return out;
}

struct DecodedSet {
  TagSequences gold;
  TagSequences raw;
  TagSequences fixed;
  std::vector<int> lengths;
};

DecodedSet decode_records(Model& model, const std::vector<NerRecord>& records, bool oracle) {
  DecodedSet out;
  for (const auto& r : records) {
    const NerExample ex = prepare_example(r, model.vocab, model.encoder.max_seq_len);
    std::vector<std::string> raw, fixed;
    if (oracle) {
      raw = fixed = ex.token_tags;
    } else {
      TokenPrediction p = predict_tokens(model, ex.tok);
      raw = std::move(p.raw);
      fixed = std::move(p.fixed);
    }
    std::vector<std::string> gold = ex.token_tags;
    if (ex.full_length > static_cast<int>(gold.size())) {
      // truncated input: gold keeps its full length, the cut tail is predicted O
      gold = align_tags_to_tokens(r, encode(r.words, model.vocab, true));
      gold = std::vector<std::string>(gold.begin() + 1, gold.end() - 1);
      raw.resize(gold.size(), "O");
      fixed.resize(gold.size(), "O");
    }
    out.lengths.push_back(ex.full_length + 2);
    out.gold.push_back(std::move(gold));
    out.raw.push_back(std::move(raw));
    out.fixed.push_back(std::move(fixed));
  }
  return out;
}

std::vector<int> classes_of(const std::vector<std::string>& tags, const TagScheme& scheme) {
  std::vector<int> out;
  for (const auto& t : tags) out.push_back(scheme.class_of(t));
  return out;
}

bool looks_unlabeled(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".txt") == 0) return true;
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return false;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    return line.find('\t') == std::string::npos;
  }
  return false;
}

std::vector<NerRecord> load_unlabeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<NerRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ws(line);
    NerRecord r;
    for (std::string w; ws >> w;) {
      r.words.push_back(w);
      r.tags.push_back("O");
    }
    if (!r.words.empty()) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

NerExample prepare_example(const NerRecord& record, const Vocabulary& vocab, int max_seq_len) {
  if (max_seq_len < 3) throw ConfigError("max_seq_len must be at least 3");
  NerExample ex;
  TokenizedText tok = encode(record.words, vocab, true);
  std::vector<std::string> tags = align_tags_to_tokens(record, tok);
  ex.full_length = tok.size() - 2;
  if (tok.size() > max_seq_len) {
    tok.token_ids.resize(max_seq_len - 1);
    tok.word_map.resize(max_seq_len - 1);
    tok.token_ids.push_back(kSepId);
    tok.word_map.push_back(tok.word_map.back() + 1);
    tok.n_words = tok.word_map.back() + 1;
    tags.resize(max_seq_len - 1);
  } else {
    tags.pop_back();
  }
  ex.token_tags.assign(tags.begin() + 1, tags.end());
  ex.tok = std::move(tok);
  return ex;
}

TokenPrediction predict_tokens(Model& model, const TokenizedText& tok) {
  if (!model.head) throw ConfigError("checkpoint has no NER head; fine-tune it first");
  const TagScheme scheme(model.entities);
  Graph<float> g;
  const EncoderTrace trace = encoder_forward(g, model.params, model.encoder, input_of(tok));
  const std::vector<int> rows = content_rows(tok.size());
  Var content = gather_rows(g, trace.hidden, std::span<const int>(rows));
  TokenPrediction p;
  switch (*model.head) {
    case NerHead::kSft: {
      const auto& y = g.value(ner_emissions(g, model.params, content));
      for (int i = 0; i < y.rows(); ++i) p.raw.push_back(scheme.tag_of(argmax_row(y, i)));
      break;
    }
    case NerHead::kCse: {
      const CseOutput out = cse_output(g, cse_logits(g, model.params, content));
      p.raw = spans_to_tags(cse_decode(out, model.entities), static_cast<int>(rows.size()));
      break;
    }
    case NerHead::kLcrf:
    case NerHead::kLcrfNer: {
      const auto& y = g.value(ner_emissions(g, model.params, content));
      const auto& t = g.value(crf_transitions(g, model.params, *model.head, scheme, model.hard_forbidden));
      for (int c : viterbi_decode(y, t)) p.raw.push_back(scheme.tag_of(c));
      break;
    }
  }
  p.fixed = entity_fix(p.raw);
  return p;
}

std::vector<std::string> token_tags_to_word_tags(const std::vector<std::string>& content_tags,
                                                 const TokenizedText& tok, int n_content_words) {
  std::vector<EntitySpan> words;
  int last_end = -1;
  for (const auto& s : extract_entities(content_tags)) {
    const int ws = tok.word_map[s.start + 1] - 1;
    const int we = tok.word_map[s.end + 1] - 1;
    if (ws <= last_end || we >= n_content_words) continue;
    words.push_back({s.label, ws, we});
    last_end = we;
  }
  return spans_to_tags(words, n_content_words);
}

Model attach_head(const Model& base, NerHead head, const std::vector<std::string>& entities, bool hard_forbidden,
                  Rng& rng) {
  Model m;
  m.encoder = base.encoder;
  m.vocab = base.vocab;
  m.objective = base.objective;
  m.head = head;
  m.entities = entities;
  m.hard_forbidden = hard_forbidden;
  for (const auto* p : base.params.all()) {
    if (p->name.rfind("heads.", 0) == 0) continue;
    m.params.add(p->name, p->value);
  }
  init_ner_head(m.params, m.encoder.d_model, TagScheme(entities), head, rng);
  return m;
}

TrainResult run_pretraining(const RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  std::ifstream corpus_in(cfg.corpus);
  if (!corpus_in) throw DataError("cannot open corpus " + cfg.corpus);
  const std::vector<Document> docs = parse_pretraining_corpus(corpus_in);
  if (docs.empty()) throw DataError("corpus " + cfg.corpus + " is empty");

  Model model;
  model.vocab = load_vocab_file(cfg.vocab);
  model.encoder = cfg.encoder;
  model.encoder.vocab_size = model.vocab.size();
  model.encoder.validate();
  model.objective = to_string(cfg.objective);

  std::vector<std::pair<std::size_t, std::size_t>> starts;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t s = 0; s < docs[d].sentences.size(); ++s) starts.emplace_back(d, s);
  }
  const bool paired = cfg.objective != PretrainObjective::kMlm;
  if (paired) {
    Rng probe(cfg.seed);
    sample_sentence_pair(docs, cfg.objective == PretrainObjective::kMlmNsp ? PairMode::kNsp : PairMode::kSop, probe);
  }

  Rng rng(cfg.seed);
  init_encoder_params(model.params, model.encoder, rng);
  init_mlm_head(model.params, model.encoder.d_model, model.vocab.size(), rng);
  if (paired) init_pair_head(model.params, model.encoder.d_model, rng);

  const long per_epoch = steps_per_epoch(cfg.samples_per_epoch, cfg.batch_size);
  AdamW opt(cfg.optimizer, per_epoch * cfg.epochs);
  ShuffledStream stream(starts.size(), rng);
  const std::string pair_name = cfg.objective == PretrainObjective::kMlmNsp ? "nsp" : "sop";
  const std::vector<std::string> order = {"mlm_loss", "mlm_acc", pair_name + "_loss", pair_name + "_acc", "lr"};

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double mlm_sum = 0, pair_sum = 0;
    long mlm_correct = 0, mlm_total = 0, pair_correct = 0, samples = 0;
    long remaining = cfg.samples_per_epoch;
    for (long step = 0; step < per_epoch; ++step) {
      const int b = static_cast<int>(std::min<long>(cfg.batch_size, remaining));
      remaining -= b;
      model.params.zero_grad();
      for (int k = 0; k < b; ++k) {
        const PretrainSample sample =
            make_pretrain_sample(cfg, docs, starts, stream, model.vocab, model.encoder.max_seq_len, rng);
        Graph<float> g;
        const EncoderInput in{sample.input_ids, sample.segment_ids, sample.word_map, sample.n_words};
        const EncoderTrace trace = encoder_forward(g, model.params, model.encoder, in);
        const MlmResult mlm = mlm_loss(g, model.params, trace.hidden, std::span<const MlmTarget>(sample.mlm_targets));
        Var loss = mlm.loss;
        mlm_sum += g.value(mlm.loss)[0];
        mlm_correct += mlm.correct;
        mlm_total += mlm.total;
        if (paired) {
          Var logit = pair_logit(g, model.params, trace.hidden);
          Var pl = pair_loss(g, model.params, trace.hidden, *sample.pair_label);
          pair_sum += g.value(pl)[0];
          pair_correct += (g.value(logit)[0] > 0 ? 1 : 0) == *sample.pair_label ? 1 : 0;
          loss = add(g, loss, pl);
        }
        if (!std::isfinite(g.value(loss)[0])) throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
        g.backward(loss, 1.0f / static_cast<float>(b));
        ++samples;
      }
      opt.step(model.params);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.step = opt.steps();
    m.values["mlm_loss"] = mlm_sum / samples;
    m.values["mlm_acc"] = mlm_total ? static_cast<double>(mlm_correct) / mlm_total : 0.0;
    if (paired) {
      m.values[pair_name + "_loss"] = pair_sum / samples;
      m.values[pair_name + "_acc"] = static_cast<double>(pair_correct) / samples;
    }
    m.values["lr"] = opt.learning_rate_at(opt.steps());
    const std::string line = format_epoch(m, order);
    result.log += line;
    if (progress) *progress << line << std::flush;
    result.epochs.push_back(std::move(m));
  }
  result.optimizer_steps = opt.steps();
  save_model(model, cfg.out);
  write_text(metrics_path(cfg), result.log);
  return result;
}

TrainResult run_finetuning(const RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const std::vector<NerRecord> train = load_dataset(cfg.train);
  if (train.empty()) throw DataError("training set " + cfg.train + " is empty");
  const std::vector<NerRecord> dev = cfg.dev.empty() ? std::vector<NerRecord>{} : load_dataset(cfg.dev);
  const std::vector<NerRecord> test = cfg.test.empty() ? std::vector<NerRecord>{} : load_dataset(cfg.test);
  std::vector<NerRecord> all = train;
  all.insert(all.end(), dev.begin(), dev.end());
  all.insert(all.end(), test.begin(), test.end());
  const std::vector<std::string> entities = collect_entities(all);
  if (entities.empty()) throw DataError("training data has no entities");
  const TagScheme scheme(entities);

  Rng rng(cfg.seed);
  Model base;
  if (!cfg.checkpoint.empty()) {
    base = load_model(cfg.checkpoint);
    const auto diff = diff_encoder(base.encoder, cfg.encoder_overrides);
    if (!diff.empty()) {
      std::string msg = "architecture differs from checkpoint:";
      for (const auto& d : diff) msg += "\n  " + d;
      throw ConfigError(msg);
    }
    if (cfg.encoder_overrides.count("max_seq_len")) base.encoder.max_seq_len = cfg.encoder.max_seq_len;
  } else {
    base.vocab = load_vocab_file(cfg.vocab);
    base.encoder = cfg.encoder;
    base.encoder.vocab_size = base.vocab.size();
    base.encoder.validate();
    init_encoder_params(base.params, base.encoder, rng);
  }
  Model model = attach_head(base, cfg.head, entities, cfg.hard_forbidden, rng);
  if (cfg.freeze_omega && cfg.head == NerHead::kLcrfNer) {
    model.params.get("heads.ner.omega_factor").frozen = true;
    model.params.get("heads.ner.omega_absolute").frozen = true;
  }

  struct Prepared {
    NerExample ex;
    std::vector<int> classes;
    CseTargets cse;
  };
  std::vector<Prepared> examples;
  for (const auto& r : train) {
    Prepared p{prepare_example(r, model.vocab, model.encoder.max_seq_len), {}, {}};
    p.classes = classes_of(p.ex.token_tags, scheme);
    if (cfg.head == NerHead::kCse) p.cse = cse_targets(p.ex.token_tags, scheme);
    examples.push_back(std::move(p));
  }

  const long samples_per_epoch = cfg.samples_per_epoch > 0 ? cfg.samples_per_epoch : static_cast<long>(train.size());
  const long per_epoch = steps_per_epoch(samples_per_epoch, cfg.batch_size);
  AdamW opt(cfg.optimizer, per_epoch * cfg.epochs);
  ShuffledStream stream(examples.size(), rng);
  const std::vector<std::string> order = {"loss", "dev_f1", "dev_f1_fixed", "lr"};

  TrainResult result;
  double best = -1;
  int best_epoch = 0;
  std::vector<Matrix<float>> best_values;
  auto snapshot = [&] {
    best_values.clear();
    for (const auto* p : model.params.all()) best_values.push_back(p->value);
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0;
    long samples = 0;
    long remaining = samples_per_epoch;
    for (long step = 0; step < per_epoch; ++step) {
      const int b = static_cast<int>(std::min<long>(cfg.batch_size, remaining));
      remaining -= b;
      model.params.zero_grad();
      for (int k = 0; k < b; ++k) {
        const Prepared& p = examples[stream.next()];
        Graph<float> g;
        const EncoderTrace trace = encoder_forward(g, model.params, model.encoder, input_of(p.ex.tok));
        const int n = p.ex.tok.size();
        Var loss;
        if (cfg.head == NerHead::kLcrf || cfg.head == NerHead::kLcrfNer) {
          std::vector<int> full(n, scheme.outside_class());
          std::copy(p.classes.begin(), p.classes.end(), full.begin() + 1);
          loss = lcrf_loss(g, model.params, trace.hidden, std::span<const int>(full), cfg.head, scheme, 1, n - 1,
                           cfg.hard_forbidden);
        } else {
          const std::vector<int> rows = content_rows(n);
          Var content = gather_rows(g, trace.hidden, std::span<const int>(rows));
          loss = cfg.head == NerHead::kSft ? sft_loss(g, model.params, content, std::span<const int>(p.classes))
                                           : cse_loss(g, model.params, content, p.cse);
        }
        const double value = g.value(loss)[0];
        if (!std::isfinite(value)) throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
        loss_sum += value;
        g.backward(loss, 1.0f / static_cast<float>(b));
        ++samples;
      }
      opt.step(model.params);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.step = opt.steps();
    m.values["loss"] = loss_sum / samples;
    if (!dev.empty()) {
      const DecodedSet d = decode_records(model, dev, false);
      m.values["dev_f1"] = entity_f1(d.raw, d.gold).f1();
      m.values["dev_f1_fixed"] = entity_f1(d.fixed, d.gold).f1();
      if (m.values["dev_f1_fixed"] > best) {
        best = m.values["dev_f1_fixed"];
        best_epoch = epoch;
        snapshot();
      }
    } else {
      best_epoch = epoch;
      snapshot();
    }
    m.values["lr"] = opt.learning_rate_at(opt.steps());
    const std::string line = format_epoch(m, order);
    result.log += line;
    if (progress) *progress << line << std::flush;
    result.epochs.push_back(std::move(m));
  }

  auto params = model.params.all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];

  std::string final_line = "best_epoch=" + std::to_string(best_epoch);
  if (!test.empty()) {
    const DecodedSet d = decode_records(model, test, false);
    result.test_f1 = entity_f1(d.raw, d.gold).f1();
    result.test_f1_fixed = entity_f1(d.fixed, d.gold).f1();
    final_line += " test_f1=" + fixed6(*result.test_f1);
    final_line += " test_f1_fixed=" + fixed6(*result.test_f1_fixed);
  }
  final_line += "\n";
  result.log += final_line;
  if (progress) *progress << final_line << std::flush;

  result.optimizer_steps = opt.steps();
  save_model(model, cfg.out);
  write_text(metrics_path(cfg), result.log);
  return result;
}

std::vector<TrainResult> run_finetuning_repeated(const RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  std::vector<TrainResult> runs;
  double sum = 0, sum_fixed = 0;
  for (int k = 0; k < cfg.repeat; ++k) {
    RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(k);
    if (k > 0) {
      c.out = cfg.out + "." + std::to_string(k);
      if (!cfg.metrics.empty()) c.metrics = cfg.metrics + "." + std::to_string(k);
    }
    if (progress && cfg.repeat > 1) *progress << "run " << k + 1 << "/" << cfg.repeat << " seed=" << c.seed << '\n';
    runs.push_back(run_finetuning(c, progress));
    sum += runs.back().test_f1.value_or(0.0);
    sum_fixed += runs.back().test_f1_fixed.value_or(0.0);
  }
  if (progress && cfg.repeat > 1 && runs.front().test_f1) {
    *progress << "mean_test_f1=" << fixed6(sum / cfg.repeat) << " mean_test_f1_fixed=" << fixed6(sum_fixed / cfg.repeat)
              << '\n';
  }
  return runs;
}

EvaluationResult run_evaluation(const RunConfig& cfg) {
  cfg.validate();
  if (looks_unlabeled(cfg.input)) {
    throw DataError(cfg.input + " has no gold tags; use 'predict' for unlabeled input");
  }
  const std::vector<NerRecord> records = load_dataset(cfg.input);
  Model model;
  if (!cfg.checkpoint.empty()) {
    model = load_model(cfg.checkpoint);
  } else {
    model.vocab = load_vocab_file(cfg.vocab);
  }
  const DecodedSet d = decode_records(model, records, cfg.oracle);
  EvaluationResult r;
  r.entity = entity_f1(d.raw, d.gold);
  r.entity_fixed = entity_f1(d.fixed, d.gold);
  const TagSequences& headline = cfg.entity_fix ? d.fixed : d.raw;
  r.token = token_f1(headline, d.gold);
  if (cfg.buckets) r.buckets = length_bucketed_f1(d.lengths, headline, d.gold);

  std::ostringstream os;
  os << "entity F1\n" << format_table(r.entity);
  if (cfg.entity_fix) os << "\nentity F1 with entity fix\n" << format_table(r.entity_fixed);
  os << "\ntoken F1\n" << format_table(r.token) << '\n';
  os << format_key_values("entity", r.entity);
  if (cfg.entity_fix) os << format_key_values("entity_fixed", r.entity_fixed);
  os << format_key_values("token", r.token);
  for (std::size_t i = 0; i < r.buckets.size(); ++i) {
    os << "bucket" << i + 1 << ".f1=" << fixed6(r.buckets[i].f1()) << '\n';
    os << "bucket" << i + 1 << ".support=" << r.buckets[i].support() << '\n';
  }
  r.text = os.str();
  return r;
}

PredictionResult run_prediction(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const std::vector<NerRecord> input = looks_unlabeled(cfg.input) ? load_unlabeled(cfg.input) : load_dataset(cfg.input);
  Model model = load_model(cfg.checkpoint);
  PredictionResult r;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const NerRecord& rec = input[i];
    const TokenizedText tok = encode(rec.words, model.vocab, true);
    if (tok.size() > model.encoder.max_seq_len) {
      r.errors.push_back("record " + std::to_string(i) + ": " + std::to_string(tok.size()) +
                         " tokens exceed max_seq_len " + std::to_string(model.encoder.max_seq_len));
      continue;
    }
    const TokenPrediction p = predict_tokens(model, tok);
    NerRecord outrec{rec.words,
                     token_tags_to_word_tags(cfg.entity_fix ? p.fixed : p.raw, tok, static_cast<int>(rec.words.size()))};
    r.records.push_back(std::move(outrec));
  }
  serialize_conll(r.records, out);
  return r;
}

}  // namespace tagformer
