#include "tagformer/encoder.h"

#include <cmath>

#include "tagformer/error.h"
#include "tagformer/ops.h"

namespace tagformer {

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::kAbsFull:
      return "abs_full";
    case AttentionMode::kRelFull:
      return "rel_full";
    case AttentionMode::kWwa:
      return "wwa";
  }
  return "?";
}

AttentionMode parse_attention_mode(const std::string& s) {
  if (s == "abs_full") return AttentionMode::kAbsFull;
  if (s == "rel_full") return AttentionMode::kRelFull;
  if (s == "wwa") return AttentionMode::kWwa;
  throw ConfigError("unknown attention mode '" + s + "' (abs_full, rel_full, wwa)");
}

void EncoderConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("encoder config: " + m); };
  if (vocab_size <= 0) fail("vocab_size must be positive");
  if (d_model <= 0 || n_heads <= 0 || n_layers <= 0 || ffn_dim <= 0) fail("sizes must be positive");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (clip_distance < 1) fail("clip_distance must be >= 1");
  if (window < 0) fail("window must be >= 0");
  if (max_seq_len < 3) fail("max_seq_len must be >= 3");
  if (!(layer_norm_eps > 0)) fail("layer_norm_eps must be positive");
}

std::map<std::string, std::string> EncoderConfig::to_fields() const {
  char eps[32];
  std::snprintf(eps, sizeof eps, "%.17g", layer_norm_eps);
  return {{"vocab_size", std::to_string(vocab_size)},   {"d_model", std::to_string(d_model)},
          {"n_heads", std::to_string(n_heads)},         {"n_layers", std::to_string(n_layers)},
          {"ffn_dim", std::to_string(ffn_dim)},         {"clip_distance", std::to_string(clip_distance)},
          {"window", std::to_string(window)},           {"attention_mode", to_string(mode)},
          {"max_seq_len", std::to_string(max_seq_len)}, {"layer_norm_eps", eps}};
}

EncoderConfig EncoderConfig::from_fields(const std::map<std::string, std::string>& f) {
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = f.find(k);
    if (it == f.end()) throw DataError("encoder config: missing field '" + k + "'");
    return it->second;
  };
  EncoderConfig c;
  try {
    c.vocab_size = std::stoi(get("vocab_size"));
    c.d_model = std::stoi(get("d_model"));
    c.n_heads = std::stoi(get("n_heads"));
    c.n_layers = std::stoi(get("n_layers"));
    c.ffn_dim = std::stoi(get("ffn_dim"));
    c.clip_distance = std::stoi(get("clip_distance"));
    c.window = std::stoi(get("window"));
    c.max_seq_len = std::stoi(get("max_seq_len"));
    c.layer_norm_eps = std::stod(get("layer_norm_eps"));
  } catch (const std::logic_error&) {
    throw DataError("encoder config: non-numeric field");
  }
  c.mode = parse_attention_mode(get("attention_mode"));
  return c;
}

namespace {

template <typename T>
Matrix<T> normal_matrix(int rows, int cols, double stddev, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<T>(stddev * rng.normal());
  return m;
}

template <typename T>
Matrix<T> glorot(int rows, int cols, Rng& rng) {
  return normal_matrix<T>(rows, cols, std::sqrt(2.0 / (rows + cols)), rng);
}

template <typename T>
void init_attention_block(ParameterStore<T>& s, const std::string& p, const EncoderConfig& cfg,
                          bool relative, Rng& rng) {
  const int d = cfg.d_model;
  s.add(p + ".wq", glorot<T>(d, d, rng));
  s.add(p + ".wk", glorot<T>(d, d, rng));
  s.add(p + ".wv", glorot<T>(d, d, rng));
  s.add(p + ".wo", glorot<T>(d, d, rng));
  s.add(p + ".bo", Matrix<T>(1, d));
  if (relative) {
    const int rows = 2 * cfg.clip_distance + 1;
    s.add(p + ".rel_key", normal_matrix<T>(rows, cfg.head_dim(), 0.02, rng));
    s.add(p + ".rel_value", normal_matrix<T>(rows, cfg.head_dim(), 0.02, rng));
  }
}

template <typename T>
void init_norm(ParameterStore<T>& s, const std::string& p, int d) {
  s.add(p + ".gain", Matrix<T>(1, d, T(1)));
  s.add(p + ".bias", Matrix<T>(1, d));
}

template <typename T>
Var P(Graph<T>& g, ParameterStore<T>& s, const std::string& name) {
  return g.param(s.get(name));
}

template <typename T>
Var norm(Graph<T>& g, ParameterStore<T>& s, const std::string& p, Var x, const EncoderConfig& cfg) {
  return layer_norm(g, x, P(g, s, p + ".gain"), P(g, s, p + ".bias"), static_cast<T>(cfg.layer_norm_eps));
}

}  // namespace

template <typename T>
void init_encoder_params(ParameterStore<T>& s, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.d_model;
  s.add("embeddings.token", normal_matrix<T>(cfg.vocab_size, d, 1.0, rng));
  s.add("embeddings.segment", normal_matrix<T>(2, d, 0.02, rng));
  init_norm(s, "embeddings.norm", d);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    switch (cfg.mode) {
      case AttentionMode::kAbsFull:
        init_attention_block(s, p + ".attn", cfg, false, rng);
        break;
      case AttentionMode::kRelFull:
        init_attention_block(s, p + ".attn", cfg, true, rng);
        break;
      case AttentionMode::kWwa:
        init_attention_block(s, p + ".wwa", cfg, true, rng);
        init_attention_block(s, p + ".wind", cfg, true, rng);
        break;
    }
    init_norm(s, p + ".norm1", d);
    s.add(p + ".ffn.w1", glorot<T>(d, cfg.ffn_dim, rng));
    s.add(p + ".ffn.b1", Matrix<T>(1, cfg.ffn_dim));
    s.add(p + ".ffn.w2", glorot<T>(cfg.ffn_dim, d, rng));
    s.add(p + ".ffn.b2", Matrix<T>(1, d));
    init_norm(s, p + ".norm2", d);
  }
}

template <typename T>
Var multi_head_attention(Graph<T>& g, ParameterStore<T>& s, const std::string& p,
                         const EncoderConfig& cfg, Var x, bool relative, int window,
                         AttentionCounter* counter) {
  Var q = matmul(g, x, P(g, s, p + ".wq"));
  Var k = matmul(g, x, P(g, s, p + ".wk"));
  Var v = matmul(g, x, P(g, s, p + ".wv"));
  std::optional<RelativeTables> rel;
  if (relative) rel = RelativeTables{P(g, s, p + ".rel_key"), P(g, s, p + ".rel_value"), cfg.clip_distance};
  Var heads = attention(g, q, k, v, cfg.n_heads, rel, window, counter);
  return add_row(g, matmul(g, heads, P(g, s, p + ".wo")), P(g, s, p + ".bo"));
}

template <typename T>
WwaTerms wwa_attention_terms(Graph<T>& g, ParameterStore<T>& s, const std::string& lp,
                             const EncoderConfig& cfg, Var x, std::span<const int> word_map,
                             int n_words, AttentionCounter* counter) {
  AttentionCounter word_counter;
  Var words = word_average(g, x, word_map, n_words);
  Var word_out = multi_head_attention(g, s, lp + ".wwa", cfg, words, true, -1, &word_counter);
  WwaTerms t;
  t.word_term = word_expand(g, word_out, word_map);
  AttentionCounter window_counter;
  t.window_term = multi_head_attention(g, s, lp + ".wind", cfg, x, true, cfg.window, &window_counter);
  if (counter) {
    counter->per_head += word_counter.per_head + window_counter.per_head;
    counter->per_query = window_counter.per_query;
  }
  return t;
}

template <typename T>
EncoderTrace encoder_forward(Graph<T>& g, ParameterStore<T>& s, const EncoderConfig& cfg,
                             const EncoderInput& in) {
  const int n = static_cast<int>(in.token_ids.size());
  if (n == 0) throw DataError("empty input sequence");
  if (n > cfg.max_seq_len) {
    throw DataError("sequence of " + std::to_string(n) + " tokens exceeds max_seq_len " +
                    std::to_string(cfg.max_seq_len));
  }
  if (!in.segment_ids.empty() && static_cast<int>(in.segment_ids.size()) != n) {
    throw std::logic_error("encoder_forward: segment ids length");
  }
  if (cfg.mode == AttentionMode::kWwa && static_cast<int>(in.word_map.size()) != n) {
    throw std::logic_error("encoder_forward: wwa mode needs a word map per token");
  }

  std::vector<int> segments(in.segment_ids.begin(), in.segment_ids.end());
  if (segments.empty()) segments.assign(n, 0);

  EncoderTrace trace;
  Var x = add(g, gather_rows(g, P(g, s, "embeddings.token"), in.token_ids),
               gather_rows(g, P(g, s, "embeddings.segment"), std::span<const int>(segments)));
  if (cfg.mode == AttentionMode::kAbsFull) {
    x = add(g, x, g.constant(sinusoidal_table<T>(n, cfg.d_model)));
  }
  x = norm(g, s, "embeddings.norm", x, cfg);
  trace.embeddings = x;

  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    LayerTrace lt;
    lt.input = x;
    AttentionCounter counter;
    Var attn;
    switch (cfg.mode) {
      case AttentionMode::kAbsFull:
        attn = add(g, x, multi_head_attention(g, s, p + ".attn", cfg, x, false, -1, &counter));
        break;
      case AttentionMode::kRelFull:
        attn = add(g, x, multi_head_attention(g, s, p + ".attn", cfg, x, true, -1, &counter));
        break;
      case AttentionMode::kWwa: {
        WwaTerms t = wwa_attention_terms(g, s, p, cfg, x, in.word_map, in.n_words, &counter);
        attn = add(g, add(g, x, t.word_term), t.window_term);
        break;
      }
    }
    lt.energies_per_head = counter.per_head;
    lt.attention = attn;
    lt.attention_norm = norm(g, s, p + ".norm1", attn, cfg);
    Var h = gelu(g, add_row(g, matmul(g, lt.attention_norm, P(g, s, p + ".ffn.w1")), P(g, s, p + ".ffn.b1")));
    lt.ffn = add_row(g, matmul(g, h, P(g, s, p + ".ffn.w2")), P(g, s, p + ".ffn.b2"));
    x = norm(g, s, p + ".norm2", add(g, lt.attention_norm, lt.ffn), cfg);
    lt.output = x;
    trace.layers.push_back(lt);
  }
  trace.hidden = x;
  return trace;
}

std::int64_t wwa_energy_count(int n_tokens, int n_words, int window) {
  std::int64_t total = static_cast<std::int64_t>(n_words) * n_words;
  for (int i = 0; i < n_tokens; ++i) {
    total += std::min(i, window) + std::min(n_tokens - 1 - i, window) + 1;
  }
  return total;
}

std::int64_t wwa_energy_bound(int n_tokens, int n_words, int window) {
  return static_cast<std::int64_t>(n_words) * n_words + static_cast<std::int64_t>(2 * window + 1) * n_tokens;
}

#define TAGFORMER_INSTANTIATE_ENCODER(T)                                                          \
  template void init_encoder_params<T>(ParameterStore<T>&, const EncoderConfig&, Rng&);          \
  template EncoderTrace encoder_forward<T>(Graph<T>&, ParameterStore<T>&, const EncoderConfig&,  \
                                           const EncoderInput&);                                 \
  template Var multi_head_attention<T>(Graph<T>&, ParameterStore<T>&, const std::string&,         \
                                       const EncoderConfig&, Var, bool, int, AttentionCounter*);  \
  template WwaTerms wwa_attention_terms<T>(Graph<T>&, ParameterStore<T>&, const std::string&,     \
                                           const EncoderConfig&, Var, std::span<const int>, int,  \
                                           AttentionCounter*);

TAGFORMER_INSTANTIATE_ENCODER(float)
TAGFORMER_INSTANTIATE_ENCODER(double)

}  // namespace tagformer
