#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tagformer/attention.h"
#include "tagformer/graph.h"
#include "tagformer/rng.h"

namespace tagformer {

enum class AttentionMode { kAbsFull, kRelFull, kWwa };

std::string to_string(AttentionMode mode);
AttentionMode parse_attention_mode(const std::string& s);

struct EncoderConfig {
  int vocab_size = 8000;
  int d_model = 512;
  int n_heads = 8;
  int n_layers = 6;
  int ffn_dim = 2048;
  int clip_distance = 16;  // tau
  int window = 5;          // omega, tokens in each direction
  AttentionMode mode = AttentionMode::kRelFull;
  int max_seq_len = 320;
  double layer_norm_eps = 1e-6;

  int head_dim() const { return d_model / n_heads; }
  // Throws ConfigError.
  void validate() const;

  std::map<std::string, std::string> to_fields() const;
  static EncoderConfig from_fields(const std::map<std::string, std::string>& fields);
  bool operator==(const EncoderConfig&) const = default;
};

// Creates every encoder parameter in `store` (see docs/checkpoint_format.md
// for the names).
template <typename T>
void init_encoder_params(ParameterStore<T>& store, const EncoderConfig& cfg, Rng& rng);

struct EncoderInput {
  std::span<const int> token_ids;
  std::span<const int> segment_ids;  // empty: all zero
  std::span<const int> word_map;     // required in wwa mode
  int n_words = 0;
};

struct LayerTrace {
  Var input;
  Var word_input;  // wwa only: word-averaged input (m x d)
  Var attention;   // residual sum before the first layer norm
  Var attention_norm;
  Var ffn;
  Var output;
  std::int64_t energies_per_head = 0;
};

struct EncoderTrace {
  Var embeddings;
  Var hidden;
  std::vector<LayerTrace> layers;
};

// Runs the encoder on the graph. Throws DataError when the input exceeds
// max_seq_len.
template <typename T>
EncoderTrace encoder_forward(Graph<T>& g, ParameterStore<T>& params, const EncoderConfig& cfg,
                             const EncoderInput& input);

// One multi-head attention block "<prefix>.{wq,wk,wv,wo,bo[,rel_key,rel_value]}".
template <typename T>
Var multi_head_attention(Graph<T>& g, ParameterStore<T>& params, const std::string& prefix,
                         const EncoderConfig& cfg, Var x, bool relative, int window,
                         AttentionCounter* counter);

struct WwaTerms {
  Var word_term;    // mha over word averages, expanded back to tokens
  Var window_term;  // windowed token attention
};

template <typename T>
WwaTerms wwa_attention_terms(Graph<T>& g, ParameterStore<T>& params, const std::string& layer_prefix,
                             const EncoderConfig& cfg, Var x, std::span<const int> word_map,
                             int n_words, AttentionCounter* counter);

// Energy values per head for one wwa layer: m^2 + sum of window sizes.
std::int64_t wwa_energy_count(int n_tokens, int n_words, int window);
// The closed-form bound m^2 + (2w + 1) n.
std::int64_t wwa_energy_bound(int n_tokens, int n_words, int window);

}  // namespace tagformer
