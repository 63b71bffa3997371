#pragma once

#include <optional>
#include <vector>

#include "tagformer/corpus.h"
#include "tagformer/rng.h"
#include "tagformer/tokenizer.h"

namespace tagformer {

inline constexpr double kMaskSelectRate = 0.15;
inline constexpr double kMaskTokenRate = 0.80;
inline constexpr double kRandomTokenRate = 0.10;

enum class Corruption { kMask, kRandom, kKeep };

struct MlmTarget {
  int position = 0;
  int original_id = 0;
  Corruption corruption = Corruption::kMask;
};

struct PretrainSample {
  std::vector<int> input_ids;
  std::vector<MlmTarget> mlm_targets;  // strictly increasing positions
  std::vector<int> segment_ids;
  std::optional<int> pair_label;
  std::vector<int> word_map;
  int n_words = 0;
};

// Selects max(1, round(0.15 * units)) units without replacement, where a unit
// is a non-special token, or a whole word when `wwm` is set. Selected units
// are replaced by [MASK] (80%), a random non-special id (10%) or kept (10%);
// under wwm the choice is drawn once per word.
PretrainSample apply_masking(const TokenizedText& tok, const Vocabulary& vocab, bool wwm, Rng& rng,
                             std::vector<int> segment_ids = {});

// [CLS] a [SEP] b [SEP] with segment ids 0/1. Tokens are dropped from the tail
// of the longer segment until the total fits `max_len`.
TokenizedText encode_pair(const Sentence& first, const Sentence& second, const Vocabulary& vocab,
                          int max_len, std::vector<int>& segment_ids);

// [CLS] words [SEP], truncated from the tail to `max_len`.
TokenizedText encode_single(const std::vector<std::string>& words, const Vocabulary& vocab,
                            int max_len);

}  // namespace tagformer
