#include "tagformer/pretrain_tasks.h"

#include <algorithm>
#include <cmath>

#include "tagformer/error.h"

namespace tagformer {

namespace {

bool is_content(int id) { return !Vocabulary::is_special(id) || id == kUnkId; }

Corruption draw_corruption(Rng& rng) {
  const double u = rng.uniform();
  if (u < kMaskTokenRate) return Corruption::kMask;
  if (u < kMaskTokenRate + kRandomTokenRate) return Corruption::kRandom;
  return Corruption::kKeep;
}

int random_content_id(const Vocabulary& vocab, Rng& rng) {
  const int n = vocab.size() - kNumSpecials;
  if (n <= 0) return kUnkId;
  return kNumSpecials + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
}

// Renumbers word indices after truncation so the map stays dense.
void renumber_words(TokenizedText& tok) {
  int next = -1;
  int last = -1;
  for (auto& w : tok.word_map) {
    if (w != last) {
      last = w;
      ++next;
    }
    w = next;
  }
  tok.n_words = next + 1;
}

}  // namespace

PretrainSample apply_masking(const TokenizedText& tok, const Vocabulary& vocab, bool wwm, Rng& rng,
                             std::vector<int> segment_ids) {
  PretrainSample sample;
  sample.input_ids = tok.token_ids;
  sample.word_map = tok.word_map;
  sample.n_words = tok.n_words;
  sample.segment_ids = segment_ids.empty() ? std::vector<int>(tok.size(), 0) : std::move(segment_ids);

  // Units: groups of token positions that are selected together.
  std::vector<std::vector<int>> units;
  for (int i = 0; i < tok.size(); ++i) {
    if (!is_content(tok.token_ids[i])) continue;
    if (wwm && !units.empty() && tok.word_map[units.back().back()] == tok.word_map[i]) {
      units.back().push_back(i);
    } else {
      units.push_back({i});
    }
  }
  if (units.empty()) return sample;

  const auto n_units = static_cast<std::uint64_t>(units.size());
  const auto k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(kMaskSelectRate * n_units)));

  // Partial Fisher-Yates: the first k slots are the sample.
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::uint64_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.below(n_units - i)]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());

  for (std::size_t u : chosen) {
    Corruption c = draw_corruption(rng);
    for (int pos : units[u]) {
      sample.mlm_targets.push_back({pos, tok.token_ids[pos], c});
      switch (c) {
        case Corruption::kMask:
          sample.input_ids[pos] = kMaskId;
          break;
        case Corruption::kRandom:
          sample.input_ids[pos] = random_content_id(vocab, rng);
          break;
        case Corruption::kKeep:
          break;
      }
    }
  }
  return sample;
}

TokenizedText encode_pair(const Sentence& first, const Sentence& second, const Vocabulary& vocab,
                          int max_len, std::vector<int>& segment_ids) {
  if (max_len < 5) throw ConfigError("max sequence length must be at least 5 for sentence pairs");
  TokenizedText a = encode(first, vocab, false);
  TokenizedText b = encode(second, vocab, false);
  const int budget = max_len - 3;
  while (a.size() + b.size() > budget) {
    TokenizedText& longer = a.size() >= b.size() ? a : b;
    longer.token_ids.pop_back();
    longer.word_map.pop_back();
  }

  TokenizedText out;
  segment_ids.clear();
  auto push = [&](int id, int word, int segment) {
    out.token_ids.push_back(id);
    out.word_map.push_back(word);
    segment_ids.push_back(segment);
  };
  int offset = 0;
  push(kClsId, offset++, 0);
  for (int i = 0; i < a.size(); ++i) push(a.token_ids[i], offset + a.word_map[i], 0);
  offset += a.size() ? a.word_map.back() + 1 : 0;
  push(kSepId, offset++, 0);
  for (int i = 0; i < b.size(); ++i) push(b.token_ids[i], offset + b.word_map[i], 1);
  offset += b.size() ? b.word_map.back() + 1 : 0;
  push(kSepId, offset++, 1);
  renumber_words(out);
  return out;
}

TokenizedText encode_single(const std::vector<std::string>& words, const Vocabulary& vocab,
                            int max_len) {
  if (max_len < 3) throw ConfigError("max sequence length must be at least 3");
  TokenizedText body = encode(words, vocab, false);
  while (body.size() > max_len - 2) {
    body.token_ids.pop_back();
    body.word_map.pop_back();
  }
  TokenizedText out;
  out.token_ids.push_back(kClsId);
  out.word_map.push_back(0);
  for (int i = 0; i < body.size(); ++i) {
    out.token_ids.push_back(body.token_ids[i]);
    out.word_map.push_back(1 + body.word_map[i]);
  }
  out.token_ids.push_back(kSepId);
  out.word_map.push_back(out.word_map.back() + 1);
  renumber_words(out);
  return out;
}

}  // namespace tagformer
