#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagformer/corpus.h"

namespace tagformer {

// Non-initial pieces of a word carry this prefix ("Frank", "_furt").
inline constexpr std::string_view kContinuationPrefix = "_";

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

class Vocabulary {
 public:
  Vocabulary();
  // Specials are prepended; `pieces` must not contain them.
  explicit Vocabulary(const std::vector<std::string>& pieces);

  int size() const { return static_cast<int>(pieces_.size()); }
  const std::string& piece(int id) const { return pieces_.at(id); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  // -1 when absent.
  int find(std::string_view piece) const;
  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }
  static bool is_continuation(std::string_view piece);

  // One piece per line, line number = id.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
};

// Token ids with the token -> word map. Specials count as singleton words.
struct TokenizedText {
  std::vector<int> token_ids;
  std::vector<int> word_map;
  int n_words = 0;

  int size() const { return static_cast<int>(token_ids.size()); }
};

// Splits UTF-8 into code points; invalid bytes become single-byte units.
std::vector<std::string> utf8_chars(std::string_view text);

// Frequency-based pair merging within word boundaries until target_size
// pieces (specials included) exist or no pair is left. Deterministic: ties go
// to the lexicographically smallest pair.
Vocabulary build_vocab(std::istream& corpus, int target_size);
Vocabulary build_vocab_from_words(const std::vector<std::string>& words, int target_size);

// Smallest admissible target size for a corpus (specials + both forms of
// every character).
int minimum_vocab_size(const std::vector<std::string>& words);

// Greedy longest match per word; unmatched characters become UNK tokens.
TokenizedText encode(const std::vector<std::string>& words, const Vocabulary& vocab,
                     bool add_specials);

// Words reconstructed from non-special tokens (UNK renders as "[UNK]").
std::vector<std::string> decode(const TokenizedText& tok, const Vocabulary& vocab);

// Word tags -> token tags: continuation tokens of a B-X word become I-X,
// others repeat the word tag, specials get O.
std::vector<std::string> align_tags_to_tokens(const NerRecord& record, const TokenizedText& tok);

}  // namespace tagformer
