#include "tagformer/tokenizer.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "tagformer/error.h"

namespace tagformer {

namespace {

const std::vector<std::string>& special_pieces() {
  static const std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  return specials;
}

std::string strip_prefix(const std::string& piece) {
  return Vocabulary::is_continuation(piece) ? piece.substr(kContinuationPrefix.size()) : piece;
}

std::string continuation(const std::string& s) { return std::string(kContinuationPrefix) + s; }

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& pieces) {
  pieces_ = special_pieces();
  pieces_.insert(pieces_.end(), pieces.begin(), pieces.end());
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(pieces_[i], i).second) {
      throw DataError("duplicate vocabulary piece '" + pieces_[i] + "'");
    }
  }
}

int Vocabulary::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

bool Vocabulary::is_continuation(std::string_view piece) {
  return piece.size() > kContinuationPrefix.size() && piece.substr(0, kContinuationPrefix.size()) == kContinuationPrefix;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& p : pieces_) out << p << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const auto& specials = special_pieces();
  if (lines.size() < specials.size() || !std::equal(specials.begin(), specials.end(), lines.begin())) {
    throw ParseError("vocabulary must start with [PAD] [UNK] [CLS] [SEP] [MASK]", 1);
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + specials.size(), lines.end()));
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (len > 1) {
      if (i + len > text.size()) len = 1;
      for (std::size_t k = 1; k < len; ++k) {
        if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
          len = 1;
          break;
        }
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

int minimum_vocab_size(const std::vector<std::string>& words) {
  std::set<std::string> chars;
  for (const auto& w : words) {
    for (auto& c : utf8_chars(w)) chars.insert(std::move(c));
  }
  return kNumSpecials + 2 * static_cast<int>(chars.size());
}

Vocabulary build_vocab_from_words(const std::vector<std::string>& words, int target_size) {
  if (words.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  const int minimum = minimum_vocab_size(words);
  if (target_size < minimum) {
    throw ConfigError("vocabulary size " + std::to_string(target_size) + " is below the minimum " +
                      std::to_string(minimum) + " for this corpus");
  }

  std::map<std::string, long> word_counts;
  for (const auto& w : words) ++word_counts[w];

  std::set<std::string> chars;
  struct WordType {
    std::vector<std::string> symbols;
    long count;
  };
  std::vector<WordType> types;
  for (const auto& [w, count] : word_counts) {
    WordType t{{}, count};
    auto cs = utf8_chars(w);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      chars.insert(cs[i]);
      t.symbols.push_back(i == 0 ? cs[i] : continuation(cs[i]));
    }
    types.push_back(std::move(t));
  }

  std::vector<std::string> pieces;
  std::set<std::string> known;
  for (const auto& c : chars) pieces.push_back(c);
  for (const auto& c : chars) pieces.push_back(continuation(c));
  known.insert(pieces.begin(), pieces.end());

  while (kNumSpecials + static_cast<int>(pieces.size()) < target_size) {
    std::map<std::pair<std::string, std::string>, long> pair_counts;
    for (const auto& t : types) {
      for (std::size_t i = 0; i + 1 < t.symbols.size(); ++i) {
        pair_counts[{t.symbols[i], t.symbols[i + 1]}] += t.count;
      }
    }
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    const std::pair<std::string, std::string>* best = nullptr;
    long best_count = 0;
    std::string merged;
    for (const auto& [pair, count] : pair_counts) {
      if (count <= best_count) continue;
      std::string candidate = pair.first + strip_prefix(pair.second);
      if (known.count(candidate)) continue;
      best = &pair;
      best_count = count;
      merged = std::move(candidate);
    }
    if (best == nullptr) break;
    const auto [left, right] = *best;
    for (auto& t : types) {
      std::vector<std::string> next;
      next.reserve(t.symbols.size());
      for (std::size_t i = 0; i < t.symbols.size(); ++i) {
        if (i + 1 < t.symbols.size() && t.symbols[i] == left && t.symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(t.symbols[i]);
        }
      }
      t.symbols = std::move(next);
    }
    known.insert(merged);
    pieces.push_back(std::move(merged));
  }
  return Vocabulary(pieces);
}

Vocabulary build_vocab(std::istream& corpus, int target_size) {
  std::vector<std::string> words;
  std::string w;
  while (corpus >> w) words.push_back(w);
  return build_vocab_from_words(words, target_size);
}

TokenizedText encode(const std::vector<std::string>& words, const Vocabulary& vocab,
                     bool add_specials) {
  TokenizedText out;
  int word_index = 0;
  if (add_specials) {
    out.token_ids.push_back(kClsId);
    out.word_map.push_back(word_index++);
  }
  for (const auto& word : words) {
    const auto cs = utf8_chars(word);
    std::size_t pos = 0;
    while (pos < cs.size()) {
      int match = -1;
      std::size_t match_end = pos;
      std::string candidate;
      for (std::size_t end = pos; end < cs.size(); ++end) candidate += cs[end];
      for (std::size_t end = cs.size(); end > pos; --end) {
        const std::string piece = pos == 0 ? candidate : continuation(candidate);
        // An initial piece must not look like a continuation piece.
        const int id = (pos == 0 && Vocabulary::is_continuation(piece)) ? -1 : vocab.find(piece);
        if (id >= 0 && !Vocabulary::is_special(id)) {
          match = id;
          match_end = end;
          break;
        }
        candidate.resize(candidate.size() - cs[end - 1].size());
      }
      if (match < 0) {
        match = kUnkId;
        match_end = pos + 1;
      }
      out.token_ids.push_back(match);
      out.word_map.push_back(word_index);
      pos = match_end;
    }
    ++word_index;
  }
  if (add_specials) {
    out.token_ids.push_back(kSepId);
    out.word_map.push_back(word_index++);
  }
  out.n_words = word_index;
  return out;
}

std::vector<std::string> decode(const TokenizedText& tok, const Vocabulary& vocab) {
  std::vector<std::string> words;
  int last_word = -1;
  for (int i = 0; i < tok.size(); ++i) {
    const int id = tok.token_ids[i];
    if (Vocabulary::is_special(id) && id != kUnkId) continue;
    const std::string text = id == kUnkId ? vocab.piece(kUnkId) : strip_prefix(vocab.piece(id));
    if (tok.word_map[i] != last_word) {
      words.push_back(text);
      last_word = tok.word_map[i];
    } else {
      words.back() += text;
    }
  }
  return words;
}

std::vector<std::string> align_tags_to_tokens(const NerRecord& record, const TokenizedText& tok) {
  std::vector<std::string> out(tok.size(), "O");
  int content_index = -1;
  int last_word = -1;
  bool first_token = false;
  for (int i = 0; i < tok.size(); ++i) {
    const int id = tok.token_ids[i];
    if (id == kClsId || id == kSepId || id == kPadId || id == kMaskId) {
      last_word = tok.word_map[i];
      continue;
    }
    if (tok.word_map[i] != last_word) {
      ++content_index;
      last_word = tok.word_map[i];
      first_token = true;
    } else {
      first_token = false;
    }
    if (content_index >= static_cast<int>(record.tags.size())) {
      throw DataError("token sequence has more words than the record");
    }
    const std::string& tag = record.tags[content_index];
    out[i] = (!first_token && tag.rfind("B-", 0) == 0) ? "I-" + tag.substr(2) : tag;
  }
  if (content_index + 1 != static_cast<int>(record.words.size())) {
    throw DataError("word count mismatch: record has " + std::to_string(record.words.size()) +
                    " words, tokens cover " + std::to_string(content_index + 1));
  }
  return out;
}

}  // namespace tagformer
