#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tagformer/rng.h"

namespace tagformer {

using Sentence = std::vector<std::string>;

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
};

// One labeled sentence with word-level IOB tags.
struct NerRecord {
  std::vector<std::string> words;
  std::vector<std::string> tags;

  bool operator==(const NerRecord&) const = default;
};

struct DatasetSplit {
  std::vector<NerRecord> train;
  std::vector<NerRecord> dev;
  std::vector<NerRecord> test;
};

// "word TAB tag" lines, records separated by blank lines. Empty records are
// skipped. Throws ParseError with the offending line number.
std::vector<NerRecord> parse_conll(std::istream& in);
void serialize_conll(const std::vector<NerRecord>& records, std::ostream& out);

// Top-level array of {"words": [...], "tags": [...]}.
std::vector<NerRecord> parse_json_dataset(std::istream& in);
void serialize_json_dataset(const std::vector<NerRecord>& records, std::ostream& out);

// Loads by extension: ".json" selects the JSON reader, anything else CoNLL.
std::vector<NerRecord> load_dataset(const std::string& path);

// True for "O", "B-X", "I-X" with non-empty X.
bool is_valid_tag_syntax(const std::string& tag);

// Entity class names in first-seen order over all records.
std::vector<std::string> collect_entities(const std::vector<NerRecord>& records);

// Plain text, one sentence per line, words separated by whitespace, blank
// line between documents. Document ids are "doc<index>".
std::vector<Document> parse_pretraining_corpus(std::istream& in);

enum class PairMode { kNsp, kSop };

struct SentencePair {
  Sentence first;
  Sentence second;
  int label = 0;  // 1: consecutive and in order
  std::size_t first_doc = 0;
  std::size_t second_doc = 0;
};

// NSP: label 1 takes two consecutive sentences of one document, label 0 pairs
// a random sentence with one from a different document. SOP: always
// consecutive, label 0 swaps the order. Each label has probability 0.5 unless
// forced.
SentencePair sample_sentence_pair(const std::vector<Document>& corpus, PairMode mode, Rng& rng,
                                  std::optional<int> forced_label = std::nullopt);

}  // namespace tagformer
