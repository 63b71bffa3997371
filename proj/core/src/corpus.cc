#include "tagformer/corpus.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tagformer/error.h"

namespace tagformer {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

}  // namespace

bool is_valid_tag_syntax(const std::string& tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

std::vector<NerRecord> parse_conll(std::istream& in) {
  std::vector<NerRecord> records;
  NerRecord current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current.words.empty()) records.push_back(std::move(current));
      current = NerRecord{};
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("expected exactly two TAB-separated fields", line_no);
    }
    std::string word = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (word.empty() || word.find(' ') != std::string::npos) {
      throw ParseError("empty word or word containing a space", line_no);
    }
    if (!is_valid_tag_syntax(tag)) {
      throw ParseError("unknown tag syntax '" + tag + "'", line_no);
    }
    current.words.push_back(std::move(word));
    current.tags.push_back(std::move(tag));
  }
  if (!current.words.empty()) records.push_back(std::move(current));
  return records;
}

void serialize_conll(const std::vector<NerRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.words.size(); ++i) {
      out << r.words[i] << '\t' << r.tags[i] << '\n';
    }
    out << '\n';
  }
}

std::vector<NerRecord> parse_json_dataset(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  if (!doc.is_array()) throw ParseError("top-level JSON value must be an array", 0);
  std::vector<NerRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "record " + std::to_string(i);
    if (!item.is_object() || !item.contains("words") || !item.contains("tags")) {
      throw ParseError(where + ": expected an object with 'words' and 'tags'", 0);
    }
    NerRecord r;
    try {
      r.words = item.at("words").get<std::vector<std::string>>();
      r.tags = item.at("tags").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError(where + ": 'words' and 'tags' must be string arrays", 0);
    }
    if (r.words.size() != r.tags.size()) {
      throw ParseError(where + ": " + std::to_string(r.words.size()) + " words but " +
                           std::to_string(r.tags.size()) + " tags",
                       0);
    }
    for (const auto& t : r.tags) {
      if (!is_valid_tag_syntax(t)) throw ParseError(where + ": unknown tag syntax '" + t + "'", 0);
    }
    if (r.words.empty()) {
      std::cerr << "warning: skipping empty " << where << '\n';
      continue;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void serialize_json_dataset(const std::vector<NerRecord>& records, std::ostream& out) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : records) doc.push_back({{"words", r.words}, {"tags", r.tags}});
  out << doc.dump() << '\n';
}

std::vector<NerRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return ends_with(path, ".json") ? parse_json_dataset(in) : parse_conll(in);
}

std::vector<std::string> collect_entities(const std::vector<NerRecord>& records) {
  std::vector<std::string> entities;
  for (const auto& r : records) {
    for (const auto& t : r.tags) {
      if (t == "O") continue;
      std::string cls = t.substr(2);
      if (std::find(entities.begin(), entities.end(), cls) == entities.end()) {
        entities.push_back(std::move(cls));
      }
    }
  }
  return entities;
}

std::vector<Document> parse_pretraining_corpus(std::istream& in) {
  std::vector<Document> docs;
  Document current;
  std::string line;
  auto flush = [&] {
    if (!current.sentences.empty()) {
      current.id = "doc" + std::to_string(docs.size());
      docs.push_back(std::move(current));
    }
    current = Document{};
  };
  while (std::getline(in, line)) {
    auto words = split_whitespace(line);
    if (words.empty()) {
      flush();
    } else {
      current.sentences.push_back(std::move(words));
    }
  }
  flush();
  return docs;
}

SentencePair sample_sentence_pair(const std::vector<Document>& corpus, PairMode mode, Rng& rng,
                                  std::optional<int> forced_label) {
  std::vector<std::size_t> pairable;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (corpus[d].sentences.size() >= 2) pairable.push_back(d);
  }
  if (pairable.empty()) throw DataError("corpus has no document with two or more sentences");
  if (mode == PairMode::kNsp && corpus.size() < 2) {
    throw DataError("next-sentence prediction needs at least two documents");
  }

  const int label = forced_label ? *forced_label : (rng.bernoulli(0.5) ? 1 : 0);
  SentencePair pair;
  pair.label = label;

  const std::size_t d = pairable[rng.below(pairable.size())];
  const auto& sents = corpus[d].sentences;
  const std::size_t i = rng.below(sents.size() - 1);
  pair.first_doc = pair.second_doc = d;

  if (mode == PairMode::kSop) {
    if (label == 1) {
      pair.first = sents[i];
      pair.second = sents[i + 1];
    } else {
      pair.first = sents[i + 1];
      pair.second = sents[i];
    }
    return pair;
  }

  if (label == 1) {
    pair.first = sents[i];
    pair.second = sents[i + 1];
    return pair;
  }
  // Negative NSP: any sentence of d, partner from a different document.
  pair.first = sents[rng.below(sents.size())];
  std::size_t other = rng.below(corpus.size() - 1);
  if (other >= d) ++other;
  const auto& other_sents = corpus[other].sentences;
  pair.second = other_sents[rng.below(other_sents.size())];
  pair.second_doc = other;
  return pair;
}

}  // namespace tagformer
