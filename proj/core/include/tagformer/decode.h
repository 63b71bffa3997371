#pragma once

#include <string>
#include <vector>

namespace tagformer {

// Per-token CSE head output. `classes` rows cover the entities followed by O.
struct CseOutput {
  std::vector<double> p_start;
  std::vector<double> p_end;
  std::vector<std::vector<double>> classes;
};

// Entity of type `label` over tokens [start, end] (inclusive).
struct EntitySpan {
  std::string label;
  int start = 0;
  int end = 0;

  bool operator==(const EntitySpan&) const = default;
  auto operator<=>(const EntitySpan&) const = default;
};

inline constexpr double kCseThreshold = 0.5;

// Start/end markers where p > 0.5. A start without an end before the next
// start is closed at the highest p_end in between (or up to the sequence end
// for the last start); an end without a start gets one at the highest p_start
// since the previous span. Each span takes the entity (never O) with the
// highest mean class probability over its tokens.
std::vector<EntitySpan> cse_decode(const CseOutput& out, const std::vector<std::string>& entities);

// Renders non-overlapping spans as B-X I-X* over n tokens.
std::vector<std::string> spans_to_tags(const std::vector<EntitySpan>& spans, int n);

// Replaces every I-X that does not follow B-X/I-X with the (already fixed)
// predecessor tag, B-Y becoming I-Y; a leading I-X becomes B-X.
std::vector<std::string> entity_fix(const std::vector<std::string>& tags);

// Chunks in the conlleval convention: B-X starts a chunk, I-X continues a
// chunk of the same type and otherwise starts a new one, O ends chunks.
std::vector<EntitySpan> extract_entities(const std::vector<std::string>& tags);

// True when every I-X follows B-X or I-X.
bool is_iob_consistent(const std::vector<std::string>& tags);

}  // namespace tagformer
