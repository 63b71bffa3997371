#include "tagformer/decode.h"

#include <stdexcept>

namespace tagformer {

namespace {

std::string type_of(const std::string& tag) { return tag.size() > 2 ? tag.substr(2) : std::string(); }
bool is_begin(const std::string& tag) { return tag.size() > 2 && tag[0] == 'B' && tag[1] == '-'; }
bool is_inside(const std::string& tag) { return tag.size() > 2 && tag[0] == 'I' && tag[1] == '-'; }

// Lowest index of the maximum of v over [begin, end].
int argmax(const std::vector<double>& v, int begin, int end) {
  int best = begin;
  for (int i = begin + 1; i <= end; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

std::vector<EntitySpan> cse_decode(const CseOutput& out, const std::vector<std::string>& entities) {
  const int n = static_cast<int>(out.p_start.size());
  if (static_cast<int>(out.p_end.size()) != n || static_cast<int>(out.classes.size()) != n) {
    throw std::invalid_argument("cse_decode: misaligned outputs");
  }
  const int e = static_cast<int>(entities.size());
  std::vector<int> starts, ends;
  for (int i = 0; i < n; ++i) {
    if (out.p_start[i] > kCseThreshold) starts.push_back(i);
    if (out.p_end[i] > kCseThreshold) ends.push_back(i);
  }
  auto next_at_or_after = [](const std::vector<int>& v, int pos) {
    for (int x : v) {
      if (x >= pos) return x;
    }
    return -1;
  };

  std::vector<EntitySpan> spans;
  int pos = 0;
  while (pos < n) {
    const int s = next_at_or_after(starts, pos);
    const int en = next_at_or_after(ends, pos);
    if (s < 0 && en < 0) break;
    int span_start, span_end;
    if (s >= 0 && (en < 0 || s <= en)) {
      span_start = s;
      const int next_start = next_at_or_after(starts, s + 1);
      if (en >= 0 && (next_start < 0 || en < next_start)) {
        span_end = en;
      } else if (next_start >= 0) {
        span_end = argmax(out.p_end, s, next_start - 1);
      } else {
        span_end = argmax(out.p_end, s, n - 1);
      }
    } else {
      span_end = en;
      span_start = argmax(out.p_start, pos, en);
    }

    int best = 0;
    double best_mean = -1.0;
    for (int c = 0; c < e; ++c) {
      double sum = 0;
      for (int i = span_start; i <= span_end; ++i) sum += out.classes[i][c];
      const double mean = sum / (span_end - span_start + 1);
      if (mean > best_mean) {
        best_mean = mean;
        best = c;
      }
    }
    if (e > 0) spans.push_back({entities[best], span_start, span_end});
    pos = span_end + 1;
  }
  return spans;
}

std::vector<std::string> spans_to_tags(const std::vector<EntitySpan>& spans, int n) {
  std::vector<std::string> tags(n, "O");
  for (const auto& s : spans) {
    if (s.start < 0 || s.end >= n || s.start > s.end) throw std::invalid_argument("spans_to_tags: bad span");
    tags[s.start] = "B-" + s.label;
    for (int i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + s.label;
  }
  return tags;
}

std::vector<std::string> entity_fix(const std::vector<std::string>& tags) {
  std::vector<std::string> out = tags;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!is_inside(out[i])) continue;
    if (i == 0) {
      out[i] = "B-" + type_of(out[i]);
      continue;
    }
    const std::string& prev = out[i - 1];
    const bool legal = (is_begin(prev) || is_inside(prev)) && type_of(prev) == type_of(out[i]);
    if (legal) continue;
    out[i] = is_begin(prev) ? "I-" + type_of(prev) : prev;
  }
  return out;
}

std::vector<EntitySpan> extract_entities(const std::vector<std::string>& tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const std::string& t = tags[i];
    if (is_inside(t) && open && spans.back().label == type_of(t)) {
      spans.back().end = i;
      continue;
    }
    open = false;
    if (is_begin(t) || is_inside(t)) {
      spans.push_back({type_of(t), i, i});
      open = true;
    }
  }
  return spans;
}

bool is_iob_consistent(const std::vector<std::string>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!is_inside(tags[i])) continue;
    if (i == 0) return false;
    const std::string& prev = tags[i - 1];
    if (!(is_begin(prev) || is_inside(prev)) || type_of(prev) != type_of(tags[i])) return false;
  }
  return true;
}

}  // namespace tagformer
