#pragma once

#include <map>
#include <string>
#include <vector>

namespace tagformer {

using TagSequences = std::vector<std::vector<std::string>>;

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  long support() const { return tp + fn; }
  Counts& operator+=(const Counts& o);
  bool operator==(const Counts&) const = default;
};

struct ScoreReport {
  Counts total;
  std::map<std::string, Counts> per_class;

  double precision() const { return total.precision(); }
  double recall() const { return total.recall(); }
  double f1() const { return total.f1(); }
  long support() const { return total.support(); }
};

// Exact (type, start, end) span matches. Throws DataError on shape mismatch.
ScoreReport entity_f1(const TagSequences& pred, const TagSequences& gold);

// Micro-averaged per-token scores over every tag except O.
ScoreReport token_f1(const TagSequences& pred, const TagSequences& gold);

inline constexpr int kLengthBuckets = 7;

// Sizes of `parts` near-equal parts; the first n % parts get one extra.
std::vector<int> bucket_sizes(int n, int parts = kLengthBuckets);

// Samples sorted by `lengths` (stable), cut into 7 parts, entity F1 per part.
// Throws DataError with fewer than 7 samples.
std::vector<ScoreReport> length_bucketed_f1(const std::vector<int>& lengths, const TagSequences& pred,
                                            const TagSequences& gold);

// Aligned text table, one row per class plus a micro total.
std::string format_table(const ScoreReport& report);

// name=value lines: <prefix>.precision, .recall, .f1, .tp, .fp, .fn and
// <prefix>.<class>.f1 per class.
std::string format_key_values(const std::string& prefix, const ScoreReport& report);

}  // namespace tagformer
