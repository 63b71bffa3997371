#include "tagformer/eval.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "tagformer/decode.h"
#include "tagformer/error.h"

namespace tagformer {

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

void check_shapes(const TagSequences& pred, const TagSequences& gold) {
  if (pred.size() != gold.size()) {
    throw DataError("prediction has " + std::to_string(pred.size()) + " sequences, gold has " +
                    std::to_string(gold.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gold[i].size()) {
      throw DataError("sequence " + std::to_string(i) + ": prediction length " + std::to_string(pred[i].size()) +
                      " != gold length " + std::to_string(gold[i].size()));
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double Counts::precision() const { return ratio(tp, tp + fp); }
double Counts::recall() const { return ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ScoreReport entity_f1(const TagSequences& pred, const TagSequences& gold) {
  check_shapes(pred, gold);
  ScoreReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = extract_entities(pred[i]);
    const auto g = extract_entities(gold[i]);
    const std::set<EntitySpan> gs(g.begin(), g.end());
    const std::set<EntitySpan> ps(p.begin(), p.end());
    for (const auto& s : ps) {
      if (gs.count(s)) {
        ++r.per_class[s.label].tp;
      } else {
        ++r.per_class[s.label].fp;
      }
    }
    for (const auto& s : gs) {
      if (!ps.count(s)) ++r.per_class[s.label].fn;
    }
  }
  for (const auto& [_, c] : r.per_class) r.total += c;
  return r;
}

ScoreReport token_f1(const TagSequences& pred, const TagSequences& gold) {
  check_shapes(pred, gold);
  ScoreReport r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred[i].size(); ++j) {
      const std::string& p = pred[i][j];
      const std::string& g = gold[i][j];
      if (p == g) {
        if (g != "O") ++r.per_class[g].tp;
        continue;
      }
      if (p != "O") ++r.per_class[p].fp;
      if (g != "O") ++r.per_class[g].fn;
    }
  }
  for (const auto& [_, c] : r.per_class) r.total += c;
  return r;
}

std::vector<int> bucket_sizes(int n, int parts) {
  std::vector<int> sizes(parts, n / parts);
  for (int i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

std::vector<ScoreReport> length_bucketed_f1(const std::vector<int>& lengths, const TagSequences& pred,
                                            const TagSequences& gold) {
  check_shapes(pred, gold);
  if (lengths.size() != gold.size()) throw DataError("length_bucketed_f1: lengths do not match samples");
  const int n = static_cast<int>(gold.size());
  if (n < kLengthBuckets) {
    throw DataError("length buckets need at least " + std::to_string(kLengthBuckets) + " samples, got " +
                    std::to_string(n));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lengths[a] < lengths[b]; });

  std::vector<ScoreReport> out;
  int pos = 0;
  for (int size : bucket_sizes(n)) {
    TagSequences p, g;
    for (int k = pos; k < pos + size; ++k) {
      p.push_back(pred[order[k]]);
      g.push_back(gold[order[k]]);
    }
    out.push_back(entity_f1(p, g));
    pos += size;
  }
  return out;
}

std::string format_table(const ScoreReport& report) {
  std::size_t width = 5;
  for (const auto& [name, _] : report.per_class) width = std::max(width, name.size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9s\n", static_cast<int>(width), "class", "precision",
                "recall", "f1", "support");
  os << line;
  auto row = [&](const std::string& name, const Counts& c) {
    std::snprintf(line, sizeof line, "%-*s %9.4f %9.4f %9.4f %9ld\n", static_cast<int>(width), name.c_str(),
                  c.precision(), c.recall(), c.f1(), c.support());
    os << line;
  };
  for (const auto& [name, c] : report.per_class) row(name, c);
  row("micro", report.total);
  return os.str();
}

std::string format_key_values(const std::string& prefix, const ScoreReport& report) {
  std::ostringstream os;
  os << prefix << ".precision=" << fmt(report.precision()) << '\n';
  os << prefix << ".recall=" << fmt(report.recall()) << '\n';
  os << prefix << ".f1=" << fmt(report.f1()) << '\n';
  os << prefix << ".tp=" << report.total.tp << '\n';
  os << prefix << ".fp=" << report.total.fp << '\n';
  os << prefix << ".fn=" << report.total.fn << '\n';
  for (const auto& [name, c] : report.per_class) os << prefix << '.' << name << ".f1=" << fmt(c.f1()) << '\n';
  return os.str();
}

}  // namespace tagformer
