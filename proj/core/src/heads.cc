#include "tagformer/heads.h"

#include <cmath>

#include "tagformer/crf.h"
#include "tagformer/error.h"
#include "tagformer/ops.h"

namespace tagformer {

std::string to_string(NerHead head) {
  switch (head) {
    case NerHead::kSft:
      return "sft";
    case NerHead::kCse:
      return "cse";
    case NerHead::kLcrf:
      return "lcrf";
    case NerHead::kLcrfNer:
      return "lcrf_ner";
  }
  return "?";
}

NerHead parse_ner_head(const std::string& s) {
  if (s == "sft") return NerHead::kSft;
  if (s == "cse") return NerHead::kCse;
  if (s == "lcrf") return NerHead::kLcrf;
  if (s == "lcrf_ner") return NerHead::kLcrfNer;
  throw ConfigError("unknown head '" + s + "' (sft, cse, lcrf, lcrf_ner)");
}

namespace {

template <typename T>
Matrix<T> glorot(int rows, int cols, Rng& rng) {
  const double sd = std::sqrt(2.0 / (rows + cols));
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<T>(sd * rng.normal());
  return m;
}

template <typename T>
Var P(Graph<T>& g, ParameterStore<T>& s, const std::string& name) {
  return g.param(s.get(name));
}

template <typename T>
Var linear(Graph<T>& g, ParameterStore<T>& s, const std::string& p, Var x) {
  return add_row(g, matmul(g, x, P(g, s, p + ".w")), P(g, s, p + ".b"));
}

template <typename T>
void add_linear(ParameterStore<T>& s, const std::string& p, int in, int out, Rng& rng) {
  s.add(p + ".w", glorot<T>(in, out, rng));
  s.add(p + ".b", Matrix<T>(1, out));
}

}  // namespace

template <typename T>
void init_mlm_head(ParameterStore<T>& s, int d_model, int vocab_size, Rng& rng) {
  add_linear(s, "heads.mlm", d_model, vocab_size, rng);
}

template <typename T>
void init_pair_head(ParameterStore<T>& s, int d_model, Rng& rng) {
  add_linear(s, "heads.pair", d_model, 1, rng);
}

template <typename T>
void init_ner_head(ParameterStore<T>& s, int d_model, const TagScheme& scheme, NerHead head, Rng& rng) {
  const int gamma = scheme.num_classes();
  switch (head) {
    case NerHead::kSft:
      add_linear(s, "heads.ner", d_model, gamma, rng);
      break;
    case NerHead::kCse:
      add_linear(s, "heads.cse.start", d_model, 1, rng);
      add_linear(s, "heads.cse.end", d_model, 1, rng);
      add_linear(s, "heads.cse.class", d_model, scheme.num_entities() + 1, rng);
      break;
    case NerHead::kLcrf:
    case NerHead::kLcrfNer:
      add_linear(s, "heads.ner", d_model, gamma, rng);
      s.add("heads.ner.trans", glorot<T>(gamma, gamma, rng));
      if (head == NerHead::kLcrfNer) {
        s.add("heads.ner.omega_factor", Matrix<T>(1, 1, T(1)));
        s.add("heads.ner.omega_absolute", Matrix<T>(1, 1, T(0)));
      }
      break;
  }
}

template <typename T>
MlmResult mlm_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const MlmTarget> targets) {
  if (targets.empty()) throw std::logic_error("mlm_loss: no targets");
  std::vector<int> rows, ids;
  for (const auto& t : targets) {
    rows.push_back(t.position);
    ids.push_back(t.original_id);
  }
  Var logits = linear(g, s, "heads.mlm", gather_rows(g, hidden, std::span<const int>(rows)));
  MlmResult r;
  r.loss = softmax_cross_entropy(g, logits, std::span<const int>(ids));
  const auto& L = g.value(logits);
  for (int i = 0; i < L.rows(); ++i) r.correct += argmax_row(L, i) == ids[i] ? 1 : 0;
  r.total = L.rows();
  return r;
}

template <typename T>
Var pair_logit(Graph<T>& g, ParameterStore<T>& s, Var hidden) {
  const int cls_row = 0;
  return linear(g, s, "heads.pair", gather_rows(g, hidden, std::span<const int>(&cls_row, 1)));
}

template <typename T>
Var pair_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, int label) {
  const int t = label;
  return sigmoid_cross_entropy_sum(g, pair_logit(g, s, hidden), std::span<const int>(&t, 1));
}

template <typename T>
Var ner_emissions(Graph<T>& g, ParameterStore<T>& s, Var hidden) {
  return linear(g, s, "heads.ner", hidden);
}

template <typename T>
Var sft_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const int> classes) {
  return softmax_cross_entropy(g, ner_emissions(g, s, hidden), classes);
}

CseTargets cse_targets(const std::vector<std::string>& tags, const TagScheme& scheme) {
  const int n = static_cast<int>(tags.size());
  CseTargets t;
  t.start.assign(n, 0);
  t.end.assign(n, 0);
  t.cls.assign(n, scheme.num_entities());
  for (int i = 0; i < n; ++i) {
    const int c = scheme.entity_class_of(tags[i]);
    t.cls[i] = c;
    if (c == scheme.num_entities()) continue;
    const bool begins = tags[i][0] == 'B' || i == 0 || scheme.entity_class_of(tags[i - 1]) != c;
    const bool continues = i + 1 < n && tags[i + 1][0] == 'I' && scheme.entity_class_of(tags[i + 1]) == c;
    t.start[i] = begins ? 1 : 0;
    t.end[i] = continues ? 0 : 1;
  }
  return t;
}

template <typename T>
CseLogits cse_logits(Graph<T>& g, ParameterStore<T>& s, Var hidden) {
  return CseLogits{linear(g, s, "heads.cse.start", hidden), linear(g, s, "heads.cse.end", hidden),
                   linear(g, s, "heads.cse.class", hidden)};
}

template <typename T>
Var cse_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, const CseTargets& targets) {
  const CseLogits l = cse_logits(g, s, hidden);
  Var start = sigmoid_cross_entropy_sum(g, l.start, std::span<const int>(targets.start));
  Var end = sigmoid_cross_entropy_sum(g, l.end, std::span<const int>(targets.end));
  Var cls = softmax_cross_entropy(g, l.cls, std::span<const int>(targets.cls));
  return weighted_sum<T>(g, {start, end, cls}, {T(1), T(1), T(1)});
}

double cse_loss_value(const CseOutput& out, const CseTargets& t) {
  const std::size_t n = out.p_start.size();
  double j_start = 0, j_end = 0, cls = 0;
  for (std::size_t i = 0; i < n; ++i) {
    j_start -= std::log(t.start[i] ? out.p_start[i] : 1 - out.p_start[i]);
    j_end -= std::log(t.end[i] ? out.p_end[i] : 1 - out.p_end[i]);
    cls -= std::log(out.classes[i][t.cls[i]]);
  }
  return j_start + j_end + cls / static_cast<double>(n);
}

template <typename T>
CseOutput cse_output(const Graph<T>& g, const CseLogits& l) {
  const auto& s = g.value(l.start);
  const auto& e = g.value(l.end);
  const Matrix<T> p = softmax_rows(g.value(l.cls));
  CseOutput out;
  for (int i = 0; i < s.rows(); ++i) {
    out.p_start.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(s[i]))));
    out.p_end.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(e[i]))));
    std::vector<double> row(p.cols());
    for (int c = 0; c < p.cols(); ++c) row[c] = p(i, c);
    out.classes.push_back(std::move(row));
  }
  return out;
}

template <typename T>
Var crf_transitions(Graph<T>& g, ParameterStore<T>& s, NerHead head, const TagScheme& scheme,
                    bool hard_forbidden) {
  Var w = P(g, s, "heads.ner.trans");
  const Matrix<int> f = forbidden_matrix(scheme.num_entities());
  if (head == NerHead::kLcrfNer) {
    return transition_matrix(g, w, P(g, s, "heads.ner.omega_factor"), P(g, s, "heads.ner.omega_absolute"), f);
  }
  if (hard_forbidden) {
    return transition_matrix(g, w, g.constant(Matrix<T>(1, 1, T(0))),
                             g.constant(Matrix<T>(1, 1, static_cast<T>(kHardForbiddenPenalty))), f);
  }
  return w;
}

template <typename T>
Var lcrf_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const int> classes, NerHead head,
              const TagScheme& scheme, int begin, int end, bool hard_forbidden) {
  std::vector<int> rows;
  for (int i = begin; i < end; ++i) rows.push_back(i);
  Var content = gather_rows(g, hidden, std::span<const int>(rows));
  Var y = ner_emissions(g, s, content);
  Var trans = crf_transitions(g, s, head, scheme, hard_forbidden);
  return crf_nll(g, y, trans, classes.subspan(begin, end - begin));
}

#define TAGFORMER_INSTANTIATE_HEADS(T)                                                              \
  template void init_mlm_head<T>(ParameterStore<T>&, int, int, Rng&);                               \
  template void init_pair_head<T>(ParameterStore<T>&, int, Rng&);                                   \
  template void init_ner_head<T>(ParameterStore<T>&, int, const TagScheme&, NerHead, Rng&);         \
  template MlmResult mlm_loss<T>(Graph<T>&, ParameterStore<T>&, Var, std::span<const MlmTarget>);   \
  template Var pair_loss<T>(Graph<T>&, ParameterStore<T>&, Var, int);                               \
  template Var pair_logit<T>(Graph<T>&, ParameterStore<T>&, Var);                                   \
  template Var ner_emissions<T>(Graph<T>&, ParameterStore<T>&, Var);                                \
  template Var sft_loss<T>(Graph<T>&, ParameterStore<T>&, Var, std::span<const int>);               \
  template CseLogits cse_logits<T>(Graph<T>&, ParameterStore<T>&, Var);                             \
  template Var cse_loss<T>(Graph<T>&, ParameterStore<T>&, Var, const CseTargets&);                  \
  template CseOutput cse_output<T>(const Graph<T>&, const CseLogits&);                              \
  template Var crf_transitions<T>(Graph<T>&, ParameterStore<T>&, NerHead, const TagScheme&, bool); \
  template Var lcrf_loss<T>(Graph<T>&, ParameterStore<T>&, Var, std::span<const int>, NerHead,      \
                            const TagScheme&, int, int, bool);

TAGFORMER_INSTANTIATE_HEADS(float)
TAGFORMER_INSTANTIATE_HEADS(double)

}  // namespace tagformer
