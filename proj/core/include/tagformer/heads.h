#pragma once

#include <span>
#include <string>
#include <vector>

#include "tagformer/decode.h"
#include "tagformer/graph.h"
#include "tagformer/pretrain_tasks.h"
#include "tagformer/rng.h"
#include "tagformer/tag_scheme.h"

namespace tagformer {

enum class NerHead { kSft, kCse, kLcrf, kLcrfNer };

std::string to_string(NerHead head);
NerHead parse_ner_head(const std::string& s);

// Penalty used by the fixed-forbidden ablation of the plain CRF head.
inline constexpr double kHardForbiddenPenalty = 1e4;

template <typename T>
void init_mlm_head(ParameterStore<T>& s, int d_model, int vocab_size, Rng& rng);
template <typename T>
void init_pair_head(ParameterStore<T>& s, int d_model, Rng& rng);
// SFT and CRF heads: emission layer d -> gamma; CRF heads add "heads.ner.trans",
// and LCRF_NER adds omega_factor = 1 and omega_absolute = 0.
template <typename T>
void init_ner_head(ParameterStore<T>& s, int d_model, const TagScheme& scheme, NerHead head, Rng& rng);

struct MlmResult {
  Var loss;
  int correct = 0;
  int total = 0;
};

// Mean cross-entropy over the masked positions only.
template <typename T>
MlmResult mlm_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const MlmTarget> targets);

// Binary cross-entropy of a linear head on the [CLS] row.
template <typename T>
Var pair_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, int label);
template <typename T>
Var pair_logit(Graph<T>& g, ParameterStore<T>& s, Var hidden);

template <typename T>
Var ner_emissions(Graph<T>& g, ParameterStore<T>& s, Var hidden);

// Mean token cross-entropy over gamma IOB classes.
template <typename T>
Var sft_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const int> classes);

struct CseTargets {
  std::vector<int> start;
  std::vector<int> end;
  std::vector<int> cls;  // entity index, or num_entities for O
};

CseTargets cse_targets(const std::vector<std::string>& token_tags, const TagScheme& scheme);

struct CseLogits {
  Var start;  // n x 1
  Var end;    // n x 1
  Var cls;    // n x (e + 1)
};

template <typename T>
CseLogits cse_logits(Graph<T>& g, ParameterStore<T>& s, Var hidden);
// J_start + J_end + mean class cross-entropy.
template <typename T>
Var cse_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, const CseTargets& targets);
// Same loss evaluated directly on probabilities.
double cse_loss_value(const CseOutput& out, const CseTargets& targets);
template <typename T>
CseOutput cse_output(const Graph<T>& g, const CseLogits& logits);

// Transition matrix of a CRF head: the raw weights for LCRF, the composed
// matrix for LCRF_NER, or the fixed-penalty variant when `hard_forbidden`.
template <typename T>
Var crf_transitions(Graph<T>& g, ParameterStore<T>& s, NerHead head, const TagScheme& scheme,
                    bool hard_forbidden = false);

// CRF negative log-likelihood over rows [begin, end) of the emissions.
template <typename T>
Var lcrf_loss(Graph<T>& g, ParameterStore<T>& s, Var hidden, std::span<const int> classes,
              NerHead head, const TagScheme& scheme, int begin, int end, bool hard_forbidden = false);

}  // namespace tagformer
