#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tagformer/encoder.h"
#include "tagformer/graph.h"
#include "tagformer/heads.h"
#include "tagformer/tokenizer.h"

namespace tagformer {

// Everything needed to rebuild a trained network. Layout in
// docs/checkpoint_format.md.
struct Model {
  EncoderConfig encoder;
  Vocabulary vocab;
  std::string objective;        // pre-training objective, informational
  std::optional<NerHead> head;  // set once fine-tuned
  std::vector<std::string> entities;
  bool hard_forbidden = false;
  ParameterStore<float> params;
};

void write_model(const Model& model, std::ostream& out);
// Throws DataError on a malformed stream.
Model read_model(std::istream& in);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace tagformer
