#include "tagformer/tag_scheme.h"

#include "tagformer/error.h"

namespace tagformer {

TagScheme::TagScheme(std::vector<std::string> entities) : entities_(std::move(entities)) {
  for (int i = 0; i < num_entities(); ++i) {
    if (entities_[i].empty() || !index_.emplace(entities_[i], i).second) {
      throw DataError("entity names must be unique and non-empty");
    }
  }
}

int TagScheme::class_of(const std::string& tag) const {
  if (tag == "O") return outside_class();
  if (tag.size() > 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
    auto it = index_.find(tag.substr(2));
    if (it != index_.end()) return tag[0] == 'B' ? it->second : num_entities() + it->second;
  }
  throw DataError("tag '" + tag + "' is not part of the tag scheme");
}

std::string TagScheme::tag_of(int cls) const {
  const int e = num_entities();
  if (cls < 0 || cls > 2 * e) throw std::out_of_range("class id out of range");
  if (cls < e) return "B-" + entities_[cls];
  if (cls < 2 * e) return "I-" + entities_[cls - e];
  return "O";
}

int TagScheme::entity_class_of(const std::string& tag) const {
  const int c = class_of(tag);
  const int e = num_entities();
  return c == 2 * e ? e : c % e;
}

Matrix<int> forbidden_matrix(int e) {
  const int gamma = 2 * e + 1;
  Matrix<int> f(gamma, gamma);
  for (int i = 0; i < gamma; ++i) {
    for (int j = e; j < 2 * e; ++j) {
      if (i != j && i != j - e) f(i, j) = 1;
    }
  }
  return f;
}

}  // namespace tagformer
