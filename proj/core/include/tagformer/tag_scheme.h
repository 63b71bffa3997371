#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tagformer/tensor.h"

namespace tagformer {

// IOB classes in the order B-X_1..B-X_e, I-X_1..I-X_e, O (0-based ids).
class TagScheme {
 public:
  explicit TagScheme(std::vector<std::string> entities);

  int num_entities() const { return static_cast<int>(entities_.size()); }
  int num_classes() const { return 2 * num_entities() + 1; }
  int outside_class() const { return 2 * num_entities(); }
  const std::vector<std::string>& entities() const { return entities_; }

  // Throws DataError for tags outside the scheme.
  int class_of(const std::string& tag) const;
  std::string tag_of(int cls) const;

  // Entity index for B-X/I-X, num_entities() for O (the CSE class id).
  int entity_class_of(const std::string& tag) const;

 private:
  std::vector<std::string> entities_;
  std::unordered_map<std::string, int> index_;
};

// F[i][j] = 1 iff class j is I-X and i is neither I-X nor B-X of the same X.
Matrix<int> forbidden_matrix(int n_entities);

}  // namespace tagformer
