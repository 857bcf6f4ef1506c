#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

struct GradCheckReport {
  double max_rel_error = 0.0;
  size_t worst_input = 0;
  int64_t worst_element = 0;
};

// Central finite differences against reverse-mode for a scalar-valued f.
// Inputs are perturbed in place and restored. Tensors larger than
// max_elements get a seeded random subsample of that many elements.
// Relative error per element: |ad - fd| / max(|ad|, |fd|, 1e-8).
GradCheckReport gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          const std::vector<Tensor>& inputs, double eps = 1e-5,
                          int64_t max_elements = 200, uint64_t seed = 0);

}  // namespace lane
