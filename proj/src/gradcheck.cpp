#include "lane/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lane/rng.hpp"

namespace lane {

GradCheckReport gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          const std::vector<Tensor>& inputs, double eps, int64_t max_elements,
                          uint64_t seed) {
  for (const Tensor& t : inputs) {
    if (!t.requires_grad()) throw NumericError("gradcheck: all inputs must require grad");
    t.node()->grad.clear();
  }

  const Tensor loss = f(inputs);
  if (loss.size() != 1) throw NumericError("gradcheck: f must be scalar-valued");
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    analytic.push_back(t.grad());
  }

  GradCheckReport report;
  Rng rng(seed);
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    const Tensor& t = inputs[ti];
    const int64_t n = t.size();
    std::vector<int64_t> elems;
    if (n <= max_elements) {
      elems.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) elems[static_cast<size_t>(i)] = i;
    } else {
      for (int64_t i = 0; i < max_elements; ++i) {
        elems.push_back(static_cast<int64_t>(rng.below(static_cast<uint64_t>(n))));
      }
      std::sort(elems.begin(), elems.end());
      elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    }

    auto& data = t.node()->value;
    for (int64_t i : elems) {
      const double saved = data[static_cast<size_t>(i)];
      double f_plus, f_minus;
      {
        NoGradGuard ng;
        data[static_cast<size_t>(i)] = saved + eps;
        f_plus = f(inputs).item();
        data[static_cast<size_t>(i)] = saved - eps;
        f_minus = f(inputs).item();
        data[static_cast<size_t>(i)] = saved;
      }
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double ad = analytic[ti][static_cast<size_t>(i)];
      const double rel =
          std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-8});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = ti;
        report.worst_element = i;
      }
    }
  }
  return report;
}

}  // namespace lane
