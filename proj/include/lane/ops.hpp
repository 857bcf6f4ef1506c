#pragma once

#include <cstdint>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

// Boolean attention mask, true = attend. Row-major [rows, cols].
struct BoolMask {
  int64_t rows = 0, cols = 0;
  std::vector<uint8_t> data;

  static BoolMask all_true(int64_t rows, int64_t cols) {
    return {rows, cols, std::vector<uint8_t>(static_cast<size_t>(rows * cols), 1)};
  }
  uint8_t at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols + c)]; }
  void set(int64_t r, int64_t c, bool v) { data[static_cast<size_t>(r * cols + c)] = v ? 1 : 0; }
};

// Shapes follow standard dense conventions; every op checks compatibility
// and reports both shapes on mismatch. All reductions run in a fixed
// sequential order, so results are bitwise reproducible.

Tensor matmul(const Tensor& a, const Tensor& b);            // [m,k]x[k,n]
Tensor add(const Tensor& a, const Tensor& b);               // same shape
Tensor add_rowvec(const Tensor& a, const Tensor& v);        // [m,n] + [n]
Tensor mul_rowvec(const Tensor& a, const Tensor& v);        // [m,n] * [n]
Tensor reshape(const Tensor& a, std::vector<int64_t> shape);
Tensor scale(const Tensor& a, double s);
Tensor mul(const Tensor& a, const Tensor& b);               // hadamard
Tensor concat_rows(const Tensor& a, const Tensor& b);       // [m1,n];[m2,n]
Tensor slice_rows(const Tensor& a, int64_t begin, int64_t end);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);  // [V,d] -> [ids,d]
Tensor softmax_lastdim(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // x[m,i] w[i,o] b[o]
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);

// Per-row layer norm with learnable affine. Variance is floored at 1e-5 so
// near-constant rows stay differentiable and finite.
inline constexpr double kLayerNormVarFloor = 1e-5;
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// Fused masked multi-head scaled-dot-product attention. q [nq,d], k/v
// [nk,d], d divisible by n_heads. A mask row with no true entry is a
// malformed pathway and is rejected. Masked positions contribute exact
// zeros to every reduction, so growing the key set with masked-off entries
// cannot change the output bits.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const BoolMask& mask,
                 int n_heads);

// Mean cross-entropy over rows whose target != ignore_id; logits [n,V].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets, int ignore_id);

}  // namespace lane
