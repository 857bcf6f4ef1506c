#include "lane/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace lane {

namespace {

std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw NumericError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw NumericError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) shape_error("matmul", a, b);
  flops::add(2 * m * k * n);

  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out.data();
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t kk = 0; kk < k; ++kk) {
        const double aik = pa[i * k + kk];
        const double* brow = pb + kk * n;
        double* crow = pc + i * n;
        for (int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return make_node({m, n}, std::move(out), "matmul", {a, b}, [a, b, m, k, n](TensorNode& node) {
    const double* g = node.grad.data();
    if (a.requires_grad()) {
      auto& ga = a.node()->grad;
      if (ga.empty()) ga.assign(a.data().size(), 0.0);
      const double* pb = b.data().data();
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          const double* grow = g + i * n;
          const double* brow = pb + kk * n;
          for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + kk] += acc;
        }
      }
    }
    if (b.requires_grad()) {
      auto& gb = b.node()->grad;
      if (gb.empty()) gb.assign(b.data().size(), 0.0);
      const double* pa = a.data().data();
      for (int64_t kk = 0; kk < k; ++kk) {
        for (int64_t i = 0; i < m; ++i) {
          const double aik = pa[i * k + kk];
          const double* grow = g + i * n;
          double* gbrow = gb.data() + kk * n;
          for (int64_t j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  return make_node(a.shape(), std::move(out), "add", {a, b}, [a, b](TensorNode& node) {
    for (const Tensor& t : {a, b}) {
      if (!t.requires_grad()) continue;
      auto& g = t.node()->grad;
      if (g.empty()) g.assign(t.data().size(), 0.0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  require_rank2("add_rowvec", a);
  if (v.rank() != 1 || v.dim(0) != a.dim(1)) shape_error("add_rowvec", a, v);
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.data());
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out[i * n + j] += v.data()[j];
  }
  return make_node(a.shape(), std::move(out), "add_rowvec", {a, v}, [a, v, m, n](TensorNode& node) {
    if (a.requires_grad()) {
      auto& g = a.node()->grad;
      if (g.empty()) g.assign(a.data().size(), 0.0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
    if (v.requires_grad()) {
      auto& g = v.node()->grad;
      if (g.empty()) g.assign(v.data().size(), 0.0);
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) g[j] += node.grad[i * n + j];
      }
    }
  });
}

Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  require_rank2("mul_rowvec", a);
  if (v.rank() != 1 || v.dim(0) != a.dim(1)) shape_error("mul_rowvec", a, v);
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.data());
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out[i * n + j] *= v.data()[j];
  }
  return make_node(a.shape(), std::move(out), "mul_rowvec", {a, v}, [a, v, m, n](TensorNode& node) {
    if (a.requires_grad()) {
      auto& g = a.node()->grad;
      if (g.empty()) g.assign(a.data().size(), 0.0);
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) g[i * n + j] += node.grad[i * n + j] * v.data()[j];
      }
    }
    if (v.requires_grad()) {
      auto& g = v.node()->grad;
      if (g.empty()) g.assign(v.data().size(), 0.0);
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) g[j] += node.grad[i * n + j] * a.data()[i * n + j];
      }
    }
  });
}

Tensor reshape(const Tensor& a, std::vector<int64_t> shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  if (n != a.size()) {
    throw NumericError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                       shape_str(shape));
  }
  std::vector<double> out(a.data());
  return make_node(std::move(shape), std::move(out), "reshape", {a}, [a](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data());
  for (double& x : out) x *= s;
  return make_node(a.shape(), std::move(out), "scale", {a}, [a, s](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    for (size_t i = 0; i < g.size(); ++i) g[i] += s * node.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
  return make_node(a.shape(), std::move(out), "mul", {a, b}, [a, b](TensorNode& node) {
    if (a.requires_grad()) {
      auto& g = a.node()->grad;
      if (g.empty()) g.assign(a.data().size(), 0.0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * b.data()[i];
    }
    if (b.requires_grad()) {
      auto& g = b.node()->grad;
      if (g.empty()) g.assign(b.data().size(), 0.0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * a.data()[i];
    }
  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank2("concat_rows", a);
  require_rank2("concat_rows", b);
  if (a.dim(1) != b.dim(1)) shape_error("concat_rows", a, b);
  const int64_t m1 = a.dim(0), m2 = b.dim(0), n = a.dim(1);
  std::vector<double> out;
  out.reserve(static_cast<size_t>((m1 + m2) * n));
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  return make_node({m1 + m2, n}, std::move(out), "concat_rows", {a, b},
                   [a, b, m1, n](TensorNode& node) {
                     if (a.requires_grad()) {
                       auto& g = a.node()->grad;
                       if (g.empty()) g.assign(a.data().size(), 0.0);
                       for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
                     }
                     if (b.requires_grad()) {
                       auto& g = b.node()->grad;
                       if (g.empty()) g.assign(b.data().size(), 0.0);
                       const size_t off = static_cast<size_t>(m1 * n);
                       for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[off + i];
                     }
                   });
}

Tensor slice_rows(const Tensor& a, int64_t begin, int64_t end) {
  require_rank2("slice_rows", a);
  if (begin < 0 || end > a.dim(0) || begin >= end) {
    throw NumericError("slice_rows: bad range [" + std::to_string(begin) + "," +
                       std::to_string(end) + ") for " + shape_str(a.shape()));
  }
  const int64_t n = a.dim(1);
  std::vector<double> out(a.data().begin() + begin * n, a.data().begin() + end * n);
  return make_node({end - begin, n}, std::move(out), "slice_rows", {a},
                   [a, begin, n](TensorNode& node) {
                     if (!a.requires_grad()) return;
                     auto& g = a.node()->grad;
                     if (g.empty()) g.assign(a.data().size(), 0.0);
                     const size_t off = static_cast<size_t>(begin * n);
                     for (size_t i = 0; i < node.grad.size(); ++i) g[off + i] += node.grad[i];
                   });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  require_rank2("embedding", table);
  const int64_t v = table.dim(0), d = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw NumericError("embedding: id " + std::to_string(id) + " out of range [0," +
                         std::to_string(v) + ")");
    }
  }
  const int64_t m = static_cast<int64_t>(ids.size());
  std::vector<double> out(static_cast<size_t>(m * d));
  for (int64_t i = 0; i < m; ++i) {
    std::memcpy(out.data() + i * d, table.data().data() + static_cast<int64_t>(ids[i]) * d,
                sizeof(double) * static_cast<size_t>(d));
  }
  return make_node({m, d}, std::move(out), "embedding", {table}, [table, ids, d](TensorNode& node) {
    if (!table.requires_grad()) return;
    auto& g = table.node()->grad;
    if (g.empty()) g.assign(table.data().size(), 0.0);
    for (size_t i = 0; i < ids.size(); ++i) {
      double* row = g.data() + static_cast<int64_t>(ids[i]) * d;
      const double* src = node.grad.data() + static_cast<int64_t>(i) * d;
      for (int64_t j = 0; j < d; ++j) row[j] += src[j];
    }
  });
}

Tensor softmax_lastdim(const Tensor& a) {
  require_rank2("softmax", a);
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.data());
  for (int64_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int64_t j = 0; j < n; ++j) row[j] /= sum;
  }
  return make_node(a.shape(), std::move(out), "softmax", {a}, [a, m, n](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    for (int64_t i = 0; i < m; ++i) {
      const double* p = node.value.data() + i * n;
      const double* gy = node.grad.data() + i * n;
      double dotv = 0.0;
      for (int64_t j = 0; j < n; ++j) dotv += p[j] * gy[j];
      double* gx = g.data() + i * n;
      for (int64_t j = 0; j < n; ++j) gx[j] += p[j] * (gy[j] - dotv);
    }
  });
}

Tensor gelu(const Tensor& a) {
  std::vector<double> out(a.data());
  for (double& x : out) x = 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
  return make_node(a.shape(), std::move(out), "gelu", {a}, [a](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    for (size_t i = 0; i < g.size(); ++i) {
      const double x = a.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      g[i] += node.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowvec(matmul(x, w), b);
}

Tensor mean_all(const Tensor& a) {
  const int64_t n = a.size();
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_node({1}, {s / static_cast<double>(n)}, "mean_all", {a}, [a, n](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    const double gy = node.grad[0] / static_cast<double>(n);
    for (double& v : g) v += gy;
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_node({1}, {s}, "sum_all", {a}, [a](TensorNode& node) {
    if (!a.requires_grad()) return;
    auto& g = a.node()->grad;
    if (g.empty()) g.assign(a.data().size(), 0.0);
    for (double& v : g) v += node.grad[0];
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require_rank2("layer_norm", x);
  const int64_t m = x.dim(0), n = x.dim(1);
  if (gamma.rank() != 1 || gamma.dim(0) != n) shape_error("layer_norm", x, gamma);
  if (beta.rank() != 1 || beta.dim(0) != n) shape_error("layer_norm", x, beta);

  std::vector<double> out(static_cast<size_t>(m * n));
  std::vector<double> inv_std(static_cast<size_t>(m));
  std::vector<double> xhat(static_cast<size_t>(m * n));
  std::vector<uint8_t> floored(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mean = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    floored[i] = var < kLayerNormVarFloor;
    const double istd = 1.0 / std::sqrt(floored[i] ? kLayerNormVarFloor : var);
    inv_std[i] = istd;
    for (int64_t j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * istd;
      xhat[i * n + j] = h;
      out[i * n + j] = gamma.data()[j] * h + beta.data()[j];
    }
  }
  return make_node(
      x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
      [x, gamma, beta, m, n, inv_std, xhat, floored](TensorNode& node) {
        for (int64_t i = 0; i < m; ++i) {
          const double* gy = node.grad.data() + i * n;
          const double* h = xhat.data() + i * n;
          if (x.requires_grad()) {
            auto& gx = x.node()->grad;
            if (gx.empty()) gx.assign(x.data().size(), 0.0);
            // dxhat = gy * gamma; with the floor active the variance path
            // is dead, so only the mean-centering term remains.
            double sum_dh = 0.0, sum_dh_h = 0.0;
            for (int64_t j = 0; j < n; ++j) {
              const double dh = gy[j] * gamma.data()[j];
              sum_dh += dh;
              sum_dh_h += dh * h[j];
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (int64_t j = 0; j < n; ++j) {
              const double dh = gy[j] * gamma.data()[j];
              double dx = dh - inv_n * sum_dh;
              if (!floored[i]) dx -= h[j] * inv_n * sum_dh_h;
              gx[i * n + j] += dx * inv_std[i];
            }
          }
          if (gamma.requires_grad()) {
            auto& gg = gamma.node()->grad;
            if (gg.empty()) gg.assign(gamma.data().size(), 0.0);
            for (int64_t j = 0; j < n; ++j) gg[j] += gy[j] * h[j];
          }
          if (beta.requires_grad()) {
            auto& gb = beta.node()->grad;
            if (gb.empty()) gb.assign(beta.data().size(), 0.0);
            for (int64_t j = 0; j < n; ++j) gb[j] += gy[j];
          }
        }
      });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const BoolMask& mask,
                 int n_heads) {
  require_rank2("attention", q);
  require_rank2("attention", k);
  require_rank2("attention", v);
  const int64_t nq = q.dim(0), d = q.dim(1), nk = k.dim(0);
  if (k.dim(1) != d || v.dim(1) != d || v.dim(0) != nk) shape_error("attention", q, k);
  if (d % n_heads != 0) throw NumericError("attention: n_heads must divide d_model");
  if (mask.rows != nq || mask.cols != nk) {
    throw NumericError("attention: mask is " + std::to_string(mask.rows) + "x" +
                       std::to_string(mask.cols) + ", expected " + std::to_string(nq) + "x" +
                       std::to_string(nk));
  }
  int64_t pairs = 0;
  for (int64_t i = 0; i < nq; ++i) {
    int64_t row_pairs = 0;
    for (int64_t j = 0; j < nk; ++j) row_pairs += (mask.at(i, j) != 0);
    if (row_pairs == 0) {
      throw NumericError("attention: fully-masked row " + std::to_string(i) +
                         " (malformed pathway mask)");
    }
    pairs += row_pairs;
  }

  const int64_t dh = d / n_heads;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(dh));
  flops::add(4 * pairs * d);  // QK^T and PV over attended pairs

  // Probabilities are stored for the backward pass: [heads][nq*nk].
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n_heads) * static_cast<size_t>(nq * nk), 0.0);
  std::vector<double> out(static_cast<size_t>(nq * d), 0.0);
  const double* pq = q.data().data();
  const double* pk = k.data().data();
  const double* pv = v.data().data();
  const double neg_inf = -std::numeric_limits<double>::infinity();

  for (int h = 0; h < n_heads; ++h) {
    const int64_t ho = static_cast<int64_t>(h) * dh;
    double* hp = probs->data() + static_cast<size_t>(h) * static_cast<size_t>(nq * nk);
    for (int64_t i = 0; i < nq; ++i) {
      double* prow = hp + i * nk;
      double mx = neg_inf;
      for (int64_t j = 0; j < nk; ++j) {
        if (!mask.at(i, j)) {
          prow[j] = neg_inf;
          continue;
        }
        double s = 0.0;
        const double* qi = pq + i * d + ho;
        const double* kj = pk + j * d + ho;
        for (int64_t t = 0; t < dh; ++t) s += qi[t] * kj[t];
        prow[j] = s * sigma;
        mx = std::max(mx, prow[j]);
      }
      double denom = 0.0;
      for (int64_t j = 0; j < nk; ++j) {
        prow[j] = mask.at(i, j) ? std::exp(prow[j] - mx) : 0.0;
        denom += prow[j];
      }
      const double inv = 1.0 / denom;
      double* orow = out.data() + i * d + ho;
      for (int64_t j = 0; j < nk; ++j) {
        prow[j] *= inv;
        if (prow[j] != 0.0) {
          const double* vj = pv + j * d + ho;
          for (int64_t t = 0; t < dh; ++t) orow[t] += prow[j] * vj[t];
        }
      }
    }
  }

  return make_node(
      {nq, d}, std::move(out), "attention", {q, k, v},
      [q, k, v, probs, n_heads, nq, nk, d, dh, sigma](TensorNode& node) {
        const bool need_q = q.requires_grad(), need_k = k.requires_grad(),
                   need_v = v.requires_grad();
        auto ensure = [](const Tensor& t) -> std::vector<double>* {
          if (!t.requires_grad()) return nullptr;
          auto& g = t.node()->grad;
          if (g.empty()) g.assign(t.data().size(), 0.0);
          return &g;
        };
        std::vector<double>* gq = ensure(q);
        std::vector<double>* gk = ensure(k);
        std::vector<double>* gv = ensure(v);
        std::vector<double> ds(static_cast<size_t>(nk));
        for (int h = 0; h < n_heads; ++h) {
          const int64_t ho = static_cast<int64_t>(h) * dh;
          const double* hp = probs->data() + static_cast<size_t>(h) * static_cast<size_t>(nq * nk);
          for (int64_t i = 0; i < nq; ++i) {
            const double* prow = hp + i * nk;
            const double* go = node.grad.data() + i * d + ho;
            // dP[j] = go . V_j ; dS = P o (dP - sum(dP o P))
            double dot_total = 0.0;
            for (int64_t j = 0; j < nk; ++j) {
              if (prow[j] == 0.0) {
                ds[j] = 0.0;
                continue;
              }
              double dp = 0.0;
              const double* vj = v.data().data() + j * d + ho;
              for (int64_t t = 0; t < dh; ++t) dp += go[t] * vj[t];
              ds[j] = dp;
              dot_total += dp * prow[j];
            }
            for (int64_t j = 0; j < nk; ++j) {
              ds[j] = prow[j] * (ds[j] - dot_total);
            }
            if (need_v) {
              for (int64_t j = 0; j < nk; ++j) {
                if (prow[j] == 0.0) continue;
                double* gvr = gv->data() + j * d + ho;
                for (int64_t t = 0; t < dh; ++t) gvr[t] += prow[j] * go[t];
              }
            }
            if (need_q) {
              double* gqr = gq->data() + i * d + ho;
              for (int64_t j = 0; j < nk; ++j) {
                if (ds[j] == 0.0) continue;
                const double* kj = k.data().data() + j * d + ho;
                for (int64_t t = 0; t < dh; ++t) gqr[t] += sigma * ds[j] * kj[t];
              }
            }
            if (need_k) {
              const double* qi = q.data().data() + i * d + ho;
              for (int64_t j = 0; j < nk; ++j) {
                if (ds[j] == 0.0) continue;
                double* gkr = gk->data() + j * d + ho;
                for (int64_t t = 0; t < dh; ++t) gkr[t] += sigma * ds[j] * qi[t];
              }
            }
          }
        }
      });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets, int ignore_id) {
  require_rank2("cross_entropy", logits);
  const int64_t n = logits.dim(0), vocab = logits.dim(1);
  if (static_cast<int64_t>(targets.size()) != n) {
    throw NumericError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                       std::to_string(n) + " rows");
  }
  int64_t active = 0;
  double total = 0.0;
  std::vector<double> lse(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    if (targets[i] == ignore_id) continue;
    if (targets[i] < 0 || targets[i] >= vocab) {
      throw NumericError("cross_entropy: target out of range at row " + std::to_string(i));
    }
    const double* row = logits.data().data() + i * vocab;
    double mx = row[0];
    for (int64_t j = 1; j < vocab; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int64_t j = 0; j < vocab; ++j) s += std::exp(row[j] - mx);
    lse[i] = mx + std::log(s);
    total += lse[i] - row[targets[i]];
    ++active;
  }
  if (active == 0) {
    throw NumericError("cross_entropy: every position is ignored (empty subsequence)");
  }
  const double inv_active = 1.0 / static_cast<double>(active);
  return make_node(
      {1}, {total * inv_active}, "cross_entropy", {logits},
      [logits, targets, ignore_id, n, vocab, lse, inv_active](TensorNode& node) {
        if (!logits.requires_grad()) return;
        auto& g = logits.node()->grad;
        if (g.empty()) g.assign(logits.data().size(), 0.0);
        const double gy = node.grad[0] * inv_active;
        for (int64_t i = 0; i < n; ++i) {
          if (targets[i] == ignore_id) continue;
          const double* row = logits.data().data() + i * vocab;
          double* grow = g.data() + i * vocab;
          for (int64_t j = 0; j < vocab; ++j) {
            const double p = std::exp(row[j] - lse[i]);
            grow[j] += gy * (p - (j == targets[i] ? 1.0 : 0.0));
          }
        }
      });
}

}  // namespace lane
