#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace lane {

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct TensorNode {
  std::vector<int64_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily by backward()
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;  // empty for leaves
  uint64_t seq = 0;        // creation order; parents always precede children
  const char* op = "leaf";
  bool metered = false;

  ~TensorNode();
};

// Value-semantics handle over an immutable 64-bit tensor. Creating one
// under grad mode records the producing op on a per-thread tape expressed
// through parent links; backward() walks them in reverse creation order,
// which is deterministic and a valid topological order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor from_data(std::vector<int64_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  const std::vector<int64_t>& shape() const { return node_->shape; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  int64_t dim(int i) const { return node_->shape[i]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }

  const std::vector<double>& data() const { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const;
  void zero_grad();

  // Leaf mutation for optimizers and finite differencing only.
  std::vector<double>& mutable_data();

  bool defined() const { return node_ != nullptr; }
  TensorNode* node() const { return node_.get(); }
  std::shared_ptr<TensorNode> node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

// Scalar-rooted reverse pass. Accumulates into every reachable
// requires_grad node; grads are not cleared first.
void backward(const Tensor& loss);

// Grad-mode control (per thread). While disabled, ops produce plain values
// with no parent links.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// --- Instrumentation (per thread) ---

// Activation accounting: while a MeterScope is open, every tensor created
// on this thread is counted (8 bytes per element) until it dies.
namespace meter {
void begin();            // start counting new tensors
void end();              // stop counting new tensors
int64_t current_bytes();
int64_t peak_bytes();
void reset_peak();
}  // namespace meter

class MeterScope {
 public:
  MeterScope() { meter::begin(); }
  ~MeterScope() { meter::end(); }
  MeterScope(const MeterScope&) = delete;
  MeterScope& operator=(const MeterScope&) = delete;
};

// FLOP accounting for matmul-class work (2 * multiply-accumulates).
namespace flops {
void reset();
int64_t count();
void add(int64_t n);
}  // namespace flops

// Internal helper shared by op implementations.
Tensor make_node(std::vector<int64_t> shape, std::vector<double> value, const char* op,
                 std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn);
void check_finite(const Tensor& t, const char* op);

}  // namespace lane
