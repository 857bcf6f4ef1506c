#include "lane/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace lane {

namespace {

std::atomic<uint64_t> g_seq{1};

thread_local int t_no_grad_depth = 0;

struct MeterState {
  int64_t cur = 0;
  int64_t peak = 0;
  int depth = 0;
};
thread_local MeterState t_meter;

thread_local int64_t t_flops = 0;

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

}  // namespace

TensorNode::~TensorNode() {
  if (metered) {
    t_meter.cur -= static_cast<int64_t>(value.capacity() * sizeof(double));
  }
}

bool grad_enabled() { return t_no_grad_depth == 0; }

NoGradGuard::NoGradGuard() { ++t_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --t_no_grad_depth; }

namespace meter {
void begin() { ++t_meter.depth; }
void end() { --t_meter.depth; }
int64_t current_bytes() { return t_meter.cur; }
int64_t peak_bytes() { return t_meter.peak; }
void reset_peak() { t_meter.peak = t_meter.cur; }
}  // namespace meter

namespace flops {
void reset() { t_flops = 0; }
int64_t count() { return t_flops; }
void add(int64_t n) { t_flops += n; }
}  // namespace flops

namespace {

std::shared_ptr<TensorNode> new_node(std::vector<int64_t> shape, std::vector<double> value) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  if (t_meter.depth > 0) {
    node->metered = true;
    t_meter.cur += static_cast<int64_t>(node->value.capacity() * sizeof(double));
    t_meter.peak = std::max(t_meter.peak, t_meter.cur);
  }
  return node;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  auto node = new_node(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
  node->requires_grad = requires_grad && grad_enabled();
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw NumericError("from_data: shape does not match data length");
  }
  auto node = new_node(std::move(shape), std::move(data));
  node->requires_grad = requires_grad && grad_enabled();
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

double Tensor::item() const {
  if (size() != 1) throw NumericError("item: tensor is not scalar");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad) throw NumericError("grad: tensor does not require grad");
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

std::vector<double>& Tensor::mutable_data() { return node_->value; }

Tensor make_node(std::vector<int64_t> shape, std::vector<double> value, const char* op,
                 std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn) {
  auto node = new_node(std::move(shape), std::move(value));
  node->op = op;
  if (grad_enabled()) {
    bool needs = false;
    for (const Tensor& p : parents) needs |= p.requires_grad();
    if (needs) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (const Tensor& p : parents) node->parents.push_back(p.node_ptr());
      node->backward = std::move(backward_fn);
    }
  }
  Tensor out(std::move(node));
  check_finite(out, op);
  return out;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
  }
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw NumericError("backward: loss must be scalar");
  if (!loss.requires_grad()) {
    throw NumericError("backward: loss does not require grad (no parameters on its path?)");
  }

  // Reachable sub-DAG, then reverse creation order.
  std::vector<TensorNode*> order;
  std::vector<TensorNode*> stack{loss.node()};
  std::unordered_set<const TensorNode*> seen;
  while (!stack.empty()) {
    TensorNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const TensorNode* a, const TensorNode* b) { return a->seq > b->seq; });

  for (TensorNode* n : order) {
    if (n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
  }
  loss.node()->grad[0] += 1.0;
  for (TensorNode* n : order) {
    if (n->backward) n->backward(*n);
  }
}

}  // namespace lane
