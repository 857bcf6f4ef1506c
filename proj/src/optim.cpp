#include "lane/optim.hpp"

#include <cmath>

namespace lane {

AdamState AdamState::init(const ParamList& params, const AdamConfig& cfg) {
  AdamState state;
  state.cfg = cfg;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const auto& [name, p] : params) {
    state.m.emplace_back(p.data().size(), 0.0);
    state.v.emplace_back(p.data().size(), 0.0);
  }
  return state;
}

double cosine_lr(const AdamConfig& cfg, int64_t step) {
  if (cfg.total_steps <= 1) return cfg.lr_max;
  if (step >= cfg.total_steps) return cfg.lr_min;
  const double t = static_cast<double>(step - 1) / static_cast<double>(cfg.total_steps - 1);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(3.14159265358979323846 * t));
}

void adam_step(ParamList& params, AdamState& state) {
  if (state.m.size() != params.size()) {
    throw NumericError("adam_step: state does not match parameter list");
  }
  state.step += 1;
  const double lr = cosine_lr(state.cfg, state.step);
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& [name, p] = params[pi];
    auto& g = p.node()->grad;
    if (g.empty()) g.assign(p.data().size(), 0.0);
    for (double gv : g) {
      if (!std::isfinite(gv)) {
        throw NumericError("adam_step: non-finite gradient for parameter '" + name + "'");
      }
    }
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    auto& w = p.mutable_data();
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

}  // namespace lane
