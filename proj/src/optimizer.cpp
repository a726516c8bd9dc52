#include "edgetsn/optimizer.hpp"

#include <cmath>

#include "edgetsn/error.hpp"

namespace edgetsn {

std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") {
    return OptimizerKind::sgd;
  }
  if (s == "adam") {
    return OptimizerKind::adam;
  }
  throw ContractError("unknown optimizer '" + std::string(s) + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ContractError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) {
    throw ContractError("weight decay must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw ContractError("adam epsilon must be > 0");
  }
}

namespace {

Tensor& state_for(std::map<std::string, Tensor>& state, const std::string& name, const Shape& shape) {
  auto it = state.find(name);
  if (it == state.end()) {
    it = state.emplace(name, Tensor(shape, 0.0)).first;
  }
  return it->second;
}

Tensor& param_for(std::map<std::string, Tensor>& params, const std::string& name, const Tensor& grad) {
  const auto it = params.find(name);
  if (it == params.end()) {
    throw ContractError("gradient for unknown parameter '" + name + "'");
  }
  if (it->second.shape() != grad.shape()) {
    throw ShapeError("gradient shape mismatch for '" + name + "'");
  }
  return it->second;
}

}  // namespace

Sgd::Sgd(OptimizerConfig config) : config_(config) { config_.validate(); }

void Sgd::step(std::map<std::string, Tensor>& params, const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    Tensor& p = param_for(params, name, g);
    Tensor& v = state_for(velocity_, name, g.shape());
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = config_.momentum * v[i] + g[i] + config_.weight_decay * p[i];
      p[i] -= config_.learning_rate * v[i];
    }
  }
}

Adam::Adam(OptimizerConfig config) : config_(config) { config_.validate(); }

void Adam::step(std::map<std::string, Tensor>& params, const GradientMap& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (const auto& [name, g] : grads) {
    Tensor& p = param_for(params, name, g);
    Tensor& m = state_for(m_, name, g.shape());
    Tensor& v = state_for(v_, name, g.shape());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + config_.weight_decay * p[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      p[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config) {
  if (config.kind == OptimizerKind::sgd) {
    return std::make_unique<Sgd>(config);
  }
  return std::make_unique<Adam>(config);
}

}  // namespace edgetsn
