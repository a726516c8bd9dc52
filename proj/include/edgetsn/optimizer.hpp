#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "edgetsn/graph.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Updates every parameter that has an entry in `grads`.
  virtual void step(std::map<std::string, Tensor>& params, const GradientMap& grads) = 0;
};

// v <- momentum * v + (g + decay * p);  p <- p - lr * v
class Sgd final : public Optimizer {
 public:
  explicit Sgd(OptimizerConfig config);
  void step(std::map<std::string, Tensor>& params, const GradientMap& grads) override;

 private:
  OptimizerConfig config_;
  std::map<std::string, Tensor> velocity_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(OptimizerConfig config);
  void step(std::map<std::string, Tensor>& params, const GradientMap& grads) override;

 private:
  OptimizerConfig config_;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  long steps_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config);

}  // namespace edgetsn
