#include "edgetsn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "edgetsn/error.hpp"

namespace edgetsn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(OpGraph& graph, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw ContractError("finite-difference epsilon must lie in (0, 1e-2]");
  }
  const NodeId loss = graph.output();
  graph.forward();
  if (graph.value(loss).size() != 1) {
    throw ContractError("finite-difference check needs a scalar loss, got " +
                        shape_to_string(graph.value(loss).shape()));
  }
  const GradientMap analytic = graph.backward(loss, Tensor::scalar(1.0));

  GradCheckReport report;
  for (const std::string& name : graph.trainable_parameters()) {
    const NodeId pid = graph.parameter_id(name);
    const Tensor original = graph.value(pid);
    if (!original.all_finite()) {
      throw ContractError("parameter '" + name + "' has non-finite entries");
    }
    const Tensor& grad = analytic.at(name);
    double worst = 0.0;
    Tensor probe = original;
    for (std::size_t i = 0; i < original.size(); ++i) {
      probe[i] = original[i] + epsilon;
      graph.set_value(pid, probe);
      graph.forward();
      const double up = graph.value(loss)[0];
      probe[i] = original[i] - epsilon;
      graph.set_value(pid, probe);
      graph.forward();
      const double down = graph.value(loss)[0];
      probe[i] = original[i];

      const double numeric = (up - down) / (2.0 * epsilon);
      const double err = relative_error(grad[i], numeric);
      ++report.coordinates_checked;
      worst = std::max(worst, err);
      if (report.worst_parameter.empty() || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = grad[i];
        report.worst_numeric = numeric;
      }
    }
    graph.set_value(pid, original);
    report.per_parameter[name] = worst;
  }
  graph.forward();
  return report;
}

GradCheckReport finite_difference_check(OpGraph& graph, const std::vector<std::pair<NodeId, Tensor>>& inputs,
                                        double epsilon) {
  for (const auto& [id, value] : inputs) {
    graph.set_value(id, value);
  }
  return finite_difference_check(graph, epsilon);
}

}  // namespace edgetsn
