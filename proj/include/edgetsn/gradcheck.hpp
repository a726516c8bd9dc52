#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "edgetsn/graph.hpp"

namespace edgetsn {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
  std::map<std::string, double> per_parameter;
};

// Central-difference check of every trainable coordinate against
// OpGraph::backward. Relative error uses max(|analytic|, |numeric|, 1e-8) as
// the denominator. The graph output must be a scalar. Frozen parameters are
// not perturbed and do not appear in the report. Parameter values are
// restored before returning.
GradCheckReport finite_difference_check(OpGraph& graph, double epsilon);
GradCheckReport finite_difference_check(OpGraph& graph, const std::vector<std::pair<NodeId, Tensor>>& inputs,
                                        double epsilon);

double relative_error(double analytic, double numeric);

}  // namespace edgetsn
