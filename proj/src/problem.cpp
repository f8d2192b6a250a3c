#include "polytraj/problem.hpp"

#include <stdexcept>

namespace polytraj {

void Problem::validate() const {
  shape.validate();
  if (x0.size() != shape.state_dim())
    throw std::invalid_argument("Problem: x0 dimension mismatch");
  weights.validate(shape);
  if (!corridor.empty()) {
    if (static_cast<int>(corridor.size()) != shape.segments)
      throw std::invalid_argument(
          "Problem: corridor length must equal segment count");
    for (const auto& poly : corridor) poly.validate(shape.dim);
    if (!basis.has_degree(shape.degree))
      throw std::invalid_argument(
          "Problem: control-point basis lacks the trajectory degree");
  }
  bounds.validate(shape.half_order());
  if (!bounds.by_order.empty())
    for (const auto& [order, range] : bounds.by_order)
      if (!basis.has_degree(shape.degree - order))
        throw std::invalid_argument(
            "Problem: control-point basis lacks degree for bound order " +
            std::to_string(order));
  if (t_min <= 0.0)
    throw std::invalid_argument("Problem: t_min must be > 0");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::LineSearchFailed: return "line_search_failed";
    case SolveStatus::RegularizationFailed: return "regularization_failed";
    case SolveStatus::InfeasibleInput: return "infeasible_input";
  }
  return "unknown";
}

}  // namespace polytraj
