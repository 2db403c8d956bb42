#pragma once

#include "isac/prob.hpp"
#include "isac/solver_types.hpp"

namespace isac {

struct CapacityConfig {
    double tol = 1e-9;
    int max_iters = 5000;
    RootConfig root;
};

struct CapacityResult {
    DiscreteDistribution input_dist;
    double capacity = 0.0;  // nats
    double mu = 0.0;        // cost multiplier (0 without a cost constraint)
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // per-iteration surrogate objective, non-decreasing
};

/// Classical alternating-maximization capacity solver on p(y|x)
/// (kernel axes (x,y), conditioning on x).
CapacityResult capacity(const JointTable& kernel, const CapacityConfig& config = {});

/// Capacity under sum cost(x) * p(x) <= budget: the input update is tilted by
/// exp(-mu * cost) with mu rooted so the cost meets the budget (mu = 0 when
/// slack). Throws DistortionInfeasible when the budget is below min cost.
CapacityResult capacity_with_cost(const JointTable& kernel, const std::vector<double>& cost,
                                  double budget, const CapacityConfig& config = {});

}  // namespace isac
