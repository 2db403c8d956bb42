#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace isac {

/// Distortion target below the minimum achievable value: G(lambda) = 0 has no
/// root on [0, lambda_max].
struct DistortionInfeasible : std::runtime_error {
    double target;
    double limiting_residual;  // residual at lambda_max (still negative)
    DistortionInfeasible(double target_, double limiting_residual_);
};

/// No (lambda, mu) >= 0 satisfies both the distortion and the power equation.
struct PairInfeasible : std::runtime_error {
    double distortion_residual;
    double power_residual;
    PairInfeasible(double distortion_residual_, double power_residual_);
};

/// Exponential-tilt family p(u,x) proportional to exp(d + sign*lambda*w).
/// sign = -1: squared-error convention (w >= 0, tilt e^{d - lambda w});
/// sign = +1: log-loss convention (w <= 0, tilt e^{d + lambda w}).
/// Either way the constraint residual is non-decreasing in lambda.
/// d entries may be -infinity (dead cells: zero mass at every lambda); w is
/// ignored on dead cells.
struct TiltProblem {
    std::size_t nu = 0;
    std::size_t nx = 0;
    std::vector<double> d;  // nu*nx, row-major (u major)
    std::vector<double> w;  // nu*nx, finite wherever d is finite
    double target = 0.0;    // D, or the budget B when used for a cost equation
    int sign = -1;

    void validate() const;
};

struct RootConfig {
    double root_tol = 1e-10;   // accepted |residual| at the returned multiplier
    double lambda_max = 1e6;   // bracket cap; no root below this => infeasible
    int max_bisect = 200;      // hard cap on bisection steps
    // Optional warm bracket hints (previous solution); purely a speedup.
    std::optional<double> lambda_hint;
    std::optional<double> mu_hint;
};

/// p_lambda(u,x) = exp(d + sign*lambda*w) / Z with max-exponent subtraction;
/// exact normalization; dead cells get zero mass.
std::vector<double> tilt_distribution(const TiltProblem& problem, double lambda);

/// SE mode: target - E_{p_lambda}[w]; log-loss mode: target + E_{p_lambda}[w].
double constraint_residual(const TiltProblem& problem, double lambda);

struct ScalarRoot {
    double lambda = 0.0;
    std::vector<double> dist;
    double residual = 0.0;
};

/// Monotone root of the constraint residual. lambda = 0 when the constraint is
/// already slack there; otherwise bracket by doubling and bisect. Throws
/// DistortionInfeasible when no root exists below lambda_max.
ScalarRoot solve_scalar(const TiltProblem& problem, const RootConfig& config);

struct PairRoot {
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<double> dist;
    double distortion_residual = 0.0;
    double power_residual = 0.0;
};

/// Two-multiplier solve: p proportional to exp(d + sign*lambda*w - mu*cost)
/// with E[w] pinned to the distortion target (or lambda = 0 if slack) and
/// E[cost] pinned to the budget (or mu = 0 if slack). Outer bisection on mu,
/// inner solve_scalar on lambda. cost is indexed per x (broadcast over u).
PairRoot solve_pair(const TiltProblem& problem, const std::vector<double>& cost_x,
                    double power_budget, const RootConfig& config);

}  // namespace isac
