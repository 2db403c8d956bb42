#pragma once

#include <optional>

#include "isac/channel.hpp"
#include "isac/prob.hpp"
#include "isac/solver_types.hpp"

namespace isac {

/// True objective I(X;Y|U) + I(U;Z) at p(u,x) under the Markov factorization
/// p(y|x), p(z,s|x). Throws std::invalid_argument for a full-mode channel.
double objective_F_ll(const JointTable& p_ux, const ChannelModel& channel);

/// Soft estimator f(s|u,z) = p(s|u,z) on axes (u,z,s); zero-mass (u,z) slices
/// filled uniform over s.
JointTable update_f(const JointTable& p_ux, const ChannelModel& channel);

/// w(u,x) = sum_{s,z} p(z,s|x) ln f(s|u,z) <= 0, flat (u major);
/// -sum p(u,x) w(u,x) is the expected log-loss.
std::vector<double> logloss_weights(const JointTable& f_s_uz, const ChannelModel& channel);

/// Extended alternating-maximization solve of the log-loss problem at entropy
/// target D (achieved value is H(S|U,Z)); optional power constraint as in the
/// squared-error solver.
SolveResult solve_ll(const ChannelModel& channel, double D, const SolverConfig& config,
                     std::optional<double> power_budget = std::nullopt);

}  // namespace isac
