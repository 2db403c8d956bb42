#pragma once

#include <optional>
#include <utility>

#include "isac/channel.hpp"
#include "isac/prob.hpp"
#include "isac/solver_types.hpp"

namespace isac {

/// Auxiliary squared-error estimator c(u,z), units of S.
struct EstimatorTable {
    std::size_t nu = 0;
    std::size_t nz = 0;
    std::vector<double> values;  // row-major (u major)

    double at(std::size_t u, std::size_t z) const { return values[u * nz + z]; }
};

/// Free posteriors: q(x|u,y,s) on axes (u,y,s,x), q(u|z) on axes (z,u).
struct QPair {
    JointTable q_x_uys;
    JointTable q_u_z;
};

/// Wrap a flat (u-major) joint pmf over (u,x) into a JointTable.
JointTable make_p_ux(std::vector<double> flat, std::size_t nu, const Alphabet& alpha_x);

/// True objective I(X;Y|U,S) + I(U;Z) at p(u,x), assembled through prob_core.
double objective_F(const JointTable& p_ux, const ChannelModel& channel);

/// Posterior updates q(x|u,y,s) = p(x|u,y,s), q(u|z) = p(u|z); zero-mass
/// conditioning slices are filled uniform.
QPair update_q(const JointTable& p_ux, const ChannelModel& channel);

/// Conditional-mean estimator c(u,z) = E[S | u, z]; prior mean E[S] where the
/// (u,z) marginal has no mass.
EstimatorTable update_c(const JointTable& p_ux, const ChannelModel& channel);

/// w(u,x) = sum_{s,z} p(z,s|x) (s - c(u,z))^2, flat (u major).
std::vector<double> distortion_weights(const EstimatorTable& c, const ChannelModel& channel);

/// d[q](u,x) = sum_{y,s} p(y,s|x) ln q(x|u,y,s) + sum_z p(z|x) ln q(u|z),
/// flat (u major); -infinity where q vanishes on a positive-kernel cell.
std::vector<double> exponent_base(const QPair& q, const ChannelModel& channel);

/// Extended alternating-maximization solve of the squared-error problem at
/// distortion target D, optionally with the input power constraint
/// E[X^2] <= power_budget. Throws DistortionInfeasible when no restart admits
/// a multiplier root.
SolveResult solve(const ChannelModel& channel, double D, const SolverConfig& config,
                  std::optional<double> power_budget = std::nullopt);

}  // namespace isac
