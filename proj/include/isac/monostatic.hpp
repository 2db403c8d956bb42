#pragma once

#include "isac/ab_classic.hpp"
#include "isac/channel.hpp"

namespace isac {

/// max I(X;Y|S) over p(x) with E[X^2] <= power_budget, computed as the
/// classical capacity of the composite channel X -> (Y,S) (valid because S is
/// independent of X).
CapacityResult monostatic_rate(const ChannelModel& channel, double power_budget,
                               const CapacityConfig& config = {});

/// Expected posterior variance sum_x p(x) sum_z p(z|x) Var(S|x,z) under the
/// given input distribution (the estimator knows X).
double monostatic_distortion(const ChannelModel& channel, const DiscreteDistribution& p_x);

/// Same, under the rate-optimal input (requires channel.power_budget metadata
/// or an explicitly provided budget).
double monostatic_distortion(const ChannelModel& channel);

}  // namespace isac
