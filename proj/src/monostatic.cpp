#include "isac/monostatic.hpp"

#include <stdexcept>

namespace isac {

CapacityResult monostatic_rate(const ChannelModel& channel, double power_budget,
                               const CapacityConfig& config) {
    channel.validate();
    if (channel.mode != ChannelMode::Full) {
        throw std::invalid_argument("monostatic_rate: requires the full factorization (p(y|x,s))");
    }
    if (!channel.alpha_x.has_values()) {
        throw std::invalid_argument("monostatic_rate: X alphabet carries no grid values");
    }
    const std::size_t nx = channel.nx();
    // Composite channel X -> (Y,S): p((y,s)|x) = P_S(s) p(y|x,s). Because S is
    // independent of X, its capacity is max I(X;Y,S) = max I(X;Y|S).
    std::vector<double> mass = channel.joint_ys_given_x();  // [x][s][y], row-major
    Alphabet out(channel.ns() * channel.ny());
    JointTable composite =
        JointTable::kernel({channel.alpha_x, out}, {0}, std::move(mass));

    std::vector<double> cost(nx);
    for (std::size_t x = 0; x < nx; ++x) {
        cost[x] = channel.alpha_x.values[x] * channel.alpha_x.values[x];
    }
    return capacity_with_cost(composite, cost, power_budget, config);
}

double monostatic_distortion(const ChannelModel& channel, const DiscreteDistribution& p_x) {
    channel.validate();
    p_x.validate();
    if (p_x.size() != channel.nx()) {
        throw std::invalid_argument("monostatic_distortion: input distribution size mismatch");
    }
    if (!channel.alpha_s.has_values()) {
        throw std::invalid_argument("monostatic_distortion: S alphabet carries no grid values");
    }
    const std::size_t nx = channel.nx(), ns = channel.ns(), nz = channel.nz();
    const std::vector<double> jzs = channel.joint_zs_given_x();  // [x][s][z]
    const std::vector<double>& sv = channel.alpha_s.values;

    // sum_x p(x) sum_z p(z|x) Var(S|x,z); per z the contribution collapses to
    // E[S^2 1{z}] - E[S 1{z}]^2 / p(z|x).
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        if (p_x.mass[x] == 0.0) continue;
        double acc = 0.0;
        for (std::size_t z = 0; z < nz; ++z) {
            double pz = 0.0, m1 = 0.0, m2 = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                const double w = jzs[(x * ns + s) * nz + z];
                pz += w;
                m1 += w * sv[s];
                m2 += w * sv[s] * sv[s];
            }
            if (pz > 0.0) acc += m2 - m1 * m1 / pz;
        }
        total += p_x.mass[x] * acc;
    }
    return total;
}

double monostatic_distortion(const ChannelModel& channel) {
    if (!channel.power_budget) {
        throw std::invalid_argument(
            "monostatic_distortion: channel carries no power budget; pass an input distribution");
    }
    CapacityResult cap = monostatic_rate(channel, *channel.power_budget);
    return monostatic_distortion(channel, cap.input_dist);
}

}  // namespace isac
