#pragma once

#include <optional>

#include "isac/prob.hpp"

namespace isac {

/// Parameters of the additive Gaussian test channels: Y = S + X + N1,
/// Z = S + X + N2 with S ~ N(0, sigma_s_sq), N1 ~ N(0, sigma_1_sq),
/// N2 ~ N(0, sigma_2_sq), input power E[X^2] <= power_budget.
struct GaussianSpec {
    double sigma_s_sq = 1.0;
    double sigma_1_sq = 1.0;
    double sigma_2_sq = 2.0;
    double power_budget = 10.0;
    std::size_t n_x = 17;
    std::size_t n_s = 17;
    std::size_t n_y = 33;
    std::size_t n_z = 33;
    double truncation_multiplier = 4.0;

    void validate() const;
};

/// Which conditional factorization of p(y,z,s|x) is authoritative.
enum class ChannelMode {
    Full,    // state_prior, p(y|x,s), p(z|x,s)
    Markov,  // p(y|x), p(z,s|x)  (X - Y - (Z,S) structure)
};

/// State-dependent memoryless channel on finite grids.
struct ChannelModel {
    ChannelMode mode = ChannelMode::Full;

    Alphabet alpha_s;  // carries real state values
    Alphabet alpha_x;  // carries real input values when a power constraint is used
    Alphabet alpha_y;
    Alphabet alpha_z;

    DiscreteDistribution state_prior;  // P_S (Full mode; advisory in Markov mode)
    JointTable kernel_y;               // p(y|x,s), axes (x,s,y)   [Full]
    JointTable kernel_z;               // p(z|x,s), axes (x,s,z)   [Full]
    JointTable kernel_y_only;          // p(y|x),   axes (x,y)     [Markov]
    JointTable kernel_zs;              // p(z,s|x), axes (x,z,s)   [Markov]

    std::optional<double> power_budget;  // set by discretize_gaussian

    std::size_t nx() const { return alpha_x.size; }
    std::size_t ns() const { return alpha_s.size; }
    std::size_t ny() const { return alpha_y.size; }
    std::size_t nz() const { return alpha_z.size; }

    // Derived composite kernels (built on demand from whichever factorization
    // is authoritative):
    /// p(y,s|x) as flat [x][s][y] (Full mode only).
    std::vector<double> joint_ys_given_x() const;
    /// p(z,s|x) as flat [x][s][z].
    std::vector<double> joint_zs_given_x() const;
    /// p(z|x) as flat [x][z].
    std::vector<double> z_given_x() const;
    /// p(y|x) as flat [x][y] (marginal over s in Full mode).
    std::vector<double> y_given_x() const;
    /// p(y,z,s|x) as flat [x][s][y][z] (Full mode only).
    std::vector<double> joint_yzs_given_x() const;

    void validate() const;
};

/// Assemble a Full-mode model from user-supplied kernels. Throws
/// std::invalid_argument on shape mismatch or slices off by more than 1e-9.
ChannelModel build_discrete(const DiscreteDistribution& state_prior, const JointTable& kernel_y,
                            const JointTable& kernel_z, Alphabet alpha_x);

/// Assemble a Markov-mode model (log-loss factorization p(y|x), p(z,s|x)).
ChannelModel build_discrete_markov(const JointTable& kernel_y_only, const JointTable& kernel_zs,
                                   Alphabet alpha_x, Alphabet alpha_s);

/// Discretize the Gaussian model onto finite grids:
///  - X: n_x uniform points spanning +-2.5*sqrt(B);
///  - S: n_s bins over +-truncation_multiplier*sigma_s, mass = CDF differences,
///    values = bin centers, renormalized;
///  - Y/Z: n uniform bins covering all means +- truncation_multiplier * noise
///    std dev, outermost bins half-open (tail mass via CDF), slices
///    renormalized.
/// Grids are exactly symmetric under negation.
ChannelModel discretize_gaussian(const GaussianSpec& spec);

/// Reduce a Full-mode model to the Markov factorization by averaging out S
/// from the Y-kernel: p(y|x) = sum_s P_S(s) p(y|x,s), p(z,s|x) = P_S(s) p(z|x,s).
ChannelModel to_markov(const ChannelModel& full);

/// E[X^2] under p_x; requires grid values on the X alphabet.
double power(const DiscreteDistribution& p_x);

}  // namespace isac
