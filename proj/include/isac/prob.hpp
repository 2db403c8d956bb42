#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

/// Finite support of one random variable. `values` optionally carries the
/// real-valued grid points (required for S and X where physical units matter).
struct Alphabet {
    std::size_t size = 0;
    std::vector<double> values;  // empty, or strictly increasing with length == size

    Alphabet() = default;
    explicit Alphabet(std::size_t n) : size(n) {}
    Alphabet(std::size_t n, std::vector<double> vals);

    bool has_values() const { return !values.empty(); }
    void validate() const;
};

/// Normalized pmf over one alphabet.
struct DiscreteDistribution {
    Alphabet alphabet;
    std::vector<double> mass;

    DiscreteDistribution() = default;
    DiscreteDistribution(Alphabet a, std::vector<double> m);

    std::size_t size() const { return alphabet.size; }
    /// E[value] — requires grid values.
    double mean() const;
    void validate(double tol = 1e-12) const;
};

/// Dense tensor over an ordered list of alphabets, row-major (last axis
/// fastest). Two modes: joint (total mass 1) or conditional (`given` lists the
/// conditioning axes; every slice over them sums to 1).
class JointTable {
public:
    JointTable() = default;

    static JointTable joint(std::vector<Alphabet> axes, std::vector<double> mass);
    static JointTable kernel(std::vector<Alphabet> axes, std::vector<std::size_t> given,
                             std::vector<double> mass, double norm_tol = 1e-9);

    std::size_t rank() const { return axes_.size(); }
    std::size_t dim(std::size_t axis) const { return axes_[axis].size; }
    std::size_t total_size() const { return mass_.size(); }
    bool is_joint() const { return given_.empty(); }

    const std::vector<Alphabet>& axes() const { return axes_; }
    const Alphabet& axis(std::size_t i) const { return axes_[i]; }
    const std::vector<std::size_t>& given_axes() const { return given_; }
    const std::vector<double>& mass() const { return mass_; }
    std::vector<double>& mass() { return mass_; }

    double at(const std::vector<std::size_t>& idx) const { return mass_[flat_index(idx)]; }
    double& at(const std::vector<std::size_t>& idx) { return mass_[flat_index(idx)]; }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const;
    /// Inverse of flat_index.
    void unflatten(std::size_t flat, std::vector<std::size_t>& idx) const;
    std::size_t stride(std::size_t axis) const { return strides_[axis]; }

    void validate(double tol = 1e-12) const;

private:
    JointTable(std::vector<Alphabet> axes, std::vector<std::size_t> given,
               std::vector<double> mass);
    void compute_strides();

    std::vector<Alphabet> axes_;
    std::vector<std::size_t> given_;  // sorted axis indices; empty => joint mode
    std::vector<double> mass_;
    std::vector<std::size_t> strides_;
};

/// Sum out all axes not in keep_axes; result axes follow the order of
/// keep_axes. Throws std::invalid_argument for unknown/empty axis sets or a
/// conditional-mode input.
JointTable marginalize(const JointTable& joint, const std::vector<std::size_t>& keep_axes);

/// p(free | given): divide by the marginal over given_axes; zero-mass slices
/// are filled with the uniform distribution over the free cells. Axis order is
/// preserved; result is in conditional mode.
JointTable condition(const JointTable& joint, const std::vector<std::size_t>& given_axes);

/// -sum p log p in nats, 0 log 0 = 0.
double entropy(const DiscreteDistribution& dist);
/// Entropy of a raw nonnegative mass vector (used for joint tables).
double entropy(const std::vector<double>& mass);

/// KL(p || q) in nats; +infinity when p puts mass where q does not.
double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// I(X; Y | C) in nats over the named axis groups; cond_axes may be empty.
double conditional_mutual_information(const JointTable& joint,
                                      const std::vector<std::size_t>& x_axes,
                                      const std::vector<std::size_t>& y_axes,
                                      const std::vector<std::size_t>& cond_axes);

}  // namespace isac
