#include "isac/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace isac {

namespace {

// Guarded p*log(p/q) accumulation helpers: zero-weight terms are skipped so no
// 0 * (-inf) ever materializes.
inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

std::string axis_list(const std::vector<std::size_t>& axes) {
    std::string s = "{";
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(axes[i]);
    }
    return s + "}";
}

}  // namespace

Alphabet::Alphabet(std::size_t n, std::vector<double> vals) : size(n), values(std::move(vals)) {
    validate();
}

void Alphabet::validate() const {
    if (size < 1) throw std::invalid_argument("Alphabet: size must be >= 1");
    if (!values.empty()) {
        if (values.size() != size)
            throw std::invalid_argument("Alphabet: values length != size");
        for (std::size_t i = 1; i < size; ++i)
            if (!(values[i] > values[i - 1]))
                throw std::invalid_argument("Alphabet: values must be strictly increasing");
    }
}

DiscreteDistribution::DiscreteDistribution(Alphabet a, std::vector<double> m)
    : alphabet(std::move(a)), mass(std::move(m)) {
    validate();
}

double DiscreteDistribution::mean() const {
    if (!alphabet.has_values())
        throw std::invalid_argument("DiscreteDistribution::mean: alphabet has no grid values");
    double m = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) m += mass[i] * alphabet.values[i];
    return m;
}

void DiscreteDistribution::validate(double tol) const {
    alphabet.validate();
    if (mass.size() != alphabet.size)
        throw std::invalid_argument("DiscreteDistribution: mass length != alphabet size");
    double total = 0.0;
    for (double v : mass) {
        if (!(v >= 0.0)) throw std::invalid_argument("DiscreteDistribution: negative mass");
        total += v;
    }
    if (std::abs(total - 1.0) > tol)
        throw std::invalid_argument("DiscreteDistribution: mass sums to " + std::to_string(total));
}

JointTable::JointTable(std::vector<Alphabet> axes, std::vector<std::size_t> given,
                       std::vector<double> mass)
    : axes_(std::move(axes)), given_(std::move(given)), mass_(std::move(mass)) {
    compute_strides();
}

void JointTable::compute_strides() {
    strides_.assign(axes_.size(), 1);
    for (std::size_t i = axes_.size(); i-- > 1;)
        strides_[i - 1] = strides_[i] * axes_[i].size;
}

JointTable JointTable::joint(std::vector<Alphabet> axes, std::vector<double> mass) {
    JointTable t(std::move(axes), {}, std::move(mass));
    t.validate();
    return t;
}

JointTable JointTable::kernel(std::vector<Alphabet> axes, std::vector<std::size_t> given,
                              std::vector<double> mass, double norm_tol) {
    std::sort(given.begin(), given.end());
    JointTable t(std::move(axes), std::move(given), std::move(mass));
    t.validate(norm_tol);
    return t;
}

std::size_t JointTable::flat_index(const std::vector<std::size_t>& idx) const {
    if (idx.size() != axes_.size()) throw std::invalid_argument("JointTable: index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= axes_[i].size) throw std::invalid_argument("JointTable: index out of range");
        flat += idx[i] * strides_[i];
    }
    return flat;
}

void JointTable::unflatten(std::size_t flat, std::vector<std::size_t>& idx) const {
    idx.resize(axes_.size());
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        idx[i] = flat / strides_[i];
        flat %= strides_[i];
    }
}

void JointTable::validate(double tol) const {
    std::size_t expect = 1;
    for (const auto& a : axes_) {
        a.validate();
        expect *= a.size;
    }
    if (mass_.size() != expect)
        throw std::invalid_argument("JointTable: mass length does not match axis sizes");
    for (double v : mass_)
        if (!(v >= 0.0)) throw std::invalid_argument("JointTable: negative mass");
    for (std::size_t g : given_)
        if (g >= axes_.size()) throw std::invalid_argument("JointTable: unknown conditioning axis");

    if (is_joint()) {
        double total = std::accumulate(mass_.begin(), mass_.end(), 0.0);
        if (std::abs(total - 1.0) > tol)
            throw std::invalid_argument("JointTable: joint mass sums to " + std::to_string(total));
        return;
    }
    // Conditional mode: each slice over the conditioning axes sums to 1.
    std::size_t n_slices = 1;
    for (std::size_t g : given_) n_slices *= axes_[g].size;
    std::vector<double> slice_sum(n_slices, 0.0);
    std::vector<std::size_t> idx;
    for (std::size_t f = 0; f < mass_.size(); ++f) {
        unflatten(f, idx);
        std::size_t key = 0;
        for (std::size_t g : given_) key = key * axes_[g].size + idx[g];
        slice_sum[key] += mass_[f];
    }
    for (std::size_t k = 0; k < n_slices; ++k)
        if (std::abs(slice_sum[k] - 1.0) > tol)
            throw std::invalid_argument("JointTable: conditional slice " + std::to_string(k) +
                                        " sums to " + std::to_string(slice_sum[k]));
}

JointTable marginalize(const JointTable& joint, const std::vector<std::size_t>& keep_axes) {
    if (!joint.is_joint())
        throw std::invalid_argument("marginalize: input must be in joint mode");
    if (keep_axes.empty()) throw std::invalid_argument("marginalize: keep_axes empty");
    for (std::size_t a : keep_axes) {
        if (a >= joint.rank())
            throw std::invalid_argument("marginalize: unknown axis in " + axis_list(keep_axes));
    }
    {
        auto sorted = keep_axes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("marginalize: duplicate axis in keep_axes");
    }

    std::vector<Alphabet> out_axes;
    out_axes.reserve(keep_axes.size());
    std::size_t out_total = 1;
    for (std::size_t a : keep_axes) {
        out_axes.push_back(joint.axis(a));
        out_total *= joint.dim(a);
    }
    std::vector<double> out_mass(out_total, 0.0);

    // Output strides in the keep order (row-major over out_axes).
    std::vector<std::size_t> out_strides(keep_axes.size(), 1);
    for (std::size_t i = keep_axes.size(); i-- > 1;)
        out_strides[i - 1] = out_strides[i] * out_axes[i].size;

    std::vector<std::size_t> idx;
    const auto& mass = joint.mass();
    for (std::size_t f = 0; f < mass.size(); ++f) {
        if (mass[f] == 0.0) continue;
        joint.unflatten(f, idx);
        std::size_t of = 0;
        for (std::size_t i = 0; i < keep_axes.size(); ++i) of += idx[keep_axes[i]] * out_strides[i];
        out_mass[of] += mass[f];
    }
    return JointTable::joint(std::move(out_axes), std::move(out_mass));
}

JointTable condition(const JointTable& joint, const std::vector<std::size_t>& given_axes) {
    if (!joint.is_joint())
        throw std::invalid_argument("condition: input must be in joint mode");
    if (given_axes.empty() || given_axes.size() >= joint.rank())
        throw std::invalid_argument("condition: given_axes must be a proper nonempty subset");
    for (std::size_t a : given_axes)
        if (a >= joint.rank()) throw std::invalid_argument("condition: unknown axis");

    auto given = given_axes;
    std::sort(given.begin(), given.end());

    std::size_t n_slices = 1;
    for (std::size_t g : given) n_slices *= joint.dim(g);
    std::size_t free_cells = joint.total_size() / n_slices;

    std::vector<double> slice_sum(n_slices, 0.0);
    std::vector<std::size_t> idx;
    const auto& mass = joint.mass();
    std::vector<std::size_t> slice_of(mass.size());
    for (std::size_t f = 0; f < mass.size(); ++f) {
        joint.unflatten(f, idx);
        std::size_t key = 0;
        for (std::size_t g : given) key = key * joint.dim(g) + idx[g];
        slice_of[f] = key;
        slice_sum[key] += mass[f];
    }

    std::vector<double> out(mass.size());
    const double uniform = 1.0 / static_cast<double>(free_cells);
    for (std::size_t f = 0; f < mass.size(); ++f) {
        double denom = slice_sum[slice_of[f]];
        out[f] = denom > 0.0 ? mass[f] / denom : uniform;
    }
    return JointTable::kernel(joint.axes(), given, std::move(out), 1e-9);
}

double entropy(const std::vector<double>& mass) {
    double h = 0.0;
    for (double p : mass) h -= xlogx(p);
    return h;
}

double entropy(const DiscreteDistribution& dist) { return entropy(dist.mass); }

double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("kl_divergence: alphabet size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) {
        double pi = p.mass[i];
        if (pi == 0.0) continue;
        if (q.mass[i] == 0.0) return std::numeric_limits<double>::infinity();
        d += pi * std::log(pi / q.mass[i]);
    }
    return d;
}

double conditional_mutual_information(const JointTable& joint,
                                      const std::vector<std::size_t>& x_axes,
                                      const std::vector<std::size_t>& y_axes,
                                      const std::vector<std::size_t>& cond_axes) {
    if (!joint.is_joint())
        throw std::invalid_argument("conditional_mutual_information: input must be joint");
    if (x_axes.empty() || y_axes.empty())
        throw std::invalid_argument("conditional_mutual_information: empty axis group");

    // Direct form: sum p(x,y,c) log [ p(x,y,c) p(c) / (p(x,c) p(y,c)) ].
    // The three marginals are accumulated keyed on (x,c), (y,c), (c).
    auto key_dims = [&joint](const std::vector<std::size_t>& axes) {
        std::size_t n = 1;
        for (std::size_t a : axes) n *= joint.dim(a);
        return n;
    };
    std::vector<std::size_t> xc_axes = x_axes, yc_axes = y_axes;
    xc_axes.insert(xc_axes.end(), cond_axes.begin(), cond_axes.end());
    yc_axes.insert(yc_axes.end(), cond_axes.begin(), cond_axes.end());

    std::size_t n_xc = key_dims(xc_axes), n_yc = key_dims(yc_axes), n_c = key_dims(cond_axes);
    std::vector<double> p_xc(n_xc, 0.0), p_yc(n_yc, 0.0), p_c(n_c, 0.0);

    auto key_of = [&joint](const std::vector<std::size_t>& idx,
                           const std::vector<std::size_t>& axes) {
        std::size_t k = 0;
        for (std::size_t a : axes) k = k * joint.dim(a) + idx[a];
        return k;
    };

    const auto& mass = joint.mass();
    std::vector<std::size_t> idx;
    std::vector<std::size_t> kxc(mass.size()), kyc(mass.size()), kc(mass.size());
    for (std::size_t f = 0; f < mass.size(); ++f) {
        joint.unflatten(f, idx);
        kxc[f] = key_of(idx, xc_axes);
        kyc[f] = key_of(idx, yc_axes);
        kc[f] = key_of(idx, cond_axes);
        p_xc[kxc[f]] += mass[f];
        p_yc[kyc[f]] += mass[f];
        p_c[kc[f]] += mass[f];
    }

    // p over (x,y,c) is the joint marginalized over any leftover axes.
    std::vector<std::size_t> xyc_axes = x_axes;
    xyc_axes.insert(xyc_axes.end(), y_axes.begin(), y_axes.end());
    xyc_axes.insert(xyc_axes.end(), cond_axes.begin(), cond_axes.end());
    std::size_t n_xyc = key_dims(xyc_axes);
    std::vector<double> p_xyc(n_xyc, 0.0);
    std::vector<std::size_t> kxyc(mass.size());
    for (std::size_t f = 0; f < mass.size(); ++f) {
        joint.unflatten(f, idx);
        kxyc[f] = key_of(idx, xyc_axes);
        p_xyc[kxyc[f]] += mass[f];
    }

    // One pass over distinct (x,y,c) cells. Logs are taken factor by factor:
    // every marginal is at least the cell mass, so each argument is positive,
    // whereas the products could underflow to zero for heavily tilted inputs.
    double info = 0.0;
    std::vector<bool> seen(n_xyc, false);
    for (std::size_t f = 0; f < mass.size(); ++f) {
        std::size_t k = kxyc[f];
        if (seen[k] || p_xyc[k] == 0.0) continue;
        seen[k] = true;
        info += p_xyc[k] * (std::log(p_xyc[k]) + std::log(p_c[kc[f]]) -
                            std::log(p_xc[kxc[f]]) - std::log(p_yc[kyc[f]]));
    }
    return std::max(info, 0.0);
}

}  // namespace isac
