#include "isac/channel.hpp"

#include <cmath>

namespace isac {

namespace {

// Standard normal CDF via erfc; Phi(-t) and 1 - Phi(t) agree bit-for-bit under
// grid negation because both reduce to the same erfc expression.
inline double norm_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

// Symmetric uniform grid: v_i = (2i - (n-1)) * half_step, so v_{n-1-i} is the
// exact negation of v_i.
std::vector<double> symmetric_linspace(double half_width, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = 0.0;
        return v;
    }
    const double t = half_width / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = static_cast<double>(2.0 * static_cast<double>(i) - static_cast<double>(n - 1)) * t;
    return v;
}

// Edges e_j = (2j - n) * (half_width / n), j = 0..n: symmetric, e_0 = -e_n.
std::vector<double> symmetric_edges(double half_width, std::size_t n) {
    std::vector<double> e(n + 1);
    const double t = half_width / static_cast<double>(n);
    for (std::size_t j = 0; j <= n; ++j)
        e[j] = static_cast<double>(2.0 * static_cast<double>(j) - static_cast<double>(n)) * t;
    return e;
}

// Mass of N(mean, sigma^2) in uniform bins over the edge list; the outermost
// bins extend to +-infinity. Renormalized exactly.
void gaussian_bin_mass(double mean, double sigma, const std::vector<double>& edges,
                       double* out) {
    const std::size_t n = edges.size() - 1;
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double hi = k + 1 == n ? 1.0 : norm_cdf((edges[k + 1] - mean) / sigma);
        double lo = k == 0 ? 0.0 : norm_cdf((edges[k] - mean) / sigma);
        out[k] = std::max(hi - lo, 0.0);
        total += out[k];
    }
    for (std::size_t k = 0; k < n; ++k) out[k] /= total;
}

std::vector<double> bin_centers(const std::vector<double>& edges) {
    std::vector<double> c(edges.size() - 1);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) c[k] = 0.5 * (edges[k] + edges[k + 1]);
    return c;
}

}  // namespace

void GaussianSpec::validate() const {
    if (!(sigma_s_sq > 0) || !(sigma_1_sq > 0) || !(sigma_2_sq > 0) || !(power_budget > 0))
        throw std::invalid_argument("GaussianSpec: variances and power budget must be positive");
    if (n_x < 2 || n_s < 2 || n_y < 2 || n_z < 2)
        throw std::invalid_argument("GaussianSpec: grid sizes must be >= 2");
    if (!(truncation_multiplier > 0))
        throw std::invalid_argument("GaussianSpec: truncation_multiplier must be positive");
}

void ChannelModel::validate() const {
    alpha_s.validate();
    alpha_x.validate();
    alpha_y.validate();
    alpha_z.validate();
    if (mode == ChannelMode::Full) {
        state_prior.validate();
        if (state_prior.size() != ns())
            throw std::invalid_argument("ChannelModel: state prior size mismatch");
        if (kernel_y.rank() != 3 || kernel_y.dim(0) != nx() || kernel_y.dim(1) != ns() ||
            kernel_y.dim(2) != ny())
            throw std::invalid_argument("ChannelModel: kernel_y shape mismatch");
        if (kernel_z.rank() != 3 || kernel_z.dim(0) != nx() || kernel_z.dim(1) != ns() ||
            kernel_z.dim(2) != nz())
            throw std::invalid_argument("ChannelModel: kernel_z shape mismatch");
        const std::vector<std::size_t> want{0, 1};
        if (kernel_y.given_axes() != want || kernel_z.given_axes() != want)
            throw std::invalid_argument("ChannelModel: kernels must condition on (x,s)");
    } else {
        if (kernel_y_only.rank() != 2 || kernel_y_only.dim(0) != nx() ||
            kernel_y_only.dim(1) != ny())
            throw std::invalid_argument("ChannelModel: kernel_y_only shape mismatch");
        if (kernel_zs.rank() != 3 || kernel_zs.dim(0) != nx() || kernel_zs.dim(1) != nz() ||
            kernel_zs.dim(2) != ns())
            throw std::invalid_argument("ChannelModel: kernel_zs shape mismatch");
        const std::vector<std::size_t> want{0};
        if (kernel_y_only.given_axes() != want || kernel_zs.given_axes() != want)
            throw std::invalid_argument("ChannelModel: kernels must condition on x");
    }
}

std::vector<double> ChannelModel::joint_ys_given_x() const {
    if (mode != ChannelMode::Full)
        throw std::invalid_argument("joint_ys_given_x: requires the full factorization");
    std::vector<double> out(nx() * ns() * ny());
    const auto& ky = kernel_y.mass();  // [x][s][y]
    for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t s = 0; s < ns(); ++s) {
            const double ps = state_prior.mass[s];
            const std::size_t base = (x * ns() + s) * ny();
            for (std::size_t y = 0; y < ny(); ++y) out[base + y] = ps * ky[base + y];
        }
    return out;
}

std::vector<double> ChannelModel::joint_zs_given_x() const {
    std::vector<double> out(nx() * ns() * nz());
    if (mode == ChannelMode::Full) {
        const auto& kz = kernel_z.mass();  // [x][s][z]
        for (std::size_t x = 0; x < nx(); ++x)
            for (std::size_t s = 0; s < ns(); ++s) {
                const double ps = state_prior.mass[s];
                const std::size_t base = (x * ns() + s) * nz();
                for (std::size_t z = 0; z < nz(); ++z) out[base + z] = ps * kz[base + z];
            }
    } else {
        const auto& kzs = kernel_zs.mass();  // [x][z][s]
        for (std::size_t x = 0; x < nx(); ++x)
            for (std::size_t z = 0; z < nz(); ++z)
                for (std::size_t s = 0; s < ns(); ++s)
                    out[(x * ns() + s) * nz() + z] = kzs[(x * nz() + z) * ns() + s];
    }
    return out;
}

std::vector<double> ChannelModel::z_given_x() const {
    auto zs = joint_zs_given_x();
    std::vector<double> out(nx() * nz(), 0.0);
    for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t s = 0; s < ns(); ++s)
            for (std::size_t z = 0; z < nz(); ++z)
                out[x * nz() + z] += zs[(x * ns() + s) * nz() + z];
    return out;
}

std::vector<double> ChannelModel::y_given_x() const {
    if (mode == ChannelMode::Markov) return kernel_y_only.mass();
    auto ys = joint_ys_given_x();
    std::vector<double> out(nx() * ny(), 0.0);
    for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t s = 0; s < ns(); ++s)
            for (std::size_t y = 0; y < ny(); ++y)
                out[x * ny() + y] += ys[(x * ns() + s) * ny() + y];
    return out;
}

std::vector<double> ChannelModel::joint_yzs_given_x() const {
    if (mode != ChannelMode::Full)
        throw std::invalid_argument("joint_yzs_given_x: requires the full factorization");
    std::vector<double> out(nx() * ns() * ny() * nz());
    const auto& ky = kernel_y.mass();
    const auto& kz = kernel_z.mass();
    for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t s = 0; s < ns(); ++s) {
            const double ps = state_prior.mass[s];
            for (std::size_t y = 0; y < ny(); ++y) {
                const double pys = ps * ky[(x * ns() + s) * ny() + y];
                const std::size_t base = ((x * ns() + s) * ny() + y) * nz();
                for (std::size_t z = 0; z < nz(); ++z)
                    out[base + z] = pys * kz[(x * ns() + s) * nz() + z];
            }
        }
    return out;
}

ChannelModel build_discrete(const DiscreteDistribution& state_prior, const JointTable& kernel_y,
                            const JointTable& kernel_z, Alphabet alpha_x) {
    ChannelModel m;
    m.mode = ChannelMode::Full;
    m.state_prior = state_prior;
    m.alpha_s = state_prior.alphabet;
    m.alpha_x = std::move(alpha_x);
    if (kernel_y.rank() != 3 || kernel_z.rank() != 3)
        throw std::invalid_argument("build_discrete: kernels must have axes (x,s,out)");
    m.alpha_y = kernel_y.axis(2);
    m.alpha_z = kernel_z.axis(2);
    m.kernel_y = kernel_y;
    m.kernel_z = kernel_z;
    m.validate();
    return m;
}

ChannelModel build_discrete_markov(const JointTable& kernel_y_only, const JointTable& kernel_zs,
                                   Alphabet alpha_x, Alphabet alpha_s) {
    ChannelModel m;
    m.mode = ChannelMode::Markov;
    m.alpha_x = std::move(alpha_x);
    m.alpha_s = std::move(alpha_s);
    if (kernel_y_only.rank() != 2 || kernel_zs.rank() != 3)
        throw std::invalid_argument("build_discrete_markov: expected p(y|x) and p(z,s|x)");
    m.alpha_y = kernel_y_only.axis(1);
    m.alpha_z = kernel_zs.axis(1);
    m.kernel_y_only = kernel_y_only;
    m.kernel_zs = kernel_zs;
    m.validate();
    return m;
}

ChannelModel discretize_gaussian(const GaussianSpec& spec) {
    spec.validate();
    const double sigma_s = std::sqrt(spec.sigma_s_sq);
    const double sigma_1 = std::sqrt(spec.sigma_1_sq);
    const double sigma_2 = std::sqrt(spec.sigma_2_sq);
    const double trunc = spec.truncation_multiplier;

    // Input grid: +-2.5*sqrt(B) covers the heavy-tailed optimum under the
    // power constraint.
    const double x_half = 2.5 * std::sqrt(spec.power_budget);
    auto x_vals = symmetric_linspace(x_half, spec.n_x);

    // State bins: CDF mass over uniform edges at +-trunc*sigma_s, centered
    // values, renormalized (the truncation loses only the tail mass).
    auto s_edges = symmetric_edges(trunc * sigma_s, spec.n_s);
    auto s_vals = bin_centers(s_edges);
    std::vector<double> s_mass(spec.n_s);
    {
        double total = 0.0;
        for (std::size_t j = 0; j < spec.n_s; ++j) {
            s_mass[j] = norm_cdf(s_edges[j + 1] / sigma_s) - norm_cdf(s_edges[j] / sigma_s);
            total += s_mass[j];
        }
        for (double& v : s_mass) v /= total;
    }

    // Output bins cover every conditional mean +- trunc * noise std dev; the
    // mean grid is symmetric so the range is too.
    const double mean_max = x_vals.back() + s_vals.back();
    auto y_edges = symmetric_edges(mean_max + trunc * sigma_1, spec.n_y);
    auto z_edges = symmetric_edges(mean_max + trunc * sigma_2, spec.n_z);

    std::vector<double> ky(spec.n_x * spec.n_s * spec.n_y);
    std::vector<double> kz(spec.n_x * spec.n_s * spec.n_z);
    for (std::size_t x = 0; x < spec.n_x; ++x)
        for (std::size_t s = 0; s < spec.n_s; ++s) {
            const double mean = x_vals[x] + s_vals[s];
            gaussian_bin_mass(mean, sigma_1, y_edges, &ky[(x * spec.n_s + s) * spec.n_y]);
            gaussian_bin_mass(mean, sigma_2, z_edges, &kz[(x * spec.n_s + s) * spec.n_z]);
        }

    Alphabet alpha_s(spec.n_s, s_vals);
    Alphabet alpha_x(spec.n_x, x_vals);
    Alphabet alpha_y(spec.n_y, bin_centers(y_edges));
    Alphabet alpha_z(spec.n_z, bin_centers(z_edges));

    ChannelModel m;
    m.mode = ChannelMode::Full;
    m.alpha_s = alpha_s;
    m.alpha_x = alpha_x;
    m.alpha_y = alpha_y;
    m.alpha_z = alpha_z;
    m.state_prior = DiscreteDistribution(alpha_s, s_mass);
    m.kernel_y = JointTable::kernel({alpha_x, alpha_s, alpha_y}, {0, 1}, std::move(ky));
    m.kernel_z = JointTable::kernel({alpha_x, alpha_s, alpha_z}, {0, 1}, std::move(kz));
    m.power_budget = spec.power_budget;
    m.validate();
    return m;
}

ChannelModel to_markov(const ChannelModel& full) {
    if (full.mode == ChannelMode::Markov) return full;
    auto py = full.y_given_x();  // sum_s P_S(s) p(y|x,s)
    auto zs = full.joint_zs_given_x();
    // Reorder [x][s][z] -> [x][z][s] for the kernel_zs layout.
    std::vector<double> kzs(full.nx() * full.nz() * full.ns());
    for (std::size_t x = 0; x < full.nx(); ++x)
        for (std::size_t s = 0; s < full.ns(); ++s)
            for (std::size_t z = 0; z < full.nz(); ++z)
                kzs[(x * full.nz() + z) * full.ns() + s] = zs[(x * full.ns() + s) * full.nz() + z];

    ChannelModel m;
    m.mode = ChannelMode::Markov;
    m.alpha_s = full.alpha_s;
    m.alpha_x = full.alpha_x;
    m.alpha_y = full.alpha_y;
    m.alpha_z = full.alpha_z;
    m.state_prior = full.state_prior;
    m.kernel_y_only = JointTable::kernel({full.alpha_x, full.alpha_y}, {0}, std::move(py));
    m.kernel_zs = JointTable::kernel({full.alpha_x, full.alpha_z, full.alpha_s}, {0},
                                     std::move(kzs));
    m.power_budget = full.power_budget;
    m.validate();
    return m;
}

double power(const DiscreteDistribution& p_x) {
    if (!p_x.alphabet.has_values())
        throw std::invalid_argument("power: X alphabet has no grid values");
    double e = 0.0;
    for (std::size_t i = 0; i < p_x.mass.size(); ++i)
        e += p_x.mass[i] * p_x.alphabet.values[i] * p_x.alphabet.values[i];
    return e;
}

}  // namespace isac
