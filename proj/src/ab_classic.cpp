#include "isac/ab_classic.hpp"

#include <cmath>
#include <limits>

namespace isac {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct FlatKernel {
    std::size_t nx, ny;
    const std::vector<double>* k;
    std::vector<double> a;  // A(x) = sum_y k ln k
};

FlatKernel flatten(const JointTable& kernel) {
    if (kernel.rank() != 2 || kernel.given_axes() != std::vector<std::size_t>{0})
        throw std::invalid_argument("capacity: kernel must be p(y|x) with axes (x,y)");
    FlatKernel f{kernel.dim(0), kernel.dim(1), &kernel.mass(), {}};
    f.a.assign(f.nx, 0.0);
    for (std::size_t x = 0; x < f.nx; ++x)
        for (std::size_t y = 0; y < f.ny; ++y) {
            const double v = (*f.k)[x * f.ny + y];
            if (v > 0.0) f.a[x] += v * std::log(v);
        }
    return f;
}

// d(x) = sum_y p(y|x) ln q(x|y) for q = posterior of p; -inf on dead inputs.
void exponent(const FlatKernel& f, const std::vector<double>& p, std::vector<double>& d) {
    std::vector<double> m(f.ny, 0.0);
    for (std::size_t x = 0; x < f.nx; ++x) {
        if (p[x] == 0.0) continue;
        for (std::size_t y = 0; y < f.ny; ++y) m[y] += p[x] * (*f.k)[x * f.ny + y];
    }
    std::vector<double> log_m(f.ny, 0.0);
    for (std::size_t y = 0; y < f.ny; ++y)
        if (m[y] > 0.0) log_m[y] = std::log(m[y]);
    d.assign(f.nx, kNegInf);
    for (std::size_t x = 0; x < f.nx; ++x) {
        if (p[x] == 0.0) continue;
        double acc = std::log(p[x]) + f.a[x];
        for (std::size_t y = 0; y < f.ny; ++y) {
            const double v = (*f.k)[x * f.ny + y];
            if (v > 0.0) acc -= v * log_m[y];
        }
        d[x] = acc;
    }
}

double surrogate(const std::vector<double>& p, const std::vector<double>& d) {
    double f = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x)
        if (p[x] > 0.0) f += p[x] * (d[x] - std::log(p[x]));
    return f;
}

double mutual_information(const FlatKernel& f, const std::vector<double>& p) {
    std::vector<double> m(f.ny, 0.0);
    for (std::size_t x = 0; x < f.nx; ++x)
        for (std::size_t y = 0; y < f.ny; ++y) m[y] += p[x] * (*f.k)[x * f.ny + y];
    double info = 0.0;
    for (std::size_t x = 0; x < f.nx; ++x) {
        if (p[x] == 0.0) continue;
        for (std::size_t y = 0; y < f.ny; ++y) {
            const double v = (*f.k)[x * f.ny + y];
            if (v > 0.0) info += p[x] * v * std::log(v / m[y]);
        }
    }
    return std::max(info, 0.0);
}

CapacityResult run(const JointTable& kernel, const std::vector<double>* cost, double budget,
                   const CapacityConfig& config) {
    FlatKernel f = flatten(kernel);
    std::vector<double> p(f.nx, 1.0 / static_cast<double>(f.nx));

    // A uniform start can violate the budget; pre-tilt onto the feasible set so
    // the objective trace is monotone from the first constrained update.
    RootConfig root_cfg = config.root;
    if (cost) {
        TiltProblem init{1, f.nx, std::vector<double>(f.nx, 0.0), *cost, budget, -1};
        ScalarRoot r = solve_scalar(init, root_cfg);
        p = std::move(r.dist);
        root_cfg.lambda_hint = r.lambda > 0 ? std::optional<double>(r.lambda) : std::nullopt;
    }

    CapacityResult result;
    std::vector<double> d;
    double prev_f = kNegInf;
    for (int it = 1; it <= config.max_iters; ++it) {
        exponent(f, p, d);
        if (cost) {
            TiltProblem pr{1, f.nx, d, *cost, budget, -1};
            ScalarRoot r = solve_scalar(pr, root_cfg);
            p = std::move(r.dist);
            result.mu = r.lambda;
            root_cfg.lambda_hint = r.lambda > 0 ? std::optional<double>(r.lambda) : std::nullopt;
        } else {
            TiltProblem pr{1, f.nx, d, std::vector<double>(f.nx, 0.0), 0.0, -1};
            p = tilt_distribution(pr, 0.0);
        }
        const double f_val = surrogate(p, d);
        result.trace.push_back(f_val);
        result.iterations = it;
        if (prev_f != kNegInf && std::abs(f_val - prev_f) < config.tol) {
            result.converged = true;
            break;
        }
        prev_f = f_val;
    }

    result.capacity = mutual_information(f, p);
    Alphabet ax = kernel.axis(0);
    result.input_dist = DiscreteDistribution(std::move(ax), std::move(p));
    return result;
}

}  // namespace

CapacityResult capacity(const JointTable& kernel, const CapacityConfig& config) {
    return run(kernel, nullptr, 0.0, config);
}

CapacityResult capacity_with_cost(const JointTable& kernel, const std::vector<double>& cost,
                                  double budget, const CapacityConfig& config) {
    if (cost.size() != kernel.dim(0))
        throw std::invalid_argument("capacity_with_cost: cost length must match |X|");
    return run(kernel, &cost, budget, config);
}

}  // namespace isac
