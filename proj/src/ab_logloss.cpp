#include "isac/ab_logloss.hpp"

#include <cmath>
#include <limits>

#include "isac/ab_se.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Workspace {
    std::size_t nx, ns, ny, nz;
    std::vector<double> py;   // [x][y] = p(y|x)
    std::vector<double> pzs;  // [x][s][z] = p(z,s|x)
    std::vector<double> pz;   // [x][z]
    std::vector<double> a;    // A(x) = sum_y p(y|x) ln p(y|x)
    std::vector<double> cost;
};

Workspace make_workspace(const ChannelModel& ch) {
    if (ch.mode != ChannelMode::Markov)
        throw std::invalid_argument("ab_logloss: channel must be in the Markov factorization");
    Workspace w;
    w.nx = ch.nx();
    w.ns = ch.ns();
    w.ny = ch.ny();
    w.nz = ch.nz();
    w.py = ch.y_given_x();
    w.pzs = ch.joint_zs_given_x();
    w.pz = ch.z_given_x();
    w.a.assign(w.nx, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x)
        for (std::size_t y = 0; y < w.ny; ++y) {
            const double v = w.py[x * w.ny + y];
            if (v > 0.0) w.a[x] += v * std::log(v);
        }
    if (ch.alpha_x.has_values()) {
        w.cost.resize(w.nx);
        for (std::size_t x = 0; x < w.nx; ++x)
            w.cost[x] = ch.alpha_x.values[x] * ch.alpha_x.values[x];
    }
    return w;
}

// f(s|u,z) as flat [u][z][s]; uniform over s where the (u,z) marginal is empty.
void soft_estimator_from(const Workspace& w, const std::vector<double>& p, std::size_t nu,
                         std::vector<double>& f) {
    f.assign(nu * w.nz * w.ns, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) {
            const double puX = p[u * w.nx + x];
            if (puX == 0.0) continue;
            for (std::size_t s = 0; s < w.ns; ++s)
                for (std::size_t z = 0; z < w.nz; ++z)
                    f[(u * w.nz + z) * w.ns + s] += puX * w.pzs[(x * w.ns + s) * w.nz + z];
        }
    const double uniform = 1.0 / static_cast<double>(w.ns);
    for (std::size_t uz = 0; uz < nu * w.nz; ++uz) {
        double total = 0.0;
        for (std::size_t s = 0; s < w.ns; ++s) total += f[uz * w.ns + s];
        if (total > 0.0)
            for (std::size_t s = 0; s < w.ns; ++s) f[uz * w.ns + s] /= total;
        else
            for (std::size_t s = 0; s < w.ns; ++s) f[uz * w.ns + s] = uniform;
    }
}

// w(u,x) = sum_{s,z} p(z,s|x) ln f(s|u,z); guarded logs (see header note —
// f > 0 wherever an alive cell puts kernel mass on it).
void weights_from(const Workspace& w, const std::vector<double>& f, std::size_t nu,
                  std::vector<double>& out) {
    std::vector<double> lf(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > 0.0) lf[i] = std::log(std::min(f[i], 1.0));
    out.assign(nu * w.nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) {
            double acc = 0.0;
            for (std::size_t s = 0; s < w.ns; ++s)
                for (std::size_t z = 0; z < w.nz; ++z) {
                    const double pk = w.pzs[(x * w.ns + s) * w.nz + z];
                    if (pk > 0.0) acc += pk * lf[(u * w.nz + z) * w.ns + s];
                }
            out[u * w.nx + x] = acc;
        }
}

void exponent_from(const Workspace& w, const std::vector<double>& p, std::size_t nu,
                   std::vector<double>& d) {
    std::vector<double> lmy(nu * w.ny, 0.0);
    std::vector<double> lq(nu * w.nz, 0.0);
    {
        std::vector<double> my(nu * w.ny, 0.0);
        std::vector<double> muz(nu * w.nz, 0.0);
        std::vector<double> mz(w.nz, 0.0);
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t x = 0; x < w.nx; ++x) {
                const double puX = p[u * w.nx + x];
                if (puX == 0.0) continue;
                for (std::size_t y = 0; y < w.ny; ++y)
                    my[u * w.ny + y] += puX * w.py[x * w.ny + y];
                for (std::size_t z = 0; z < w.nz; ++z)
                    muz[u * w.nz + z] += puX * w.pz[x * w.nz + z];
            }
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t z = 0; z < w.nz; ++z) mz[z] += muz[u * w.nz + z];
        for (std::size_t i = 0; i < my.size(); ++i)
            if (my[i] > 0.0) lmy[i] = std::log(my[i]);
        const double log_uniform = -std::log(static_cast<double>(nu));
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t z = 0; z < w.nz; ++z) {
                const std::size_t i = u * w.nz + z;
                if (mz[z] <= 0.0)
                    lq[i] = log_uniform;
                else
                    // A muz underflowing to zero for a live u means every
                    // contributing product sits below the denormal range; the
                    // matching read weights p(z|x) are equally tiny, so the
                    // term is numerically zero, not -infinity. Dead u rows are
                    // skipped before this value is ever read.
                    lq[i] = muz[i] > 0.0 ? std::log(muz[i]) - std::log(mz[z]) : 0.0;
            }
    }
    d.assign(nu * w.nx, kNegInf);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) {
            const double puX = p[u * w.nx + x];
            if (puX == 0.0) continue;
            double acc = std::log(puX) + w.a[x];
            for (std::size_t y = 0; y < w.ny; ++y) {
                const double pk = w.py[x * w.ny + y];
                if (pk > 0.0) acc -= pk * lmy[u * w.ny + y];
            }
            for (std::size_t z = 0; z < w.nz; ++z) {
                const double pk = w.pz[x * w.nz + z];
                if (pk > 0.0) acc += pk * lq[u * w.nz + z];
            }
            d[u * w.nx + x] = acc;
        }
}

double surrogate(const std::vector<double>& p, const std::vector<double>& d) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) f += p[i] * (d[i] - std::log(p[i]));
    return f;
}

// Masses this small cannot influence any expectation at double precision, yet
// their products with small kernel entries underflow to exact zero and would
// turn the next exponent into -infinity on a still-positive cell. Drop them.
void kill_negligible(std::vector<double>& p) {
    double total = 0.0;
    for (double& v : p) {
        if (v < 1e-250) v = 0.0;
        total += v;
    }
    if (total > 0.0)
        for (double& v : p) v /= total;
}

// Upper bound I(X;Y) + I(X;Z) at the input marginal (both terms dominate the
// objective terms through the U-X-(Y,Z) Markov structure).
double upper_bound(const Workspace& w, const std::vector<double>& p, std::size_t nu) {
    std::vector<double> px(w.nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) px[x] += p[u * w.nx + x];
    std::vector<double> my(w.ny, 0.0), mz(w.nz, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x) {
        if (px[x] == 0.0) continue;
        for (std::size_t y = 0; y < w.ny; ++y) my[y] += px[x] * w.py[x * w.ny + y];
        for (std::size_t z = 0; z < w.nz; ++z) mz[z] += px[x] * w.pz[x * w.nz + z];
    }
    double i1 = 0.0, i2 = 0.0;
    for (std::size_t x = 0; x < w.nx; ++x) {
        if (px[x] == 0.0) continue;
        // Guard on the weight products: if one underflows the marginal cell
        // may be zero too, and 0 * log(inf) would give NaN.
        for (std::size_t y = 0; y < w.ny; ++y) {
            const double pxv = px[x] * w.py[x * w.ny + y];
            if (pxv > 0.0) i1 += pxv * std::log(w.py[x * w.ny + y] / my[y]);
        }
        for (std::size_t z = 0; z < w.nz; ++z) {
            const double pxv = px[x] * w.pz[x * w.nz + z];
            if (pxv > 0.0) i2 += pxv * std::log(w.pz[x * w.nz + z] / mz[z]);
        }
    }
    return std::max(i1, 0.0) + std::max(i2, 0.0);
}

std::vector<double> blend_with_uniform(std::vector<double> p) {
    const double eps = 1e-3;
    const double floor = eps / static_cast<double>(p.size());
    double total = 0.0;
    for (double& v : p) {
        v = (1.0 - eps) * v + floor;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

std::vector<double> initial_distribution(std::size_t nu, std::size_t nx, int restart,
                                         double jitter, std::mt19937_64& gen) {
    std::vector<double> p(nu * nx);
    if (restart % 2 == 0) {
        std::fill(p.begin(), p.end(), 1.0);
    } else {
        const double bg = 0.05 / static_cast<double>(nx);
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t x = 0; x < nx; ++x)
                p[u * nx + x] = bg + (x == u % nx ? 0.95 : 0.0);
    }
    double total = 0.0;
    for (double& v : p) {
        v *= 1.0 + jitter * (2.0 * uniform01(gen) - 1.0);
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

double objective_F_ll(const JointTable& p_ux, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    const std::size_t nu = p_ux.dim(0), nx = p_ux.dim(1);
    if (nx != w.nx) throw std::invalid_argument("objective_F_ll: |X| mismatch");

    std::vector<double> juxy(nu * nx * w.ny, 0.0);
    std::vector<double> juz(nu * w.nz, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double puX = p_ux.mass()[u * nx + x];
            if (puX == 0.0) continue;
            for (std::size_t y = 0; y < w.ny; ++y)
                juxy[(u * nx + x) * w.ny + y] = puX * w.py[x * w.ny + y];
            for (std::size_t z = 0; z < w.nz; ++z)
                juz[u * w.nz + z] += puX * w.pz[x * w.nz + z];
        }
    JointTable jxy = JointTable::joint({Alphabet(nu), p_ux.axis(1), channel.alpha_y},
                                       std::move(juxy));
    JointTable jz = JointTable::joint({Alphabet(nu), channel.alpha_z}, std::move(juz));
    return conditional_mutual_information(jxy, {1}, {2}, {0}) +
           conditional_mutual_information(jz, {0}, {1}, {});
}

JointTable update_f(const JointTable& p_ux, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    std::vector<double> f;
    soft_estimator_from(w, p_ux.mass(), p_ux.dim(0), f);
    return JointTable::kernel({Alphabet(p_ux.dim(0)), channel.alpha_z, channel.alpha_s},
                              {0, 1}, std::move(f));
}

std::vector<double> logloss_weights(const JointTable& f_s_uz, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    if (f_s_uz.dim(1) != w.nz || f_s_uz.dim(2) != w.ns)
        throw std::invalid_argument("logloss_weights: estimator shape mismatch");
    std::vector<double> out;
    weights_from(w, f_s_uz.mass(), f_s_uz.dim(0), out);
    return out;
}

SolveResult solve_ll(const ChannelModel& channel, double D, const SolverConfig& config,
                     std::optional<double> power_budget) {
    if (!(D > 0)) throw std::invalid_argument("solve_ll: entropy target must be positive");
    Workspace w = make_workspace(channel);
    const std::size_t nu = config.u_size ? config.u_size : w.nx;
    const std::size_t nx = w.nx;
    if (power_budget && w.cost.empty())
        throw std::invalid_argument("solve_ll: power constraint needs X grid values");

    SolveResult best;
    bool have_best = false;
    int feasible = 0;
    std::exception_ptr last_infeasible;

    if (!config.init_p.empty() && config.init_p.size() != nu * nx)
        throw std::invalid_argument("solve_ll: init_p size mismatch");

    for (int r = 0; r < std::max(1, config.restarts); ++r) {
        std::mt19937_64 gen(splitmix64(config.seed + 0x9e37 * static_cast<std::uint64_t>(r)));
        std::vector<double> p = (r == 0 && !config.init_p.empty())
                                    ? blend_with_uniform(config.init_p)
                                    : initial_distribution(nu, nx, r, config.jitter, gen);

        RootConfig root_cfg = config.root;
        if (power_budget) {
            double ec = 0.0;
            for (std::size_t u = 0; u < nu; ++u)
                for (std::size_t x = 0; x < nx; ++x) ec += p[u * nx + x] * w.cost[x];
            if (ec > *power_budget) {
                std::vector<double> logp(nu * nx);
                for (std::size_t i = 0; i < p.size(); ++i) logp[i] = std::log(p[i]);
                std::vector<double> cost_ux(nu * nx);
                for (std::size_t u = 0; u < nu; ++u)
                    for (std::size_t x = 0; x < nx; ++x) cost_ux[u * nx + x] = w.cost[x];
                TiltProblem init{nu, nx, std::move(logp), std::move(cost_ux), *power_budget, -1};
                p = solve_scalar(init, root_cfg).dist;
                kill_negligible(p);
            }
        }

        std::vector<double> f, wt, d;
        soft_estimator_from(w, p, nu, f);
        weights_from(w, f, nu, wt);

        SolveResult run;
        run.nu = nu;
        run.nx = nx;
        double prev_post = kNegInf;
        double achieved = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) achieved -= p[i] * wt[i];
        bool start_failed = false;

        for (int it = 1; it <= config.max_iters; ++it) {
            exponent_from(w, p, nu, d);
            const double f_pre = surrogate(p, d);

            TiltProblem pr{nu, nx, d, wt, D, +1};
            for (std::size_t i = 0; i < pr.d.size(); ++i)
                if (pr.d[i] == kNegInf) pr.w[i] = 0.0;
            double lambda, mu = 0.0;
            try {
                if (power_budget) {
                    PairRoot root = solve_pair(pr, w.cost, *power_budget, root_cfg);
                    p = std::move(root.dist);
                    lambda = root.lambda;
                    mu = root.mu;
                } else {
                    ScalarRoot root = solve_scalar(pr, root_cfg);
                    p = std::move(root.dist);
                    lambda = root.lambda;
                }
            } catch (const DistortionInfeasible&) {
                start_failed = true;
                last_infeasible = std::current_exception();
                break;
            } catch (const PairInfeasible&) {
                start_failed = true;
                last_infeasible = std::current_exception();
                break;
            }
            kill_negligible(p);
            root_cfg.lambda_hint = lambda > 0 ? std::optional<double>(lambda) : std::nullopt;
            root_cfg.mu_hint = mu > 0 ? std::optional<double>(mu) : std::nullopt;

            const double f_post = surrogate(p, d);
            soft_estimator_from(w, p, nu, f);
            weights_from(w, f, nu, wt);
            achieved = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (p[i] > 0.0) achieved -= p[i] * wt[i];
            run.lambda = lambda;
            run.mu = mu;
            run.iterations = it;

            if (config.record_trace) {
                TraceEntry te;
                te.iteration = it;
                te.F_pre = it == 1 ? std::numeric_limits<double>::quiet_NaN() : f_pre;
                te.F_post = f_post;
                te.distortion = achieved;
                te.lambda = lambda;
                te.mu = mu;
                te.bound = upper_bound(w, p, nu);
                run.trace.push_back(te);
            }

            const bool binding_ok = lambda == 0.0 || std::abs(achieved - D) <= 1e-9;
            if (prev_post != kNegInf && std::abs(f_post - prev_post) < config.tol && binding_ok) {
                run.converged = true;
                break;
            }
            prev_post = f_post;
        }
        if (start_failed) continue;

        ++feasible;
        run.p_ux = p;
        run.achieved_distortion = achieved;
        run.rate_nats = surrogate(p, d);
        if (!have_best || run.rate_nats > best.rate_nats ||
            (run.converged && !best.converged && run.rate_nats >= best.rate_nats - 1e-12)) {
            best = std::move(run);
            have_best = true;
        }
    }

    if (!have_best) {
        if (last_infeasible) std::rethrow_exception(last_infeasible);
        throw DistortionInfeasible(D, -1.0);
    }

    best.feasible_restarts = feasible;
    best.rate_nats = objective_F_ll(make_p_ux(best.p_ux, nu, channel.alpha_x), channel);
    best.rate_bits = best.rate_nats / std::log(2.0);
    return best;
}

}  // namespace isac
