#include "isac/ab_se.hpp"

#include <cmath>
#include <limits>

#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Flattened channel quantities used by the iteration loop.
struct Workspace {
    std::size_t nx, ns, ny, nz;
    std::vector<double> pys;    // [x][s][y] = P_S(s) p(y|x,s)
    std::vector<double> pzs;    // [x][s][z] = P_S(s) p(z|x,s)
    std::vector<double> pz;     // [x][z]
    std::vector<double> a;      // A(x) = sum_{s,y} pys ln pys
    std::vector<double> bm;     // [x][z] = sum_s pzs * s
    std::vector<double> a2;     // [x]    = sum_{s,z} pzs * s^2
    std::vector<double> s_vals;
    std::vector<double> cost;   // x^2 over the input grid
    double s_mean = 0.0;
};

Workspace make_workspace(const ChannelModel& ch) {
    if (ch.mode != ChannelMode::Full)
        throw std::invalid_argument("ab_se: channel must be in the full factorization");
    if (!ch.alpha_s.has_values())
        throw std::invalid_argument("ab_se: S alphabet must carry real values");
    Workspace w;
    w.nx = ch.nx();
    w.ns = ch.ns();
    w.ny = ch.ny();
    w.nz = ch.nz();
    w.pys = ch.joint_ys_given_x();
    w.pzs = ch.joint_zs_given_x();
    w.pz = ch.z_given_x();
    w.s_vals = ch.alpha_s.values;
    w.s_mean = ch.state_prior.mean();

    w.a.assign(w.nx, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x)
        for (std::size_t i = 0; i < w.ns * w.ny; ++i) {
            const double v = w.pys[x * w.ns * w.ny + i];
            if (v > 0.0) w.a[x] += v * std::log(v);
        }

    w.bm.assign(w.nx * w.nz, 0.0);
    w.a2.assign(w.nx, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x)
        for (std::size_t s = 0; s < w.ns; ++s) {
            const double sv = w.s_vals[s];
            for (std::size_t z = 0; z < w.nz; ++z) {
                const double v = w.pzs[(x * w.ns + s) * w.nz + z];
                w.bm[x * w.nz + z] += v * sv;
                w.a2[x] += v * sv * sv;
            }
        }

    if (ch.alpha_x.has_values()) {
        w.cost.resize(w.nx);
        for (std::size_t x = 0; x < w.nx; ++x)
            w.cost[x] = ch.alpha_x.values[x] * ch.alpha_x.values[x];
    }
    return w;
}

void estimator_from(const Workspace& w, const std::vector<double>& p, std::size_t nu,
                    EstimatorTable& c) {
    c.nu = nu;
    c.nz = w.nz;
    c.values.assign(nu * w.nz, 0.0);
    std::vector<double> denom(nu * w.nz, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) {
            const double puX = p[u * w.nx + x];
            if (puX == 0.0) continue;
            for (std::size_t z = 0; z < w.nz; ++z) {
                c.values[u * w.nz + z] += puX * w.bm[x * w.nz + z];
                denom[u * w.nz + z] += puX * w.pz[x * w.nz + z];
            }
        }
    for (std::size_t i = 0; i < c.values.size(); ++i)
        c.values[i] = denom[i] > 0.0 ? c.values[i] / denom[i] : w.s_mean;
}

void weights_from(const Workspace& w, const EstimatorTable& c, std::vector<double>& out) {
    const std::size_t nu = c.nu;
    out.assign(nu * w.nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) {
            double acc = w.a2[x];
            for (std::size_t z = 0; z < w.nz; ++z) {
                const double cv = c.values[u * w.nz + z];
                acc += cv * (cv * w.pz[x * w.nz + z] - 2.0 * w.bm[x * w.nz + z]);
            }
            out[u * w.nx + x] = acc;
        }
}

// d[q](u,x) for q = posteriors of p, computed in marginal form:
//   sum_{y,s} p(y,s|x) ln q(x|u,y,s) = ln p(u,x) + A(x) - sum p(y,s|x) ln m(u,y,s),
// dead cells (p(u,x) = 0) get -inf.
void exponent_from(const Workspace& w, const std::vector<double>& p, std::size_t nu,
                   std::vector<double>& d) {
    const std::size_t nys = w.ns * w.ny;
    std::vector<double> lm(nu * nys, 0.0);   // ln m(u,y,s), 0 where massless
    std::vector<double> lq(nu * w.nz, 0.0);  // ln q(u|z)
    std::vector<double> mz(w.nz, 0.0);
    {
        std::vector<double> m(nu * nys, 0.0);
        std::vector<double> muz(nu * w.nz, 0.0);
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t x = 0; x < w.nx; ++x) {
                const double puX = p[u * w.nx + x];
                if (puX == 0.0) continue;
                const double* pys_x = &w.pys[x * nys];
                double* m_u = &m[u * nys];
                for (std::size_t i = 0; i < nys; ++i) m_u[i] += puX * pys_x[i];
                const double* pz_x = &w.pz[x * w.nz];
                double* muz_u = &muz[u * w.nz];
                for (std::size_t z = 0; z < w.nz; ++z) muz_u[z] += puX * pz_x[z];
            }
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t z = 0; z < w.nz; ++z) mz[z] += muz[u * w.nz + z];
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] > 0.0) lm[i] = std::log(m[i]);
        const double log_uniform = -std::log(static_cast<double>(nu));
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t z = 0; z < w.nz; ++z) {
                const std::size_t i = u * w.nz + z;
                if (mz[z] <= 0.0)
                    lq[i] = log_uniform;  // zero-mass slice: uniform fill, zero weight
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
    for (std::size_t u = 0; u < nu; ++u) {
        const double* lm_u = &lm[u * nys];
        const double* lq_u = &lq[u * w.nz];
        for (std::size_t x = 0; x < w.nx; ++x) {
            const double puX = p[u * w.nx + x];
            if (puX == 0.0) continue;
            double acc = std::log(puX) + w.a[x];
            const double* pys_x = &w.pys[x * nys];
            for (std::size_t i = 0; i < nys; ++i)
                if (pys_x[i] > 0.0) acc -= pys_x[i] * lm_u[i];
            const double* pz_x = &w.pz[x * w.nz];
            for (std::size_t z = 0; z < w.nz; ++z)
                if (pz_x[z] > 0.0) acc += pz_x[z] * lq_u[z];
            d[u * w.nx + x] = acc;
        }
    }
}

double surrogate(const std::vector<double>& p, const std::vector<double>& d) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) f += p[i] * (d[i] - std::log(p[i]));
    return f;
}

double expected_weight(const std::vector<double>& p, const std::vector<double>& wt) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) e += p[i] * wt[i];
    return e;
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

// Upper bound I(X;Y|S) + I(X;Z) at the input marginal of the current iterate.
double upper_bound(const Workspace& w, const std::vector<double>& p, std::size_t nu) {
    std::vector<double> px(w.nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < w.nx; ++x) px[x] += p[u * w.nx + x];

    const std::size_t nys = w.ns * w.ny;
    std::vector<double> mys(nys, 0.0);  // p(y,s) marginal
    std::vector<double> mz(w.nz, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x) {
        if (px[x] == 0.0) continue;
        for (std::size_t i = 0; i < nys; ++i) mys[i] += px[x] * w.pys[x * nys + i];
        for (std::size_t z = 0; z < w.nz; ++z) mz[z] += px[x] * w.pz[x * w.nz + z];
    }
    std::vector<double> ps(w.ns, 0.0);
    for (std::size_t s = 0; s < w.ns; ++s)
        for (std::size_t y = 0; y < w.ny; ++y) ps[s] += mys[s * w.ny + y];

    // I(X;Y|S) = sum_{x,s,y} px pys ln( pys * p(s) / (p(s|.x)=...)) computed as
    // sum px p(y,s|x) ln [ p(y,s|x) p(s) / (p(s|x) p(y,s)) ]; here p(s|x)=p(s)
    // numerically equals sum_y p(y,s|x) which we use to stay exact.
    double info1 = 0.0;
    for (std::size_t x = 0; x < w.nx; ++x) {
        if (px[x] == 0.0) continue;
        for (std::size_t s = 0; s < w.ns; ++s) {
            double psx = 0.0;  // p(s|x)
            for (std::size_t y = 0; y < w.ny; ++y) psx += w.pys[(x * w.ns + s) * w.ny + y];
            if (psx == 0.0) continue;
            for (std::size_t y = 0; y < w.ny; ++y) {
                const double v = w.pys[(x * w.ns + s) * w.ny + y];
                // Guard on the weight product: if it underflows the marginal
                // cell may be zero too, and 0 * log(inf) would give NaN.
                const double pxv = px[x] * v;
                if (pxv > 0.0)
                    info1 += pxv * std::log(v * ps[s] / (psx * mys[s * w.ny + y]));
            }
        }
    }
    double info2 = 0.0;
    for (std::size_t x = 0; x < w.nx; ++x) {
        if (px[x] == 0.0) continue;
        for (std::size_t z = 0; z < w.nz; ++z) {
            const double pxv = px[x] * w.pz[x * w.nz + z];
            if (pxv > 0.0) info2 += pxv * std::log(w.pz[x * w.nz + z] / mz[z]);
        }
    }
    return std::max(info1, 0.0) + std::max(info2, 0.0);
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
        // u-x coupled start: block mass on u = x mod nx over a small
        // background, giving the initial estimator genuine U->X information.
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

JointTable make_p_ux(std::vector<double> flat, std::size_t nu, const Alphabet& alpha_x) {
    return JointTable::joint({Alphabet(nu), alpha_x}, std::move(flat));
}

double objective_F(const JointTable& p_ux, const ChannelModel& channel) {
    if (p_ux.rank() != 2 || !p_ux.is_joint())
        throw std::invalid_argument("objective_F: p_ux must be a joint table over (u,x)");
    const std::size_t nu = p_ux.dim(0), nx = p_ux.dim(1);
    if (nx != channel.nx()) throw std::invalid_argument("objective_F: |X| mismatch");
    const std::size_t ns = channel.ns(), ny = channel.ny(), nz = channel.nz();

    // Each term only needs a small marginal of the full joint; assembling the
    // five-axis table first would waste memory and accumulate rounding in its
    // normalization check.
    auto ys = channel.joint_ys_given_x();  // [x][s][y]
    std::vector<double> mass(nu * nx * ns * ny);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double puX = p_ux.mass()[u * nx + x];
            double* out = &mass[((u * nx + x) * ns) * ny];
            const double* in = &ys[(x * ns) * ny];
            for (std::size_t i = 0; i < ns * ny; ++i) out[i] = puX * in[i];
        }
    JointTable uxsy = JointTable::joint(
        {Alphabet(nu), p_ux.axis(1), channel.alpha_s, channel.alpha_y}, std::move(mass));
    double term1 = conditional_mutual_information(uxsy, {1}, {3}, {0, 2});

    auto zx = channel.z_given_x();  // [x][z]
    std::vector<double> uz_mass(nu * nz, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double puX = p_ux.mass()[u * nx + x];
            if (puX == 0.0) continue;
            for (std::size_t z = 0; z < nz; ++z)
                uz_mass[u * nz + z] += puX * zx[x * nz + z];
        }
    JointTable uz =
        JointTable::joint({Alphabet(nu), channel.alpha_z}, std::move(uz_mass));
    double term2 = conditional_mutual_information(uz, {0}, {1}, {});
    return term1 + term2;
}

QPair update_q(const JointTable& p_ux, const ChannelModel& channel) {
    const std::size_t nu = p_ux.dim(0), nx = p_ux.dim(1);
    Workspace w = make_workspace(channel);
    const auto& p = p_ux.mass();

    // Joint over (u,y,s,x) for q(x|u,y,s).
    std::vector<double> juysx(nu * w.ny * w.ns * nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double puX = p[u * nx + x];
            if (puX == 0.0) continue;
            for (std::size_t s = 0; s < w.ns; ++s)
                for (std::size_t y = 0; y < w.ny; ++y)
                    juysx[((u * w.ny + y) * w.ns + s) * nx + x] +=
                        puX * w.pys[(x * w.ns + s) * w.ny + y];
        }
    JointTable jq = JointTable::joint(
        {Alphabet(nu), channel.alpha_y, channel.alpha_s, p_ux.axis(1)}, std::move(juysx));
    JointTable q_x_uys = condition(jq, {0, 1, 2});

    // Joint over (z,u) for q(u|z).
    std::vector<double> jzu(w.nz * nu, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double puX = p[u * nx + x];
            if (puX == 0.0) continue;
            for (std::size_t z = 0; z < w.nz; ++z)
                jzu[z * nu + u] += puX * w.pz[x * w.nz + z];
        }
    JointTable jz = JointTable::joint({channel.alpha_z, Alphabet(nu)}, std::move(jzu));
    JointTable q_u_z = condition(jz, {0});

    return {std::move(q_x_uys), std::move(q_u_z)};
}

EstimatorTable update_c(const JointTable& p_ux, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    EstimatorTable c;
    estimator_from(w, p_ux.mass(), p_ux.dim(0), c);
    return c;
}

std::vector<double> distortion_weights(const EstimatorTable& c, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    if (c.nz != w.nz) throw std::invalid_argument("distortion_weights: |Z| mismatch");
    std::vector<double> out;
    weights_from(w, c, out);
    return out;
}

std::vector<double> exponent_base(const QPair& q, const ChannelModel& channel) {
    Workspace w = make_workspace(channel);
    const std::size_t nu = q.q_x_uys.dim(0), nx = q.q_x_uys.dim(3);
    if (nx != w.nx || q.q_x_uys.dim(1) != w.ny || q.q_x_uys.dim(2) != w.ns ||
        q.q_u_z.dim(0) != w.nz || q.q_u_z.dim(1) != nu)
        throw std::invalid_argument("exponent_base: table shape mismatch");

    std::vector<double> d(nu * nx, 0.0);
    const auto& qx = q.q_x_uys.mass();
    const auto& qu = q.q_u_z.mass();
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            double acc = 0.0;
            for (std::size_t s = 0; s < w.ns && acc != kNegInf; ++s)
                for (std::size_t y = 0; y < w.ny; ++y) {
                    const double pk = w.pys[(x * w.ns + s) * w.ny + y];
                    if (pk == 0.0) continue;
                    const double qv = qx[((u * w.ny + y) * w.ns + s) * nx + x];
                    if (qv == 0.0) {
                        acc = kNegInf;
                        break;
                    }
                    acc += pk * std::log(qv);
                }
            if (acc != kNegInf)
                for (std::size_t z = 0; z < w.nz; ++z) {
                    const double pk = w.pz[x * w.nz + z];
                    if (pk == 0.0) continue;
                    const double qv = qu[z * nu + u];
                    if (qv == 0.0) {
                        acc = kNegInf;
                        break;
                    }
                    acc += pk * std::log(qv);
                }
            d[u * nx + x] = acc;
        }
    return d;
}

SolveResult solve(const ChannelModel& channel, double D, const SolverConfig& config,
                  std::optional<double> power_budget) {
    if (!(D > 0)) throw std::invalid_argument("solve: distortion target must be positive");
    Workspace w = make_workspace(channel);
    const std::size_t nu = config.u_size ? config.u_size : w.nx;
    const std::size_t nx = w.nx;
    if (power_budget && w.cost.empty())
        throw std::invalid_argument("solve: power constraint needs X grid values");

    SolveResult best;
    bool have_best = false;
    int feasible = 0;
    std::exception_ptr last_infeasible;

    if (!config.init_p.empty() && config.init_p.size() != nu * nx)
        throw std::invalid_argument("solve: init_p size mismatch");

    for (int r = 0; r < std::max(1, config.restarts); ++r) {
        std::mt19937_64 gen(splitmix64(config.seed + 0x9e37 * static_cast<std::uint64_t>(r)));
        std::vector<double> p = (r == 0 && !config.init_p.empty())
                                    ? blend_with_uniform(config.init_p)
                                    : initial_distribution(nu, nx, r, config.jitter, gen);

        RootConfig root_cfg = config.root;
        if (power_budget) {
            // Project the start onto the power-feasible set so the first
            // constrained update cannot decrease the surrogate.
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

        EstimatorTable c;
        estimator_from(w, p, nu, c);
        std::vector<double> wt;
        weights_from(w, c, wt);

        SolveResult run;
        run.nu = nu;
        run.nx = nx;
        std::vector<double> d;
        double prev_post = kNegInf;
        double achieved = expected_weight(p, wt);
        bool start_failed = false;

        for (int it = 1; it <= config.max_iters; ++it) {
            exponent_from(w, p, nu, d);
            const double f_pre = surrogate(p, d);

            TiltProblem pr{nu, nx, d, wt, D, -1};
            for (std::size_t i = 0; i < pr.d.size(); ++i)
                if (pr.d[i] == kNegInf) pr.w[i] = 0.0;  // dead cells carry no weight
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
            estimator_from(w, p, nu, c);
            weights_from(w, c, wt);
            achieved = expected_weight(p, wt);
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
        run.rate_nats = surrogate(p, d);  // provisional ranking value (F-tilde)
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
    best.rate_nats = objective_F(make_p_ux(best.p_ux, nu, channel.alpha_x), channel);
    best.rate_bits = best.rate_nats / std::log(2.0);
    return best;
}

}  // namespace isac
