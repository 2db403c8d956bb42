#include "isac/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace isac {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Eval {
    std::vector<double> dist;
    double residual;
};

// Tilt + residual in one pass; the residual only sums alive cells, where w is
// guaranteed finite.
Eval evaluate(const TiltProblem& pr, double lambda) {
    const std::size_t n = pr.d.size();
    Eval ev;
    ev.dist.assign(n, 0.0);
    double max_e = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
        if (pr.d[i] == kNegInf) continue;
        const double e = pr.d[i] + pr.sign * lambda * pr.w[i];
        if (e > max_e) max_e = e;
    }
    if (max_e == kNegInf)
        throw std::invalid_argument("tilt_distribution: every cell is dead (d = -inf)");
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pr.d[i] == kNegInf) continue;
        ev.dist[i] = std::exp(pr.d[i] + pr.sign * lambda * pr.w[i] - max_e);
        z += ev.dist[i];
    }
    double ew = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ev.dist[i] /= z;
        if (ev.dist[i] > 0.0) ew += ev.dist[i] * pr.w[i];
    }
    ev.residual = pr.sign < 0 ? pr.target - ew : pr.target + ew;
    return ev;
}

}  // namespace

DistortionInfeasible::DistortionInfeasible(double target_, double limiting_residual_)
    : std::runtime_error("distortion target " + std::to_string(target_) +
                         " is below the minimum achievable value (limiting residual " +
                         std::to_string(limiting_residual_) + ")"),
      target(target_),
      limiting_residual(limiting_residual_) {}

PairInfeasible::PairInfeasible(double distortion_residual_, double power_residual_)
    : std::runtime_error("no (lambda, mu) satisfies both constraints (residuals " +
                         std::to_string(distortion_residual_) + ", " +
                         std::to_string(power_residual_) + ")"),
      distortion_residual(distortion_residual_),
      power_residual(power_residual_) {}

void TiltProblem::validate() const {
    if (nu < 1 || nx < 1 || d.size() != nu * nx || w.size() != nu * nx)
        throw std::invalid_argument("TiltProblem: shape mismatch");
    if (sign != -1 && sign != 1) throw std::invalid_argument("TiltProblem: sign must be +-1");
    bool any_alive = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (std::isnan(d[i]) || d[i] == std::numeric_limits<double>::infinity())
            throw std::invalid_argument("TiltProblem: d must be finite or -inf");
        if (d[i] == kNegInf) continue;
        any_alive = true;
        if (!std::isfinite(w[i])) throw std::invalid_argument("TiltProblem: non-finite w");
        if (sign > 0 && w[i] > 1e-12)
            throw std::invalid_argument("TiltProblem: log-loss mode requires w <= 0");
    }
    if (!any_alive) throw std::invalid_argument("TiltProblem: every cell is dead");
}

std::vector<double> tilt_distribution(const TiltProblem& problem, double lambda) {
    if (lambda < 0) throw std::invalid_argument("tilt_distribution: lambda must be >= 0");
    return evaluate(problem, lambda).dist;
}

double constraint_residual(const TiltProblem& problem, double lambda) {
    if (lambda < 0) throw std::invalid_argument("constraint_residual: lambda must be >= 0");
    return evaluate(problem, lambda).residual;
}

ScalarRoot solve_scalar(const TiltProblem& problem, const RootConfig& config) {
    problem.validate();
    Eval at0 = evaluate(problem, 0.0);
    if (at0.residual >= 0.0)
        return {0.0, std::move(at0.dist), at0.residual};  // constraint slack at the optimum

    double lo = 0.0;
    double hi;
    Eval at_hi;
    bool have_hi = false;

    // Warm bracket around the hint when it straddles the root.
    if (config.lambda_hint && *config.lambda_hint > 0.0) {
        const double h = *config.lambda_hint;
        const double hl = 0.98 * h, hh = std::min(1.02 * h, config.lambda_max);
        Eval el = evaluate(problem, hl);
        if (el.residual < 0.0) {
            Eval eh = evaluate(problem, hh);
            if (eh.residual >= 0.0) {
                lo = hl;
                hi = hh;
                at_hi = std::move(eh);
                have_hi = true;
            } else {
                lo = hh;
            }
        } else {
            hi = hl;
            at_hi = std::move(el);
            have_hi = true;
        }
    }

    // Bisect well past root_tol: downstream monotonicity checks need residuals
    // near the double-precision floor, and each step is one cheap pass.
    const double res_goal = 1e-14 * std::max(1.0, std::abs(problem.target));

    if (!have_hi) {
        hi = std::max(1.0, 2.0 * lo);
        for (;;) {
            at_hi = evaluate(problem, hi);
            if (at_hi.residual >= 0.0) break;
            // Asymptotic root (e.g. target exactly at the constraint's infimum):
            // the residual never crosses zero but is already met to tolerance.
            if (std::abs(at_hi.residual) <= res_goal) break;
            if (hi >= config.lambda_max)
                throw DistortionInfeasible(problem.target, at_hi.residual);
            lo = hi;
            hi = std::min(2.0 * hi, config.lambda_max);
        }
    }
    Eval at_lo = evaluate(problem, lo);
    for (int it = 0; it < config.max_bisect; ++it) {
        if (std::min(std::abs(at_lo.residual), std::abs(at_hi.residual)) <= res_goal) break;
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;  // bracket is down to adjacent doubles
        Eval em = evaluate(problem, mid);
        if (em.residual < 0.0) {
            lo = mid;
            at_lo = std::move(em);
        } else {
            hi = mid;
            at_hi = std::move(em);
        }
    }

    Eval* best = std::abs(at_hi.residual) <= std::abs(at_lo.residual) ? &at_hi : &at_lo;
    double lambda = best == &at_hi ? hi : lo;
    return {lambda, std::move(best->dist), best->residual};
}

PairRoot solve_pair(const TiltProblem& problem, const std::vector<double>& cost_x,
                    double power_budget, const RootConfig& config) {
    problem.validate();
    if (cost_x.size() != problem.nx)
        throw std::invalid_argument("solve_pair: cost table must be indexed by x");
    for (double c : cost_x)
        if (!std::isfinite(c)) throw std::invalid_argument("solve_pair: non-finite cost");

    RootConfig inner_cfg = config;

    // Inner solve at fixed mu: fold -mu*cost into d, root lambda, report the
    // power residual of the resulting distribution.
    struct OuterEval {
        ScalarRoot root;
        double power_residual;
    };
    auto eval_mu = [&](double mu) -> OuterEval {
        TiltProblem tilted = problem;
        for (std::size_t u = 0; u < problem.nu; ++u)
            for (std::size_t x = 0; x < problem.nx; ++x) {
                double& dv = tilted.d[u * problem.nx + x];
                if (dv != kNegInf) dv -= mu * cost_x[x];
            }
        ScalarRoot r = solve_scalar(tilted, inner_cfg);
        inner_cfg.lambda_hint = r.lambda > 0 ? std::optional<double>(r.lambda) : std::nullopt;
        double ec = 0.0;
        for (std::size_t u = 0; u < problem.nu; ++u)
            for (std::size_t x = 0; x < problem.nx; ++x)
                ec += r.dist[u * problem.nx + x] * cost_x[x];
        return {std::move(r), power_budget - ec};
    };

    OuterEval at0 = eval_mu(0.0);
    if (at0.power_residual >= 0.0)
        return {at0.root.lambda, 0.0, std::move(at0.root.dist), at0.root.residual,
                at0.power_residual};

    double lo = 0.0;
    double hi;
    OuterEval at_hi;
    bool have_hi = false;
    if (config.mu_hint && *config.mu_hint > 0.0) {
        const double h = *config.mu_hint;
        const double hl = 0.98 * h, hh = std::min(1.02 * h, config.lambda_max);
        OuterEval el = eval_mu(hl);
        if (el.power_residual < 0.0) {
            OuterEval eh = eval_mu(hh);
            if (eh.power_residual >= 0.0) {
                lo = hl;
                hi = hh;
                at_hi = std::move(eh);
                have_hi = true;
            } else {
                lo = hh;
            }
        } else {
            hi = hl;
            at_hi = std::move(el);
            have_hi = true;
        }
    }
    const double res_goal = 1e-14 * std::max(1.0, std::abs(power_budget));
    if (!have_hi) {
        hi = std::max(1.0, 2.0 * lo);
        for (;;) {
            at_hi = eval_mu(hi);
            if (at_hi.power_residual >= 0.0) break;
            if (std::abs(at_hi.power_residual) <= res_goal) break;  // asymptotic root
            if (hi >= config.lambda_max)
                throw PairInfeasible(at_hi.root.residual, at_hi.power_residual);
            lo = hi;
            hi = std::min(2.0 * hi, config.lambda_max);
        }
    }
    OuterEval at_lo = eval_mu(lo);
    for (int it = 0; it < config.max_bisect; ++it) {
        if (std::min(std::abs(at_lo.power_residual), std::abs(at_hi.power_residual)) <= res_goal)
            break;
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        OuterEval em = eval_mu(mid);
        if (em.power_residual < 0.0) {
            lo = mid;
            at_lo = std::move(em);
        } else {
            hi = mid;
            at_hi = std::move(em);
        }
    }

    OuterEval* best =
        std::abs(at_hi.power_residual) <= std::abs(at_lo.power_residual) ? &at_hi : &at_lo;
    double mu = best == &at_hi ? hi : lo;
    return {best->root.lambda, mu, std::move(best->root.dist), best->root.residual,
            best->power_residual};
}

}  // namespace isac
