#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isac/ab_classic.hpp"
#include "isac/ab_logloss.hpp"
#include "isac/ab_se.hpp"
#include "isac/channel.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

std::vector<double> random_rows(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
    std::vector<double> m(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            m[r * cols + c] = 0.05 + uniform01(gen);
            sum += m[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) m[r * cols + c] /= sum;
    }
    return m;
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = 0.02 + uniform01(gen);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

ChannelModel random_markov(std::mt19937_64& gen, std::size_t nx, std::size_t ny, std::size_t nz,
                           std::size_t ns, Alphabet alpha_x = {}) {
    if (alpha_x.size == 0) alpha_x = Alphabet(nx);
    Alphabet as(ns, [&] {
        std::vector<double> v(ns);
        for (std::size_t i = 0; i < ns; ++i) v[i] = static_cast<double>(i);
        return v;
    }());
    auto ky = JointTable::kernel({alpha_x, Alphabet(ny)}, {0}, random_rows(gen, nx, ny));
    auto kzs = JointTable::kernel({alpha_x, Alphabet(nz), as}, {0},
                                  random_rows(gen, nx, nz * ns));
    return build_discrete_markov(ky, kzs, alpha_x, as);
}

// Clean data bit for either input; x = 0 senses the state nearly clean while
// x = 1 produces state-independent noise.
ChannelModel split_sensing_markov() {
    Alphabet ax(2);
    Alphabet as(2, {-1.0, 1.0});
    auto ky = JointTable::kernel({ax, Alphabet(2)}, {0}, {0.95, 0.05, 0.05, 0.95});
    // p(z,s|x), (z,s) flattened z-major, uniform state marginal 1/2
    std::vector<double> kzs = {
        0.475, 0.025, 0.025, 0.475,  // x=0: z = s with prob 0.95
        0.25,  0.25,  0.25,  0.25,   // x=1: z independent of s
    };
    return build_discrete_markov(ky, JointTable::kernel({ax, Alphabet(2), as}, {0}, kzs), ax,
                                 as);
}

double xlogy(double a, double b) { return a > 0.0 ? a * std::log(b) : 0.0; }

// I(X;Y|U) + I(U;Z) by direct summation under the Markov factorization.
double direct_objective_ll(const std::vector<double>& p_ux, std::size_t nu,
                           const ChannelModel& ch) {
    const std::size_t nx = ch.nx(), ny = ch.ny(), nz = ch.nz();
    const auto yx = ch.y_given_x();
    const auto zx = ch.z_given_x();
    std::vector<double> p_uxy(nu * nx * ny, 0.0), p_uy(nu * ny, 0.0), p_u(nu, 0.0),
        p_uz(nu * nz, 0.0), p_z(nz, 0.0), p_ux_m(nu * nx, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x) {
            const double pux = p_ux[u * nx + x];
            p_u[u] += pux;
            p_ux_m[u * nx + x] += pux;
            for (std::size_t y = 0; y < ny; ++y) {
                p_uxy[(u * nx + x) * ny + y] += pux * yx[x * ny + y];
                p_uy[u * ny + y] += pux * yx[x * ny + y];
            }
            for (std::size_t z = 0; z < nz; ++z) {
                p_uz[u * nz + z] += pux * zx[x * nz + z];
                p_z[z] += pux * zx[x * nz + z];
            }
        }
    double i_xy_u = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) {
                const double v = p_uxy[(u * nx + x) * ny + y];
                if (v > 0.0)
                    i_xy_u += v * std::log(v * p_u[u] /
                                           (p_ux_m[u * nx + x] * p_uy[u * ny + y]));
            }
    double i_uz = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t z = 0; z < nz; ++z) {
            const double v = p_uz[u * nz + z];
            if (v > 0.0) i_uz += v * std::log(v / (p_u[u] * p_z[z]));
        }
    return i_xy_u + i_uz;
}

}  // namespace

TEST_CASE("objective_F_ll equals the direct summation") {
    std::mt19937_64 gen(151);
    for (int t = 0; t < 8; ++t) {
        auto ch = random_markov(gen, 2, 3, 2, 2);
        const std::size_t nu = 2;
        auto flat = random_simplex(gen, nu * ch.nx());
        const double got = objective_F_ll(make_p_ux(flat, nu, ch.alpha_x), ch);
        CHECK(got == doctest::Approx(direct_objective_ll(flat, nu, ch)).epsilon(1e-10));
        CHECK(got >= -1e-12);
    }
}

TEST_CASE("objective_F_ll: noiseless data link at uniform input gives ln|X|") {
    std::mt19937_64 gen(157);
    Alphabet ax(3);
    Alphabet as(2, {0.0, 1.0});
    auto ky = JointTable::kernel({ax, Alphabet(3)}, {0},
                                 {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto kzs = JointTable::kernel({ax, Alphabet(2), as}, {0}, random_rows(gen, 3, 4));
    auto ch = build_discrete_markov(ky, kzs, ax, as);
    // u independent of x: I(X;Y|U) = ln 3 and I(U;Z) = 0
    std::vector<double> flat(6, 1.0 / 6.0);
    CHECK(objective_F_ll(make_p_ux(flat, 2, ch.alpha_x), ch) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("objective_F_ll rejects a full-factorization model") {
    Alphabet ax(2);
    Alphabet as(2, {-1.0, 1.0});
    DiscreteDistribution prior(as, {0.5, 0.5});
    std::mt19937_64 gen(163);
    auto ky = JointTable::kernel({ax, as, Alphabet(2)}, {0, 1}, random_rows(gen, 4, 2));
    auto kz = JointTable::kernel({ax, as, Alphabet(2)}, {0, 1}, random_rows(gen, 4, 2));
    auto full = build_discrete(prior, ky, kz, ax);
    CHECK_THROWS_AS(objective_F_ll(make_p_ux({0.25, 0.25, 0.25, 0.25}, 2, ax), full),
                    std::invalid_argument);
}

TEST_CASE("update_f is the posterior of S given (U,Z)") {
    std::mt19937_64 gen(167);
    auto ch = random_markov(gen, 3, 2, 2, 3);
    const std::size_t nu = 2, nx = 3, nz = 2, ns = 3;
    auto flat = random_simplex(gen, nu * nx);
    auto f = update_f(make_p_ux(flat, nu, ch.alpha_x), ch);
    REQUIRE(f.rank() == 3);
    REQUIRE(f.dim(0) == nu);
    REQUIRE(f.dim(1) == nz);
    REQUIRE(f.dim(2) == ns);

    const auto jzs = ch.joint_zs_given_x();  // [x][s][z]
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t z = 0; z < nz; ++z) {
            double den = 0.0;
            std::vector<double> num(ns, 0.0);
            for (std::size_t x = 0; x < nx; ++x)
                for (std::size_t s = 0; s < ns; ++s) {
                    const double v = flat[u * nx + x] * jzs[(x * ns + s) * nz + z];
                    num[s] += v;
                    den += v;
                }
            for (std::size_t s = 0; s < ns; ++s)
                CHECK(f.at({u, z, s}) == doctest::Approx(num[s] / den).epsilon(1e-14));
        }

    // unused auxiliary letters get the uniform posterior
    std::vector<double> dead = {0.5, 0.3, 0.2, 0.0, 0.0, 0.0};
    auto f2 = update_f(make_p_ux(dead, nu, ch.alpha_x), ch);
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t s = 0; s < ns; ++s)
            CHECK(f2.at({1, z, s}) == doctest::Approx(1.0 / ns).epsilon(1e-14));
}

TEST_CASE("logloss_weights: uniform prediction scores -ln|S|") {
    std::mt19937_64 gen(173);
    auto ch = random_markov(gen, 2, 2, 3, 4);
    const std::size_t nu = 2, ns = 4, nz = 3;
    auto f = JointTable::kernel({Alphabet(nu), Alphabet(nz), ch.alpha_s}, {0, 1},
                                std::vector<double>(nu * nz * ns, 1.0 / ns));
    auto w = logloss_weights(f, ch);
    REQUIRE(w.size() == nu * ch.nx());
    for (double v : w) CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-13));
}

TEST_CASE("logloss_weights: deterministic sensing scores zero") {
    std::mt19937_64 gen(179);
    Alphabet ax(2);
    Alphabet as(2, {0.0, 1.0});
    auto ky = JointTable::kernel({ax, Alphabet(2)}, {0}, random_rows(gen, 2, 2));
    // s is a copy of z: p(z,s|x) = r(z|x) on the diagonal
    auto r = random_rows(gen, 2, 2);
    std::vector<double> kzs(2 * 2 * 2, 0.0);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t z = 0; z < 2; ++z) kzs[(x * 2 + z) * 2 + z] = r[x * 2 + z];
    auto ch = build_discrete_markov(ky, JointTable::kernel({ax, Alphabet(2), as}, {0}, kzs),
                                    ax, as);
    auto flat = random_simplex(gen, 4);
    auto f = update_f(make_p_ux(flat, 2, ch.alpha_x), ch);
    auto w = logloss_weights(f, ch);
    for (double v : w) {
        CHECK(v <= 0.0);
        CHECK(v >= -1e-12);
    }
}

TEST_CASE("logloss_weights: posterior expectation equals H(S|U,Z)") {
    std::mt19937_64 gen(181);
    auto ch = random_markov(gen, 3, 2, 3, 2);
    const std::size_t nu = 2, nx = 3, nz = 3, ns = 2;
    auto flat = random_simplex(gen, nu * nx);
    auto f = update_f(make_p_ux(flat, nu, ch.alpha_x), ch);
    auto w = logloss_weights(f, ch);
    for (double v : w) CHECK(v <= 1e-15);
    double achieved = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) achieved -= flat[i] * w[i];

    const auto jzs = ch.joint_zs_given_x();
    std::vector<double> p_uzs(nu * nz * ns, 0.0), p_uz(nu * nz, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t s = 0; s < ns; ++s)
                for (std::size_t z = 0; z < nz; ++z) {
                    const double v = flat[u * nx + x] * jzs[(x * ns + s) * nz + z];
                    p_uzs[(u * nz + z) * ns + s] += v;
                    p_uz[u * nz + z] += v;
                }
    double h = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t z = 0; z < nz; ++z)
            for (std::size_t s = 0; s < ns; ++s)
                h -= xlogy(p_uzs[(u * nz + z) * ns + s],
                           p_uzs[(u * nz + z) * ns + s] / p_uz[u * nz + z]);
    CHECK(achieved == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("solve_ll with slack entropy target recovers capacity of p(y|x)") {
    std::mt19937_64 gen(191);
    auto ch = random_markov(gen, 2, 3, 2, 2);
    SolverConfig cfg;
    cfg.u_size = 1;
    cfg.tol = 1e-13;
    cfg.max_iters = 50000;
    cfg.restarts = 2;
    cfg.seed = 29;
    auto res = solve_ll(ch, 2.0, cfg);  // H(S) <= ln 2 < 2, never binding
    CHECK(res.converged);
    CHECK(res.lambda == 0.0);
    CHECK(res.achieved_distortion <= std::log(2.0) + 1e-9);

    CapacityConfig ccfg;
    ccfg.tol = 1e-13;
    ccfg.max_iters = 100000;
    auto cap = capacity(ch.kernel_y_only, ccfg);
    CHECK(res.rate_nats == doctest::Approx(cap.capacity).epsilon(1e-6));
}

TEST_CASE("solve_ll: binding entropy target is met and traced monotonically") {
    auto ch = split_sensing_markov();
    SolverConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iters = 5000;
    cfg.restarts = 3;
    cfg.seed = 31;

    auto slack = solve_ll(ch, 2.0, cfg);
    CHECK(slack.converged);
    CHECK(slack.achieved_distortion > 0.45);  // noisy posterior at best rate

    auto res = solve_ll(ch, 0.40, cfg);
    CHECK(res.converged);
    CHECK(res.lambda > 0.0);
    CHECK(std::abs(res.achieved_distortion - 0.40) <= 1e-8);
    CHECK(res.rate_nats > 0.0);
    CHECK(res.rate_nats <= slack.rate_nats + 1e-6);

    REQUIRE(!res.trace.empty());
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
        CHECK(res.trace[k].F_pre >= res.trace[k - 1].F_post - 1e-10);
        CHECK(res.trace[k].F_post >= res.trace[k].F_pre - 1e-10);
        CHECK(res.trace[k].F_post <= res.trace[k].bound + 1e-9);
    }
}

TEST_CASE("solve_ll rejects targets below the sensing floor") {
    // z independent of (x, s): H(S|U,Z) = H(S) for every strategy
    std::mt19937_64 gen(193);
    Alphabet ax(2);
    Alphabet as(2, {0.0, 1.0});
    auto ky = JointTable::kernel({ax, Alphabet(2)}, {0}, random_rows(gen, 2, 2));
    std::vector<double> kzs(2 * 2 * 2, 0.25);  // uniform (z,s) for both inputs
    auto ch = build_discrete_markov(ky, JointTable::kernel({ax, Alphabet(2), as}, {0}, kzs),
                                    ax, as);
    SolverConfig cfg;
    cfg.restarts = 2;
    cfg.max_iters = 200;
    CHECK_THROWS_AS(solve_ll(ch, 0.5 * std::log(2.0), cfg), DistortionInfeasible);
}

TEST_CASE("solve_ll honors the input power constraint") {
    std::mt19937_64 gen(197);
    Alphabet ax(2, {0.0, 1.0});
    auto ch = random_markov(gen, 2, 3, 2, 2, ax);
    SolverConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iters = 5000;
    cfg.restarts = 2;
    cfg.seed = 37;
    auto res = solve_ll(ch, 2.0, cfg, 0.3);
    CHECK(res.converged);
    double spend = 0.0;
    for (std::size_t u = 0; u < res.nu; ++u)
        for (std::size_t x = 0; x < res.nx; ++x)
            spend += res.p_ux[u * res.nx + x] * ax.values[x] * ax.values[x];
    CHECK(spend <= 0.3 + 1e-8);
    if (res.mu > 0.0) CHECK(spend == doctest::Approx(0.3).epsilon(1e-7));
}
