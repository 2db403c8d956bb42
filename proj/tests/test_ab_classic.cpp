#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isac/ab_classic.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

JointTable channel_2x2(double k00, double k01, double k10, double k11) {
    return JointTable::kernel({Alphabet(2), Alphabet(2)}, {0}, {k00, k01, k10, k11});
}

JointTable random_channel(std::mt19937_64& gen, std::size_t nx, std::size_t ny) {
    std::vector<double> m(nx * ny);
    for (std::size_t x = 0; x < nx; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < ny; ++y) {
            m[x * ny + y] = 0.05 + uniform01(gen);
            row += m[x * ny + y];
        }
        for (std::size_t y = 0; y < ny; ++y) m[x * ny + y] /= row;
    }
    return JointTable::kernel({Alphabet(nx), Alphabet(ny)}, {0}, std::move(m));
}

void check_trace_monotone(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
}

}  // namespace

TEST_CASE("noiseless binary channel attains ln 2 with uniform input") {
    auto res = capacity(channel_2x2(1.0, 0.0, 0.0, 1.0));
    CHECK(res.converged);
    CHECK(res.capacity == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(res.input_dist.mass[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(res.input_dist.mass[1] == doctest::Approx(0.5).epsilon(1e-8));
    check_trace_monotone(res.trace);
}

TEST_CASE("binary symmetric channel, crossover 0.1") {
    const double eps = 0.1;
    auto res = capacity(channel_2x2(1 - eps, eps, eps, 1 - eps));
    const double h = -(eps * std::log(eps) + (1 - eps) * std::log(1 - eps));
    CHECK(res.converged);
    CHECK(res.capacity == doctest::Approx(std::log(2.0) - h).epsilon(1e-6));
    CHECK(res.input_dist.mass[0] == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(res.mu == 0.0);
    check_trace_monotone(res.trace);
}

TEST_CASE("binary erasure channel, erasure 0.3") {
    const double eps = 0.3;
    auto k = JointTable::kernel({Alphabet(2), Alphabet(3)}, {0},
                                {1 - eps, eps, 0.0, 0.0, eps, 1 - eps});
    auto res = capacity(k);
    CHECK(res.converged);
    CHECK(res.capacity == doctest::Approx((1 - eps) * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("identical rows give zero capacity") {
    auto res = capacity(channel_2x2(0.7, 0.3, 0.7, 0.3));
    CHECK(res.converged);
    CHECK(res.capacity <= 1e-12);
    CHECK(res.capacity >= 0.0);
}

TEST_CASE("random channels satisfy the optimality certificate") {
    // At the optimum every used input has D(k(.|x) || q) equal to the
    // capacity, and every unused input at most that; q is the output marginal.
    std::mt19937_64 gen(61);
    CapacityConfig cfg;
    cfg.tol = 1e-13;
    cfg.max_iters = 100000;
    for (int t = 0; t < 20; ++t) {
        const std::size_t nx = 2 + t % 3, ny = 2 + (t / 3) % 3;
        auto k = random_channel(gen, nx, ny);
        auto res = capacity(k, cfg);
        CHECK(res.converged);
        CHECK(res.capacity >= -1e-12);
        CHECK(res.capacity <=
              std::log(static_cast<double>(std::min(nx, ny))) + 1e-9);
        check_trace_monotone(res.trace);

        std::vector<double> q(ny, 0.0);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y)
                q[y] += res.input_dist.mass[x] * k.mass()[x * ny + y];
        for (std::size_t x = 0; x < nx; ++x) {
            double dx = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                const double kv = k.mass()[x * ny + y];
                if (kv > 0.0) dx += kv * std::log(kv / q[y]);
            }
            // Inputs that are unused at the optimum still carry a tiny
            // decaying mass in a finite iterate, so classify with a loose cut.
            if (res.input_dist.mass[x] > 1e-6)
                CHECK(std::abs(dx - res.capacity) <= 1e-5);
            else
                CHECK(dx <= res.capacity + 1e-5);
        }
    }
}

TEST_CASE("cost constraint: slack budget matches the unconstrained solve") {
    auto k = channel_2x2(0.9, 0.1, 0.1, 0.9);
    auto plain = capacity(k);
    auto res = capacity_with_cost(k, {1.0, 4.0}, 100.0);
    CHECK(res.converged);
    CHECK(res.mu == 0.0);
    CHECK(res.capacity == doctest::Approx(plain.capacity).epsilon(1e-9));
}

TEST_CASE("cost constraint: binding budget is met with positive multiplier") {
    auto k = channel_2x2(0.95, 0.05, 0.05, 0.95);
    // cost(x) = x in {0, 1}; the unconstrained optimum spends 0.5, so a budget
    // of 0.2 binds and pushes mass onto x = 0.
    auto res = capacity_with_cost(k, {0.0, 1.0}, 0.2);
    CHECK(res.converged);
    CHECK(res.mu > 0.0);
    CHECK(res.input_dist.mass[1] == doctest::Approx(0.2).epsilon(1e-8));
    auto plain = capacity(k);
    CHECK(res.capacity < plain.capacity);
    CHECK(res.capacity > 0.0);
    check_trace_monotone(res.trace);
}

TEST_CASE("cost constraint: budget at the cheapest input collapses the rate") {
    auto k = channel_2x2(0.9, 0.1, 0.2, 0.8);
    auto res = capacity_with_cost(k, {0.5, 1.3}, 0.5);
    CHECK(res.converged);
    CHECK(res.capacity >= 0.0);
    CHECK(res.capacity <= 1e-3);
    CHECK(res.input_dist.mass[0] == doctest::Approx(1.0).epsilon(1e-6));
    double spend = 0.5 * res.input_dist.mass[0] + 1.3 * res.input_dist.mass[1];
    CHECK(spend == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("cost constraint: budget below every cost is infeasible") {
    auto k = channel_2x2(0.9, 0.1, 0.2, 0.8);
    CHECK_THROWS_AS(capacity_with_cost(k, {0.5, 1.3}, 0.4), DistortionInfeasible);
}
