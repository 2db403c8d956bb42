#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isac/ab_classic.hpp"
#include "isac/channel.hpp"
#include "isac/monostatic.hpp"
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

ChannelModel full_channel(std::mt19937_64& gen, Alphabet ax, std::size_t ns, std::size_t ny,
                          std::size_t nz, const std::vector<double>* kz_override = nullptr) {
    Alphabet as(ns, [&] {
        std::vector<double> v(ns);
        for (std::size_t i = 0; i < ns; ++i)
            v[i] = ns == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / (ns - 1);
        return v;
    }());
    std::vector<double> prior_m(ns, 1.0 / ns);
    DiscreteDistribution prior(as, prior_m);
    const std::size_t nx = ax.size;
    auto ky = JointTable::kernel({ax, as, Alphabet(ny)}, {0, 1}, random_rows(gen, nx * ns, ny));
    auto kz_m = kz_override ? *kz_override : random_rows(gen, nx * ns, nz);
    auto kz = JointTable::kernel({ax, as, Alphabet(nz)}, {0, 1}, kz_m);
    return build_discrete(prior, ky, kz, ax);
}

}  // namespace

TEST_CASE("noiseless sensing estimates the state exactly") {
    std::mt19937_64 gen(211);
    const std::size_t nx = 2, ns = 3;
    std::vector<double> kz(nx * ns * ns, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t s = 0; s < ns; ++s) kz[(x * ns + s) * ns + s] = 1.0;
    auto ch = full_channel(gen, Alphabet(nx), ns, 2, ns, &kz);
    DiscreteDistribution p(ch.alpha_x, {0.3, 0.7});
    CHECK(monostatic_distortion(ch, p) <= 1e-15);
    CHECK(monostatic_distortion(ch, p) >= 0.0);
}

TEST_CASE("sensing that ignores the state returns Var(S)") {
    std::mt19937_64 gen(223);
    const std::size_t nx = 2, ns = 2, nz = 3;
    // p(z|x,s) depends on x but not s => E[S|x,z] = E[S]
    auto rows = random_rows(gen, nx, nz);
    std::vector<double> kz(nx * ns * nz);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t z = 0; z < nz; ++z) kz[(x * ns + s) * nz + z] = rows[x * nz + z];
    auto ch = full_channel(gen, Alphabet(nx), ns, 2, nz, &kz);
    // uniform prior on {-1, +1}: Var(S) = 1
    DiscreteDistribution p(ch.alpha_x, {0.6, 0.4});
    CHECK(monostatic_distortion(ch, p) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("distortion matches a direct posterior-variance computation") {
    std::mt19937_64 gen(227);
    auto ch = full_channel(gen, Alphabet(3), 3, 2, 4);
    DiscreteDistribution p(ch.alpha_x, {0.2, 0.5, 0.3});
    const std::size_t nx = 3, ns = 3, nz = 4;
    const auto jzs = ch.joint_zs_given_x();
    double want = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t z = 0; z < nz; ++z) {
            double pz = 0.0, mean = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                pz += jzs[(x * ns + s) * nz + z];
                mean += jzs[(x * ns + s) * nz + z] * ch.alpha_s.values[s];
            }
            if (pz == 0.0) continue;
            mean /= pz;
            for (std::size_t s = 0; s < ns; ++s) {
                const double diff = ch.alpha_s.values[s] - mean;
                want += p.mass[x] * jzs[(x * ns + s) * nz + z] * diff * diff;
            }
        }
    CHECK(monostatic_distortion(ch, p) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("rate solve respects a slack budget and rejects bad modes") {
    std::mt19937_64 gen(229);
    Alphabet ax(2, {-1.0, 1.0});
    auto ch = full_channel(gen, ax, 2, 3, 2);
    CapacityConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iters = 50000;
    auto res = monostatic_rate(ch, 100.0, cfg);  // E[X^2] = 1 always, never binding
    CHECK(res.converged);
    CHECK(res.mu == 0.0);

    // oracle: plain capacity of the composite channel X -> (Y,S)
    auto comp = JointTable::kernel({ax, Alphabet(ch.ns() * ch.ny())}, {0},
                                   ch.joint_ys_given_x());
    auto cap = capacity(comp, cfg);
    CHECK(res.capacity == doctest::Approx(cap.capacity).epsilon(1e-9));

    CHECK_THROWS_AS(monostatic_rate(to_markov(ch), 1.0, cfg), std::invalid_argument);

    auto no_values = full_channel(gen, Alphabet(2), 2, 3, 2);
    CHECK_THROWS_AS(monostatic_rate(no_values, 1.0, cfg), std::invalid_argument);
}

TEST_CASE("a vanishing budget collapses the input onto x = 0") {
    std::mt19937_64 gen(233);
    Alphabet ax(3, {-1.0, 0.0, 1.0});
    auto ch = full_channel(gen, ax, 2, 3, 2);
    CapacityConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iters = 50000;
    auto res = monostatic_rate(ch, 1e-6, cfg);
    CHECK(res.capacity >= 0.0);
    CHECK(res.capacity <= 1e-3);
    CHECK(res.input_dist.mass[1] >= 0.999);
    double spend = 0.0;
    for (std::size_t x = 0; x < 3; ++x)
        spend += res.input_dist.mass[x] * ax.values[x] * ax.values[x];
    CHECK(spend <= 1e-6 + 1e-12);
}

TEST_CASE("channel-level budget drives the reference distortion") {
    std::mt19937_64 gen(239);
    Alphabet ax(2, {-1.0, 1.0});
    auto ch = full_channel(gen, ax, 2, 3, 2);
    CHECK_THROWS_AS(monostatic_distortion(ch), std::invalid_argument);

    ch.power_budget = 100.0;
    auto rate = monostatic_rate(ch, *ch.power_budget);
    CHECK(monostatic_distortion(ch) ==
          doctest::Approx(monostatic_distortion(ch, rate.input_dist)).epsilon(1e-12));
}

TEST_CASE("gaussian reference point lands in the physical range") {
    GaussianSpec spec;
    spec.sigma_s_sq = 1.0;
    spec.sigma_1_sq = 1.0;
    spec.sigma_2_sq = 2.0;
    spec.power_budget = 10.0;
    spec.n_x = 9;
    spec.n_s = 9;
    spec.n_y = 17;
    spec.n_z = 17;
    auto ch = discretize_gaussian(spec);
    REQUIRE(ch.power_budget.has_value());

    CapacityConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iters = 20000;
    auto res = monostatic_rate(ch, *ch.power_budget, cfg);
    CHECK(res.converged);
    // no more than the clean additive-noise limit 0.5 ln(1 + B/sigma_1^2)
    CHECK(res.capacity <= 0.5 * std::log(1.0 + 10.0 / 1.0) + 1e-9);
    CHECK(res.capacity >= 0.3);

    const double d = monostatic_distortion(ch, res.input_dist);
    // between the clean-z posterior variance and the prior variance
    CHECK(d >= 0.3);
    CHECK(d <= 1.0);
}
