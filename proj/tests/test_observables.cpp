#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "estc/observables.hpp"

using namespace estc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SpinorBlock random_block(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    SpinorBlock m;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m(i, j) = Complex(g(rng), g(rng));
    }
    return m;
}

Bispinor random_spinor(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return Bispinor(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)), Complex(g(rng), g(rng)), Complex(g(rng), g(rng)));
}

SolutionTable random_table(std::mt19937_64& rng, std::size_t sites) {
    SolutionTable t;
    const auto near = s69();
    for (std::size_t i = 0; i < sites; ++i) t.blocks.push_back({static_cast<std::int64_t>(i), near[i], random_block(rng, 0.3)});
    return t;
}

SolutionTable single(const SpinorBlock& s) {
    SolutionTable t;
    t.blocks.push_back({0, kOrigin, s});
    return t;
}

FieldConfig sample_field(std::uint64_t seed, double strength) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, strength);
    FieldConfig cfg;
    for (auto& a : cfg.amplitudes) {
        for (int k = 0; k < 3; ++k) a[k] = Complex(g(rng), g(rng));
    }
    cfg.q = Eigen::Vector3d(0.1, -0.05, 0.2);
    cfg.q4 = 0.4;
    cfg.omega = 0.8;
    return cfg;
}

double min_eigenvalue(const SpinorBlock& m) {
    Eigen::SelfAdjointEigenSolver<SpinorBlock> eig(m);
    return eig.eigenvalues()[0];
}

}  // namespace

TEST_CASE("phase") {
    FieldConfig cfg;
    CHECK(phase(cfg, kOrigin, {0.3, 0.1, 0.7, 0.9}) == 0.0);
    cfg.q4 = 0.5;
    cfg.omega = 2.0;
    CHECK(phase(cfg, kOrigin, {0.3, 0.1, 0.7, 0.9}) == doctest::Approx(-kTwoPi * 0.25 * 0.9));

    FieldConfig plain;
    CHECK(phase(plain, {0, 0, 1, 1}, {0, 0, 1, 0}) == doctest::Approx(kTwoPi));

    cfg.q = Eigen::Vector3d(0.2, -0.4, 0.6);
    const LatticePoint n{2, -1, 0, 1};
    const SpacetimePoint x{0.11, 0.23, 0.35, 0.47};
    for (int k = 0; k < 3; ++k) {
        SpacetimePoint y = x;
        (k == 0 ? y.x1 : k == 1 ? y.x2 : y.x3) += 1.0;
        CHECK(phase(cfg, n, y) - phase(cfg, n, x) == doctest::Approx(kTwoPi * (n[static_cast<std::size_t>(k)] + cfg.q[k] / cfg.omega)));
    }
}

TEST_CASE("evolution operator small cases") {
    FieldConfig cfg;
    cfg.q4 = 0.3;
    const SolutionTable empty;
    CHECK(evolution(empty, cfg, {0.1, 0.2, 0.3, 0.4}).isZero(0.0));

    const SolutionTable unit = single(SpinorBlock::Identity());
    const SpacetimePoint x{0.1, 0.2, 0.3, 0.4};
    const SpinorBlock e = evolution(unit, cfg, x);
    CHECK((e - std::polar(1.0, phase(cfg, kOrigin, x)) * SpinorBlock::Identity()).norm() < 1e-15);
    CHECK((u_e(unit) - SpinorBlock::Identity()).norm() == 0.0);

    const Bispinor a0(1.0, 0.0, Complex(0, 1), 0.0);
    CHECK((wavefunction(unit, cfg, x, a0) - e * a0).norm() == 0.0);
}

TEST_CASE("U_E is Hermitian positive semidefinite") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const SolutionTable t = random_table(rng, 1 + trial % 13);
        const SpinorBlock ue = u_e(t);
        CHECK((ue - ue.adjoint()).norm() <= 1e-12);
        CHECK(min_eigenvalue(ue) >= -1e-12);
    }
}

TEST_CASE("U_E matches grid quadrature of E^dagger E") {
    std::mt19937_64 rng(2);
    const SolutionTable t = random_table(rng, 69);  // harmonics up to |n_i| = 2
    FieldConfig cfg;
    cfg.q = Eigen::Vector3d(0.13, 0.0, -0.21);
    cfg.q4 = 0.77;
    cfg.omega = 0.6;
    CHECK(default_grid(t) == 7);
    const SpinorBlock closed = u_e(t);
    const SpinorBlock grid = u_e_quadrature(t, cfg, 8);
    CHECK((grid - closed).norm() / closed.norm() <= 1e-6);
    // too coarse a grid aliases products of harmonics
    CHECK((u_e_quadrature(t, cfg, 3) - closed).norm() / closed.norm() > 1e-3);
    // thread count does not change the reduction
    CHECK((u_e_quadrature(t, cfg, 8, 3) - grid).norm() == 0.0);
}

TEST_CASE("U_D without field") {
    std::mt19937_64 rng(3);
    FieldConfig cfg;
    cfg.q = Eigen::Vector3d(0.3, 0.1, -0.2);
    cfg.q4 = 0.9;
    cfg.omega = 0.7;
    const SolutionTable t = random_table(rng, 30);
    SpinorBlock direct = SpinorBlock::Zero();
    for (const auto& b : t.blocks) {
        const SpinorBlock d = dirac_block(cfg, b.site);
        direct += b.s.adjoint() * d * d * b.s;
    }
    const SpinorBlock ud = u_d(t, cfg);
    CHECK((ud - direct).norm() <= 1e-10 * direct.norm());
    CHECK((u_d_residual(residual_map(cfg, t)) - direct).norm() <= 1e-10 * direct.norm());
}

TEST_CASE("U_D pair sums equal the residual sum for arbitrary tables") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const FieldConfig cfg = sample_field(10 + static_cast<std::uint64_t>(trial), 0.3);
        const SolutionTable t = random_table(rng, 69);
        const SpinorBlock a = u_d(t, cfg);
        const SpinorBlock b = u_d_residual(residual_map(cfg, t));
        CHECK((a - b).norm() <= 1e-12 * a.norm());
        CHECK((a - a.adjoint()).norm() <= 1e-12 * a.norm());
        CHECK(min_eigenvalue(a) >= -1e-10);
        CHECK(u_d_term_scale(t, cfg) >= a.norm());
    }
}

TEST_CASE("mean values") {
    std::mt19937_64 rng(5);
    FieldConfig cfg;
    cfg.q4 = 0.37;
    cfg.omega = 0.5;
    const SolutionTable t = random_table(rng, 20);
    const Bispinor a0 = random_spinor(rng);
    CHECK(std::abs(a_mean(t, constant_operator(SpinorBlock::Identity()), a0) - 1.0) < 1e-14);

    const SolutionTable one = single(random_block(rng));
    CHECK(std::abs(a_mean(one, energy_operator(cfg), a0) - cfg.q4) < 1e-14);

    for (int trial = 0; trial < 20; ++trial) {
        const SolutionTable r = random_table(rng, 13);
        const Complex beta = a_mean(r, constant_operator(dirac_matrices()[3]), random_spinor(rng));
        CHECK(std::abs(beta.imag()) <= 1e-12);
        const Complex p = a_mean(r, momentum_operator(cfg, 1), random_spinor(rng));
        CHECK(std::abs(p.imag()) <= 1e-12);
    }
    CHECK_THROWS_AS(a_mean(t, energy_operator(cfg), Bispinor::Zero()), std::domain_error);
    CHECK_THROWS_AS(momentum_operator(cfg, 3), std::invalid_argument);
}

TEST_CASE("accuracy functional") {
    std::mt19937_64 rng(6);
    const FieldConfig cfg = sample_field(7, 0.2);
    const SolutionTable t = random_table(rng, 40);
    const SpinorBlock ue = u_e(t);
    const SpinorBlock ud = u_d(t, cfg);
    for (int trial = 0; trial < 10; ++trial) {
        const Bispinor a0 = random_spinor(rng);
        const double r = accuracy(ud, ue, a0);
        CHECK(std::isfinite(r));
        CHECK(r >= 0.0);
        const Complex lambda(-2.5, 0.7);
        CHECK(std::abs(accuracy(ud, ue, lambda * a0) - r) <= 1e-12 * r);
        CHECK(accuracy(t, cfg, a0) == doctest::Approx(r).epsilon(1e-12));
    }
    CHECK_THROWS_AS(accuracy(ud, ue, Bispinor::Zero()), std::domain_error);
    SpinorBlock kernel = SpinorBlock::Zero();
    kernel(0, 0) = 1.0;
    CHECK_THROWS_AS(accuracy(ud, kernel, Bispinor(0, 1, 0, 0)), std::domain_error);
}

TEST_CASE("best amplitude against a dense generalized eigensolver") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const SpinorBlock x = random_block(rng);
        const SpinorBlock y = random_block(rng);
        const SpinorBlock ue = x.adjoint() * x + 0.1 * SpinorBlock::Identity();
        const SpinorBlock ud = y.adjoint() * y;
        const BestAmplitude best = best_amplitude(ud, ue);
        CHECK(best.range_rank == 4);

        Eigen::GeneralizedSelfAdjointEigenSolver<SpinorBlock> oracle(ud, ue);
        CHECK(best.r_min == doctest::Approx(std::sqrt(oracle.eigenvalues()[0])).epsilon(1e-12));
        CHECK(accuracy(ud, ue, best.a0) == doctest::Approx(best.r_min).epsilon(1e-10));
        for (int probe = 0; probe < 100; ++probe) CHECK(accuracy(ud, ue, random_spinor(rng)) >= best.r_min * (1 - 1e-12));
    }
}

TEST_CASE("best amplitude edge cases") {
    std::mt19937_64 rng(9);
    const SpinorBlock x = random_block(rng);
    const SpinorBlock m = x.adjoint() * x;
    const BestAmplitude same = best_amplitude(m, m);
    CHECK(same.r_min == doctest::Approx(1.0).epsilon(1e-12));

    // Singular U_E: the search is restricted to its range.
    SpinorBlock ue = SpinorBlock::Zero();
    ue(0, 0) = 2.0;
    ue(2, 2) = 1.0;
    SpinorBlock ud = SpinorBlock::Identity();
    ud(2, 2) = 0.25;
    const BestAmplitude restricted = best_amplitude(ud, ue);
    CHECK(restricted.range_rank == 2);
    CHECK(restricted.r_min == doctest::Approx(0.5));
    CHECK(std::abs(restricted.a0[2]) == doctest::Approx(1.0));

    CHECK_THROWS_AS(best_amplitude(ud, SpinorBlock::Zero()), std::domain_error);
}

TEST_CASE("free-space solution is exact") {
    FieldConfig cfg;
    cfg.q = Eigen::Vector3d(0.0, 0.0, 0.04);
    cfg.q4 = std::sqrt(1.0 + 0.04 * 0.04);
    SolverOptions opt;
    opt.allow_rank_deficient = true;
    const SolveResult res = run_model(cfg, model_spec(cycle1(), 0), opt);
    REQUIRE(res.records[0].rank == 2);
    const SpinorBlock ue = u_e(res.table);
    const SpinorBlock ud = u_d(res.table, cfg);
    CHECK(ud.norm() <= 1e-10);
    const BestAmplitude best = best_amplitude(ud, ue);
    CHECK(best.r_min <= 1e-10);
    CHECK(best.range_rank == 2);
    CHECK((dirac_block(cfg, kOrigin) * best.a0).norm() <= 1e-10);
}

TEST_CASE("summary on a 1-model") {
    const FieldConfig cfg = sample_field(11, 0.05);
    const SolveResult res = run_model(cfg, model_spec(cycle1(), 1));
    ObservableOptions opt;
    const ObservableSummary s = summarize(res.table, cfg, opt);
    CHECK(s.ud_mismatch <= 1e-8);
    CHECK(s.r >= 0.0);
    CHECK(s.r == doctest::Approx(s.best.r_min));
    CHECK(std::abs(s.energy.imag()) <= 1e-12);
    CHECK(!s.ue_grid.has_value());
    CHECK(s.amplitude_defined);
    CHECK(s.ud_term_mismatch <= s.ud_mismatch);
}

TEST_CASE("summary without a solution") {
    // Off shell and field free: the projector removes every direction at the origin.
    FieldConfig cfg;
    cfg.q4 = 0.2;
    const SolveResult res = run_model(cfg, model_spec(cycle1(), 0));
    const ObservableSummary s = summarize(res.table, cfg, {});
    CHECK_FALSE(s.amplitude_defined);
    CHECK(s.ue.norm() == 0.0);
    CHECK(s.ud_term_mismatch == 0.0);
}
