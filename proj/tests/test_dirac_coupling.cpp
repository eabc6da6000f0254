#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "estc/dirac_coupling.hpp"
#include "estc/fractal_scheduler.hpp"

using estc::Complex;
using estc::LatticePoint;
using estc::SpinorBlock;

namespace {

estc::FieldConfig random_field(std::mt19937_64& rng, double scale = 0.3) {
    std::normal_distribution<double> g(0.0, scale);
    estc::FieldConfig cfg;
    for (auto& a : cfg.amplitudes) {
        for (int k = 0; k < 3; ++k) a[k] = Complex(g(rng), g(rng));
    }
    cfg.q = Eigen::Vector3d(g(rng), g(rng), g(rng));
    cfg.q4 = 0.7;
    cfg.omega = 0.45;
    return cfg;
}

double phase_of(const LatticePoint& s, const estc::SpacetimePoint& x) {
    return 2 * std::numbers::pi * (s[0] * x.x1 + s[1] * x.x2 + s[2] * x.x3 - s[3] * x.x4);
}

}  // namespace

TEST_CASE("Dirac matrices satisfy the Clifford relations exactly") {
    const auto& a = estc::dirac_matrices();
    for (int i = 0; i < 4; ++i) {
        CHECK((a[i] - a[i].adjoint()).isZero(0.0));
        CHECK(a[i].trace() == Complex(0.0, 0.0));
        for (int j = 0; j < 4; ++j) {
            const SpinorBlock anti = a[i] * a[j] + a[j] * a[i];
            const SpinorBlock want = (i == j) ? SpinorBlock(2.0 * SpinorBlock::Identity()) : SpinorBlock(SpinorBlock::Zero());
            CHECK((anti - want).isZero(0.0));
        }
    }
    CHECK((a[3] * a[3] - SpinorBlock::Identity()).isZero(0.0));
}

TEST_CASE("field shifts") {
    const auto& s = estc::field_shifts();
    CHECK(s[0] == LatticePoint{1, 0, 0, 1});
    CHECK(s[5] == LatticePoint{0, 0, -1, 1});
    for (const auto& v : s) {
        CHECK(v[3] == 1);
        CHECK(estc::g4d(v) == 1);
    }
}

TEST_CASE("D_n examples") {
    const auto& a = estc::dirac_matrices();
    estc::FieldConfig cfg;
    cfg.omega = 0.5;
    CHECK((estc::dirac_block(cfg, estc::kOrigin) - a[3]).isZero(0.0));

    cfg.q4 = 1.0;
    const SpinorBlock on_shell = estc::dirac_block(cfg, estc::kOrigin);
    CHECK((on_shell - (a[3] - SpinorBlock::Identity())).isZero(0.0));
    CHECK(std::abs(on_shell.determinant()) < 1e-15);

    cfg.q4 = 0.0;
    const SpinorBlock d = estc::dirac_block(cfg, {0, 0, 1, 1});
    CHECK((d - (0.5 * a[2] - 0.5 * SpinorBlock::Identity() + a[3])).isZero(1e-15));
}

TEST_CASE("D_n is Hermitian for real parameters") {
    std::mt19937_64 rng(7);
    const auto cfg = random_field(rng);
    for (const auto& n : estc::s69()) CHECK((estc::dirac_block(cfg, n) - estc::dirac_block(cfg, n).adjoint()).norm() == 0.0);
}

TEST_CASE("coupling blocks") {
    estc::FieldConfig cfg;
    CHECK(estc::coupling(cfg, estc::kOrigin, {1, 0, 0, 1}).isZero(0.0));

    const Complex amp(0.3, -0.2);
    cfg.amplitudes[0] = estc::FieldVector(amp, 0, 0);
    const SpinorBlock down = estc::coupling(cfg, estc::kOrigin, {-1, 0, 0, -1});
    CHECK((down + amp * estc::dirac_matrices()[0]).isZero(1e-15));

    CHECK_THROWS_AS(estc::coupling(cfg, estc::kOrigin, {2, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(estc::coupling(cfg, estc::kOrigin, {1, 1, 0, 0}), std::invalid_argument);
}

TEST_CASE("upward and downward couplings are adjoint") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cfg = random_field(rng);
        for (const auto& s : estc::field_shifts()) {
            const SpinorBlock up = estc::coupling(cfg, estc::kOrigin, s);
            const SpinorBlock down = estc::coupling(cfg, estc::kOrigin, -s);
            CHECK((up - down.adjoint()).norm() < 1e-15);
        }
    }
}

TEST_CASE("only the 13 stencil shifts couple") {
    std::mt19937_64 rng(3);
    const auto cfg = random_field(rng);
    int accepted = 0;
    for (const auto& s : estc::s69()) {
        if (estc::g4d(s) <= 1) {
            CHECK_NOTHROW(estc::coupling(cfg, estc::kOrigin, s));
            ++accepted;
        } else {
            CHECK_THROWS(estc::coupling(cfg, estc::kOrigin, s));
        }
    }
    CHECK(accepted == 13);
}

TEST_CASE("pair terms vanish without field") {
    estc::FieldConfig cfg;
    for (const auto& d : estc::s69()) {
        CHECK(estc::pair_term_a1(cfg, estc::kOrigin, d).isZero(0.0));
        CHECK(estc::pair_term_a2(cfg, estc::kOrigin, d) == Complex(0.0, 0.0));
    }
}

TEST_CASE("A_1 and A_2 small cases") {
    estc::FieldConfig cfg;
    const estc::FieldVector a1(Complex(0.2, 0.1), Complex(-0.3, 0.0), Complex(0.0, 0.4));
    const estc::FieldVector a2(Complex(0.5, -0.2), Complex(0.1, 0.1), Complex(-0.2, 0.0));
    cfg.amplitudes[0] = a1;
    cfg.amplitudes[1] = a2;
    const auto& s = estc::field_shifts();

    // n - m = -s_1 picks alpha . A_1
    CHECK((estc::pair_term_a1(cfg, estc::kOrigin, -s[0]) - estc::alpha_dot(a1)).norm() < 1e-15);

    // n - m = s_1 + s_2 appears in the conj-conj sum for (j,l) = (1,2) and (2,1)
    const LatticePoint d = s[0] + s[1];
    const Complex want = 2.0 * (a1.conjugate().array() * a2.conjugate().array()).sum();
    CHECK(std::abs(estc::pair_term_a2(cfg, estc::kOrigin, d) - want) < 1e-15);
    const Complex want_neg = 2.0 * (a1.array() * a2.array()).sum();
    CHECK(std::abs(estc::pair_term_a2(cfg, estc::kOrigin, -d) - want_neg) < 1e-15);
}

TEST_CASE("A_2 is conjugate symmetric and supported on double shifts") {
    std::mt19937_64 rng(5);
    const auto cfg = random_field(rng);
    const auto near = estc::s69();
    for (const auto& m : estc::stencil_13()) {
        for (const auto& n : near) {
            const Complex forward = estc::pair_term_a2(cfg, m, n);
            CHECK(std::abs(forward - std::conj(estc::pair_term_a2(cfg, n, m))) < 1e-14);
            CHECK((estc::pair_term_a1(cfg, m, n) - estc::pair_term_a1(cfg, n, m).adjoint()).norm() < 1e-14);
        }
    }
}

TEST_CASE("product of A_1 terms reduces to the scalar A_2") {
    // sum_l A_1(m,l) A_1(l,n) = A_2(m,n) U: the spin (cross product) parts cancel pairwise.
    std::mt19937_64 rng(9);
    const auto cfg = random_field(rng);
    const auto near = estc::s69();
    for (const auto& n : near) {
        SpinorBlock sum = SpinorBlock::Zero();
        for (const auto& l : estc::stencil_13()) sum += estc::pair_term_a1(cfg, estc::kOrigin, l) * estc::pair_term_a1(cfg, l, n);
        const SpinorBlock want = estc::pair_term_a2(cfg, estc::kOrigin, n) * SpinorBlock::Identity();
        CHECK((sum - want).norm() < 1e-14);
    }
}

TEST_CASE("potential matches its harmonic expansion") {
    std::mt19937_64 rng(13);
    const auto cfg = random_field(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const estc::SpacetimePoint x{u(rng), u(rng), u(rng), u(rng)};
        const Eigen::Vector3d a = estc::potential_at(cfg, x);
        const SpinorBlock direct = estc::alpha_dot(a.cast<Complex>());
        // D_A(x) = sum_d A_1(0, d) e^{i phi_{-d}(x)}
        SpinorBlock expanded = SpinorBlock::Zero();
        for (const auto& d : estc::stencil_13()) expanded += estc::pair_term_a1(cfg, estc::kOrigin, d) * std::polar(1.0, phase_of(-d, x));
        CHECK((direct - expanded).norm() < 1e-13);
    }
}

TEST_CASE("standing wave preset") {
    estc::FieldConfig cfg;
    estc::StandingWavePreset preset;
    preset.strength = {Complex(0.1, 0), Complex(0, 0.2), Complex(0.05, 0.05)};
    estc::apply_preset(cfg, preset);
    for (int a = 0; a < 3; ++a) {
        CHECK((cfg.amplitudes[a] - cfg.amplitudes[a + 3]).norm() == 0.0);
        CHECK(std::abs(cfg.amplitudes[a][a]) == 0.0);
    }
    // standing along X1: A' is proportional to cos(2 pi X1)
    const Eigen::Vector3d node = estc::potential_at(cfg, {0.25, 0.0, 0.0, 0.1});
    CHECK(std::abs(node[1]) < 1e-15);

    preset.polarization[0] = Eigen::Vector3d::UnitX();
    CHECK_THROWS_AS(estc::apply_preset(cfg, preset), std::invalid_argument);
}

TEST_CASE("field config validation") {
    estc::FieldConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.omega = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.omega = 1.0;
    cfg.q4 = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
