#pragma once

#include <functional>
#include <optional>

#include "estc/dirac_coupling.hpp"
#include "estc/projector_engine.hpp"

namespace estc {

/// 2 pi [(n + q / Omega) . r' - (n4 + q4 / Omega) X4]
double phase(const FieldConfig& cfg, const LatticePoint& n, const SpacetimePoint& x);

/// E(x) = sum_n e^{i phi_n(x)} S(n)
SpinorBlock evolution(const SolutionTable& table, const FieldConfig& cfg, const SpacetimePoint& x);

/// Psi(x) = E(x) a0
Bispinor wavefunction(const SolutionTable& table, const FieldConfig& cfg, const SpacetimePoint& x, const Bispinor& a0);

/// U_E = sum_n S(n)^dagger S(n), the unit-cube average of E^dagger E.
SpinorBlock u_e(const SolutionTable& table);

/// U_D assembled from the pair sums D_m D_n, A_1 and A_2.
SpinorBlock u_d(const SolutionTable& table, const FieldConfig& cfg);

/// U_D assembled as sum_n V_S(n)^dagger V_S(n).
SpinorBlock u_d_residual(const ResidualMap& residuals);

/// Operator acting on harmonic n as the block A(n).
using HarmonicOperator = std::function<SpinorBlock(const LatticePoint&)>;

/// (q4 + n4 Omega) U
HarmonicOperator energy_operator(const FieldConfig& cfg);
/// (q_axis + n_axis Omega) U for axis 0..2
HarmonicOperator momentum_operator(const FieldConfig& cfg, int axis);
/// The same block on every harmonic.
HarmonicOperator constant_operator(const SpinorBlock& block);

/// A_E = sum_n S(n)^dagger A(n) S(n)
SpinorBlock a_e(const SolutionTable& table, const HarmonicOperator& op);

/// <A> = a0^dagger A_E a0 / a0^dagger U_E a0. Throws std::domain_error for a degenerate
/// denominator.
Complex a_mean(const SolutionTable& table, const HarmonicOperator& op, const Bispinor& a0);

/// R = sqrt(a0^dagger U_D a0 / a0^dagger U_E a0). Throws std::domain_error when the denominator
/// vanishes relative to ||U_E|| ||a0||^2.
double accuracy(const SpinorBlock& ud, const SpinorBlock& ue, const Bispinor& a0);
double accuracy(const SolutionTable& table, const FieldConfig& cfg, const Bispinor& a0);

struct BestAmplitude {
    Bispinor a0;
    double r_min = 0;
    int range_rank = 0;  // dimension of the range of U_E that was searched
};

/// Minimizes R over a0 by whitening with the square root of U_E. Directions with U_E
/// eigenvalues below 1e-12 tr(U_E) are dropped; range_rank < 4 reports that restriction.
/// Throws std::domain_error when U_E vanishes.
BestAmplitude best_amplitude(const SpinorBlock& ud, const SpinorBlock& ue);

/// Grid size that integrates every product of two stored harmonics exactly.
int default_grid(const SolutionTable& table);

/// Trapezoid average of E^dagger E over an n^4 grid of the unit cube.
SpinorBlock u_e_quadrature(const SolutionTable& table, const FieldConfig& cfg, int n, unsigned threads = 1);

/// sum_n (sum_s ||V(n, s)||_F ||S(n + s)||_F)^2, the size of the terms that cancel in U_D.
/// Differences between the two U_D assemblies are rounding noise relative to this scale.
double u_d_term_scale(const SolutionTable& table, const FieldConfig& cfg);

struct ObservableOptions {
    std::optional<Bispinor> a0;  // unset: use the best amplitude
    int grid = -1;               // quadrature size; -1 skips, 0 uses default_grid
    unsigned threads = 1;
};

struct ObservableSummary {
    bool amplitude_defined = true;  // false when U_E = 0; a0, r, best, energy and beta are then unset
    SpinorBlock ue;
    SpinorBlock ud;
    SpinorBlock ud_residual;
    double ud_mismatch = 0;       // ||U_D - U_D(residual)||_F / max(||U_D||_F, tiny)
    double ud_term_scale = 0;     // u_d_term_scale
    double ud_term_mismatch = 0;  // ||U_D - U_D(residual)||_F / ud_term_scale
    Bispinor a0;
    double r = 0;
    BestAmplitude best;
    Complex energy;
    Complex beta;  // <alpha_4>
    std::optional<SpinorBlock> ue_grid;
    int grid = 0;
    double ue_grid_error = 0;  // relative Frobenius difference
};

ObservableSummary summarize(const SolutionTable& table, const FieldConfig& cfg, const ObservableOptions& options = {});

}  // namespace estc
