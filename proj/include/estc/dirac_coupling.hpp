#pragma once

#include <array>
#include <complex>
#include <optional>

#include <Eigen/Core>

#include "estc/lattice_index.hpp"

namespace estc {

using Complex = std::complex<double>;
using SpinorBlock = Eigen::Matrix<Complex, 4, 4>;
using Bispinor = Eigen::Matrix<Complex, 4, 1>;
using FieldVector = Eigen::Matrix<Complex, 3, 1>;

/// Dimensionless coordinates X1..X3 (in field wavelengths) and X4 = ct / wavelength.
struct SpacetimePoint {
    double x1 = 0, x2 = 0, x3 = 0, x4 = 0;
};

/// Field and electron parameters, all dimensionless.
///
/// The vector potential is A'(x) = sum_j [A_j e^{i phi_j(x)} + conj(A_j) e^{-i phi_j(x)}],
/// phi_j = 2 pi (s_j . r' - X4), with s_j the six harmonic shifts returned by field_shifts().
struct FieldConfig {
    std::array<FieldVector, 6> amplitudes{FieldVector::Zero(), FieldVector::Zero(), FieldVector::Zero(),
                                          FieldVector::Zero(), FieldVector::Zero(), FieldVector::Zero()};
    Eigen::Vector3d q = Eigen::Vector3d::Zero();
    double q4 = 0.0;
    double omega = 1.0;

    /// Throws std::invalid_argument unless omega > 0 and every number is finite.
    void validate() const;
    bool field_free() const;
};

/// Three standing waves with mutually orthogonal phase planes: the wave along axis a is built
/// from the harmonics s_a and s_{a+3} with equal amplitude `strength[a]` and polarization
/// `polarization[a]`, which must be orthogonal to axis a.
struct StandingWavePreset {
    std::array<Complex, 3> strength{};
    std::array<Eigen::Vector3d, 3> polarization{Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(),
                                                Eigen::Vector3d::UnitX()};
};

/// Fills the six amplitudes of `cfg` from the preset. Throws std::invalid_argument for a
/// polarization that is zero or not transverse.
void apply_preset(FieldConfig& cfg, const StandingWavePreset& preset);

/// alpha_1..alpha_4 in the standard representation: alpha_k = offdiag(sigma_k, sigma_k),
/// alpha_4 = diag(1, 1, -1, -1).
const std::array<SpinorBlock, 4>& dirac_matrices();

/// s_1..s_6.
const std::array<LatticePoint, 6>& field_shifts();

/// sum_k alpha_k v_k
SpinorBlock alpha_dot(const FieldVector& v);

/// sum_k alpha_k (q_k + n_k Omega) - U (q4 + n4 Omega) + alpha_4
SpinorBlock dirac_block(const FieldConfig& cfg, const LatticePoint& n);

/// V(n, s): the block multiplying c(n + s) in the equation at n. Equation n reads
///   D_n c(n) - sum_j [(alpha.A_j) c(n - s_j) + (alpha.conj(A_j)) c(n + s_j)] = 0.
/// Throws std::invalid_argument for shifts outside the 13-point stencil.
SpinorBlock coupling(const FieldConfig& cfg, const LatticePoint& n, const LatticePoint& s);

/// Index j in 0..5 with s == s_{j+1} (sign = +1) or s == -s_{j+1} (sign = -1); nullopt otherwise.
struct ShiftMatch {
    int j;
    int sign;
};
std::optional<ShiftMatch> match_field_shift(const LatticePoint& s);

/// Real vector potential A'(x).
Eigen::Vector3d potential_at(const FieldConfig& cfg, const SpacetimePoint& x);

/// Pair term A_1(m, n) = sum_k alpha_k sum_j [A_jk delta(n-m+s_j) + conj(A_jk) delta(n-m-s_j)].
SpinorBlock pair_term_a1(const FieldConfig& cfg, const LatticePoint& m, const LatticePoint& n);

/// Pair term A_2(m, n): the scalar sum of A_j.A_l products over all four sign combinations
/// whose shifts connect m and n.
Complex pair_term_a2(const FieldConfig& cfg, const LatticePoint& m, const LatticePoint& n);

}  // namespace estc
