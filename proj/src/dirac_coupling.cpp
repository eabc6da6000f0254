#include "estc/dirac_coupling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace estc {

namespace {

std::array<SpinorBlock, 4> make_alphas() {
    const Complex i{0.0, 1.0};
    using Mat2 = Eigen::Matrix<Complex, 2, 2>;
    std::array<Mat2, 3> sigma;
    sigma[0] << 0, 1, 1, 0;
    sigma[1] << 0, -i, i, 0;
    sigma[2] << 1, 0, 0, -1;

    std::array<SpinorBlock, 4> a;
    for (int k = 0; k < 3; ++k) {
        a[k].setZero();
        a[k].topRightCorner<2, 2>() = sigma[k];
        a[k].bottomLeftCorner<2, 2>() = sigma[k];
    }
    a[3].setZero();
    a[3].diagonal() << 1, 1, -1, -1;
    return a;
}

// a.b without conjugation
Complex bilinear(const FieldVector& a, const FieldVector& b) { return (a.array() * b.array()).sum(); }

bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

double shift_phase(const LatticePoint& s, const SpacetimePoint& x) {
    return 2.0 * std::numbers::pi *
           (static_cast<double>(s[0]) * x.x1 + static_cast<double>(s[1]) * x.x2 + static_cast<double>(s[2]) * x.x3 -
            static_cast<double>(s[3]) * x.x4);
}

}  // namespace

void FieldConfig::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("omega must be a positive finite number");
    if (!std::isfinite(q4) || !q.allFinite()) throw std::invalid_argument("q and q4 must be finite");
    for (const auto& a : amplitudes) {
        for (int k = 0; k < 3; ++k) {
            if (!finite(a[k])) throw std::invalid_argument("field amplitudes must be finite");
        }
    }
}

bool FieldConfig::field_free() const {
    for (const auto& a : amplitudes) {
        if (!a.isZero(0.0)) return false;
    }
    return true;
}

void apply_preset(FieldConfig& cfg, const StandingWavePreset& preset) {
    for (int axis = 0; axis < 3; ++axis) {
        const Eigen::Vector3d& e = preset.polarization[axis];
        const double norm = e.norm();
        if (!(norm > 0.0)) throw std::invalid_argument("standing wave polarization must be nonzero");
        if (std::abs(e[axis]) > 1e-12 * norm) {
            throw std::invalid_argument("standing wave polarization must be orthogonal to its propagation axis");
        }
        const FieldVector a = (e / norm).cast<Complex>() * preset.strength[axis];
        cfg.amplitudes[axis] = a;
        cfg.amplitudes[axis + 3] = a;
    }
}

const std::array<SpinorBlock, 4>& dirac_matrices() {
    static const std::array<SpinorBlock, 4> alphas = make_alphas();
    return alphas;
}

const std::array<LatticePoint, 6>& field_shifts() {
    static const std::array<LatticePoint, 6> shifts{{
        {1, 0, 0, 1}, {0, 1, 0, 1}, {0, 0, 1, 1}, {-1, 0, 0, 1}, {0, -1, 0, 1}, {0, 0, -1, 1},
    }};
    return shifts;
}

SpinorBlock alpha_dot(const FieldVector& v) {
    const auto& a = dirac_matrices();
    return a[0] * v[0] + a[1] * v[1] + a[2] * v[2];
}

SpinorBlock dirac_block(const FieldConfig& cfg, const LatticePoint& n) {
    const auto& a = dirac_matrices();
    SpinorBlock d = a[3];
    for (int k = 0; k < 3; ++k) d += a[k] * (cfg.q[k] + static_cast<double>(n[k]) * cfg.omega);
    d -= SpinorBlock::Identity() * (cfg.q4 + static_cast<double>(n[3]) * cfg.omega);
    return d;
}

std::optional<ShiftMatch> match_field_shift(const LatticePoint& s) {
    const auto& shifts = field_shifts();
    for (int j = 0; j < 6; ++j) {
        if (s == shifts[j]) return ShiftMatch{j, +1};
        if (s == -shifts[j]) return ShiftMatch{j, -1};
    }
    return std::nullopt;
}

SpinorBlock coupling(const FieldConfig& cfg, const LatticePoint& n, const LatticePoint& s) {
    if (s == kOrigin) return dirac_block(cfg, n);
    const auto match = match_field_shift(s);
    if (!match) throw std::invalid_argument("shift " + to_string(s) + " is outside the 13-point stencil");
    const FieldVector& a = cfg.amplitudes[match->j];
    return match->sign > 0 ? SpinorBlock(-alpha_dot(a.conjugate())) : SpinorBlock(-alpha_dot(a));
}

Eigen::Vector3d potential_at(const FieldConfig& cfg, const SpacetimePoint& x) {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    const auto& shifts = field_shifts();
    for (int j = 0; j < 6; ++j) {
        const Complex e = std::polar(1.0, shift_phase(shifts[j], x));
        // A e^{i phi} + conj(A) e^{-i phi} = 2 Re(A e^{i phi})
        out += 2.0 * (cfg.amplitudes[j] * e).real();
    }
    return out;
}

SpinorBlock pair_term_a1(const FieldConfig& cfg, const LatticePoint& m, const LatticePoint& n) {
    SpinorBlock out = SpinorBlock::Zero();
    const LatticePoint d = n - m;
    const auto& shifts = field_shifts();
    for (int j = 0; j < 6; ++j) {
        if (d + shifts[j] == kOrigin) out += alpha_dot(cfg.amplitudes[j]);
        if (d - shifts[j] == kOrigin) out += alpha_dot(cfg.amplitudes[j].conjugate());
    }
    return out;
}

Complex pair_term_a2(const FieldConfig& cfg, const LatticePoint& m, const LatticePoint& n) {
    Complex out{0.0, 0.0};
    const LatticePoint d = n - m;
    const auto& shifts = field_shifts();
    const auto& amp = cfg.amplitudes;
    for (int j = 0; j < 6; ++j) {
        for (int l = 0; l < 6; ++l) {
            const LatticePoint sj = shifts[j];
            const LatticePoint sl = shifts[l];
            if (d + sj + sl == kOrigin) out += bilinear(amp[j], amp[l]);
            if (d + sj - sl == kOrigin) out += bilinear(amp[j], amp[l].conjugate());
            if (d - sj + sl == kOrigin) out += bilinear(amp[j].conjugate(), amp[l]);
            if (d - sj - sl == kOrigin) out += bilinear(amp[j].conjugate(), amp[l].conjugate());
        }
    }
    return out;
}

}  // namespace estc
