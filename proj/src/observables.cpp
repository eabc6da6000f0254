#include "estc/observables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "estc/parallel.hpp"

namespace estc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex quadratic(const SpinorBlock& m, const Bispinor& a) { return a.dot(m * a); }

std::unordered_map<LatticePoint, const SpinorBlock*, LatticePointHash> lookup(const SolutionTable& table) {
    std::unordered_map<LatticePoint, const SpinorBlock*, LatticePointHash> out;
    out.reserve(table.blocks.size());
    for (const SolutionBlock& b : table.blocks) out.emplace(b.site, &b.s);
    return out;
}

double rel_diff(const SpinorBlock& a, const SpinorBlock& b) {
    const double scale = std::max({a.norm(), b.norm(), std::numeric_limits<double>::min()});
    return (a - b).norm() / scale;
}

}  // namespace

double phase(const FieldConfig& cfg, const LatticePoint& n, const SpacetimePoint& x) {
    const double k1 = static_cast<double>(n[0]) + cfg.q[0] / cfg.omega;
    const double k2 = static_cast<double>(n[1]) + cfg.q[1] / cfg.omega;
    const double k3 = static_cast<double>(n[2]) + cfg.q[2] / cfg.omega;
    const double k4 = static_cast<double>(n[3]) + cfg.q4 / cfg.omega;
    return kTwoPi * (k1 * x.x1 + k2 * x.x2 + k3 * x.x3 - k4 * x.x4);
}

SpinorBlock evolution(const SolutionTable& table, const FieldConfig& cfg, const SpacetimePoint& x) {
    SpinorBlock e = SpinorBlock::Zero();
    for (const SolutionBlock& b : table.blocks) e += std::polar(1.0, phase(cfg, b.site, x)) * b.s;
    return e;
}

Bispinor wavefunction(const SolutionTable& table, const FieldConfig& cfg, const SpacetimePoint& x, const Bispinor& a0) {
    return evolution(table, cfg, x) * a0;
}

SpinorBlock u_e(const SolutionTable& table) {
    SpinorBlock sum = SpinorBlock::Zero();
    for (const SolutionBlock& b : table.blocks) sum.noalias() += b.s.adjoint() * b.s;
    return sum;
}

SpinorBlock u_d(const SolutionTable& table, const FieldConfig& cfg) {
    const auto blocks = lookup(table);
    const auto near = s69();
    std::unordered_map<LatticePoint, SpinorBlock, LatticePointHash> dirac;
    for (const SolutionBlock& b : table.blocks) dirac.emplace(b.site, dirac_block(cfg, b.site));

    SpinorBlock sum = SpinorBlock::Zero();
    for (const SolutionBlock& bm : table.blocks) {
        const LatticePoint& m = bm.site;
        const SpinorBlock& dm = dirac.at(m);
        for (const LatticePoint& d : near) {
            const LatticePoint n = m + d;
            const auto it = blocks.find(n);
            if (it == blocks.end()) continue;
            const SpinorBlock& dn = dirac.at(n);
            const SpinorBlock a1 = pair_term_a1(cfg, m, n);
            SpinorBlock kernel = -a1 * dn - dm * a1;
            kernel.diagonal().array() += pair_term_a2(cfg, m, n);
            if (d == kOrigin) kernel.noalias() += dm * dn;
            sum.noalias() += bm.s.adjoint() * kernel * *it->second;
        }
    }
    return sum;
}

SpinorBlock u_d_residual(const ResidualMap& residuals) {
    // Sum in global-index order so the result does not depend on hash iteration order.
    std::vector<std::pair<std::int64_t, const SpinorBlock*>> order;
    order.reserve(residuals.size());
    for (const auto& [n, v] : residuals) order.emplace_back(index_of(n), &v);
    std::sort(order.begin(), order.end());
    SpinorBlock sum = SpinorBlock::Zero();
    for (const auto& [i, v] : order) sum.noalias() += v->adjoint() * *v;
    return sum;
}

HarmonicOperator energy_operator(const FieldConfig& cfg) {
    return [q4 = cfg.q4, omega = cfg.omega](const LatticePoint& n) -> SpinorBlock {
        return SpinorBlock::Identity() * (q4 + static_cast<double>(n[3]) * omega);
    };
}

HarmonicOperator momentum_operator(const FieldConfig& cfg, int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("momentum axis must be 0, 1 or 2");
    return [q = cfg.q[axis], omega = cfg.omega, axis](const LatticePoint& n) -> SpinorBlock {
        return SpinorBlock::Identity() * (q + static_cast<double>(n[static_cast<std::size_t>(axis)]) * omega);
    };
}

HarmonicOperator constant_operator(const SpinorBlock& block) {
    return [block](const LatticePoint&) { return block; };
}

SpinorBlock a_e(const SolutionTable& table, const HarmonicOperator& op) {
    SpinorBlock sum = SpinorBlock::Zero();
    for (const SolutionBlock& b : table.blocks) sum.noalias() += b.s.adjoint() * op(b.site) * b.s;
    return sum;
}

Complex a_mean(const SolutionTable& table, const HarmonicOperator& op, const Bispinor& a0) {
    if (a0.isZero(0.0)) throw std::domain_error("amplitude a0 is zero");
    const SpinorBlock ue = u_e(table);
    const double den = quadratic(ue, a0).real();
    if (!(den > 1e-14 * ue.norm() * a0.squaredNorm())) throw std::domain_error("a0 is orthogonal to the range of U_E");
    return quadratic(a_e(table, op), a0) / den;
}

double accuracy(const SpinorBlock& ud, const SpinorBlock& ue, const Bispinor& a0) {
    if (a0.isZero(0.0)) throw std::domain_error("amplitude a0 is zero");
    const double den = quadratic(ue, a0).real();
    if (!(den > 1e-14 * ue.norm() * a0.squaredNorm())) throw std::domain_error("a0 is orthogonal to the range of U_E");
    const double num = std::max(0.0, quadratic(ud, a0).real());
    return std::sqrt(num / den);
}

double accuracy(const SolutionTable& table, const FieldConfig& cfg, const Bispinor& a0) {
    return accuracy(u_d(table, cfg), u_e(table), a0);
}

BestAmplitude best_amplitude(const SpinorBlock& ud, const SpinorBlock& ue) {
    const SpinorBlock he = 0.5 * (ue + ue.adjoint());
    const SpinorBlock hd = 0.5 * (ud + ud.adjoint());
    const double trace = he.trace().real();
    if (!(trace > 0.0)) throw std::domain_error("U_E vanishes");

    Eigen::SelfAdjointEigenSolver<SpinorBlock> eig(he);
    const double floor = 1e-12 * trace;
    std::vector<int> keep;
    for (int i = 0; i < 4; ++i) {
        if (eig.eigenvalues()[i] > floor) keep.push_back(i);
    }
    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXcd w(4, r);
    for (Eigen::Index j = 0; j < r; ++j) {
        const int i = keep[static_cast<std::size_t>(j)];
        w.col(j) = eig.eigenvectors().col(i) / std::sqrt(eig.eigenvalues()[i]);
    }
    const Eigen::MatrixXcd m = w.adjoint() * hd * w;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> inner(0.5 * (m + m.adjoint()));

    BestAmplitude best;
    best.range_rank = static_cast<int>(r);
    best.a0 = w * inner.eigenvectors().col(0);
    best.a0 /= best.a0.norm();
    best.r_min = std::sqrt(std::max(0.0, inner.eigenvalues()[0]));
    return best;
}

int default_grid(const SolutionTable& table) {
    std::int64_t reach = 0;
    for (const SolutionBlock& b : table.blocks) {
        for (std::size_t a = 0; a < 4; ++a) reach = std::max(reach, std::abs(b.site[a]));
    }
    return static_cast<int>(2 * reach + 3);
}

SpinorBlock u_e_quadrature(const SolutionTable& table, const FieldConfig& cfg, int n, unsigned threads) {
    if (n <= 0) throw std::invalid_argument("grid size must be positive");
    if (table.blocks.empty()) return SpinorBlock::Zero();
    const double h = 1.0 / n;

    // e^{i phi_n(x)} factors per axis: table[axis][g * width + (n_axis + reach)]
    std::int64_t reach = 0;
    for (const SolutionBlock& b : table.blocks) {
        for (std::size_t a = 0; a < 4; ++a) reach = std::max(reach, std::abs(b.site[a]));
    }
    const std::size_t width = static_cast<std::size_t>(2 * reach + 1);
    const std::array<double, 4> shift{cfg.q[0] / cfg.omega, cfg.q[1] / cfg.omega, cfg.q[2] / cfg.omega, cfg.q4 / cfg.omega};
    std::array<std::vector<Complex>, 4> factor;
    for (std::size_t a = 0; a < 4; ++a) {
        const double sign = a == 3 ? -1.0 : 1.0;
        factor[a].resize(static_cast<std::size_t>(n) * width);
        for (int g = 0; g < n; ++g) {
            for (std::size_t j = 0; j < width; ++j) {
                const double k = static_cast<double>(static_cast<std::int64_t>(j) - reach) + shift[a];
                factor[a][static_cast<std::size_t>(g) * width + j] = std::polar(1.0, sign * kTwoPi * k * g * h);
            }
        }
    }
    std::vector<std::array<std::size_t, 4>> offset(table.blocks.size());
    for (std::size_t i = 0; i < table.blocks.size(); ++i) {
        for (std::size_t a = 0; a < 4; ++a) offset[i][a] = static_cast<std::size_t>(table.blocks[i].site[a] + reach);
    }

    // Per-slice partial sums, combined in slice order: the result is the same for any thread count.
    std::vector<SpinorBlock> partial(static_cast<std::size_t>(n), SpinorBlock::Zero());
    parallel_for(static_cast<std::size_t>(n), resolve_threads(threads), [&](std::size_t first, std::size_t last) {
        for (std::size_t g4 = first; g4 < last; ++g4) {
            SpinorBlock acc = SpinorBlock::Zero();
            for (std::size_t g1 = 0; g1 < static_cast<std::size_t>(n); ++g1) {
                for (std::size_t g2 = 0; g2 < static_cast<std::size_t>(n); ++g2) {
                    for (std::size_t g3 = 0; g3 < static_cast<std::size_t>(n); ++g3) {
                        SpinorBlock e = SpinorBlock::Zero();
                        for (std::size_t i = 0; i < offset.size(); ++i) {
                            const auto& o = offset[i];
                            const Complex f = factor[0][g1 * width + o[0]] * factor[1][g2 * width + o[1]] *
                                              factor[2][g3 * width + o[2]] * factor[3][g4 * width + o[3]];
                            e += f * table.blocks[i].s;
                        }
                        acc.noalias() += e.adjoint() * e;
                    }
                }
            }
            partial[g4] = acc;
        }
    });
    SpinorBlock sum = SpinorBlock::Zero();
    for (const SpinorBlock& p : partial) sum += p;
    return sum / std::pow(static_cast<double>(n), 4);
}

double u_d_term_scale(const SolutionTable& table, const FieldConfig& cfg) {
    const auto stencil = stencil_13();
    std::unordered_map<LatticePoint, double, LatticePointHash> norms;
    for (const SolutionBlock& b : table.blocks) norms.emplace(b.site, b.s.norm());
    std::map<std::int64_t, LatticePoint> targets;
    for (const SolutionBlock& b : table.blocks) {
        for (const auto& sh : stencil) targets.emplace(index_of(b.site - sh), b.site - sh);
    }
    double total = 0.0;
    for (const auto& [i, n] : targets) {
        double row = 0.0;
        for (const auto& sh : stencil) {
            const auto it = norms.find(n + sh);
            if (it != norms.end()) row += coupling(cfg, n, sh).norm() * it->second;
        }
        total += row * row;
    }
    return total;
}

ObservableSummary summarize(const SolutionTable& table, const FieldConfig& cfg, const ObservableOptions& options) {
    ObservableSummary out;
    out.ue = u_e(table);
    out.ud = u_d(table, cfg);
    out.ud_residual = u_d_residual(residual_map(cfg, table));
    out.ud_mismatch = rel_diff(out.ud, out.ud_residual);
    out.ud_term_scale = u_d_term_scale(table, cfg);
    out.ud_term_mismatch =
        (out.ud - out.ud_residual).norm() / std::max(out.ud_term_scale, std::numeric_limits<double>::min());
    out.amplitude_defined = !out.ue.isZero(0.0);
    if (out.amplitude_defined) {
        out.best = best_amplitude(out.ud, out.ue);
        out.a0 = options.a0.value_or(out.best.a0);
        out.r = accuracy(out.ud, out.ue, out.a0);
        out.energy = a_mean(table, energy_operator(cfg), out.a0);
        out.beta = a_mean(table, constant_operator(dirac_matrices()[3]), out.a0);
    }
    if (options.grid >= 0) {
        out.grid = options.grid == 0 ? default_grid(table) : options.grid;
        out.ue_grid = u_e_quadrature(table, cfg, out.grid, options.threads);
        out.ue_grid_error = rel_diff(*out.ue_grid, out.ue);
    }
    return out;
}

}  // namespace estc
