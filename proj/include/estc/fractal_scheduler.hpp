#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "estc/lattice_index.hpp"

namespace estc {

using Periods = std::array<std::int64_t, 4>;

/// Inclusive box [lower, upper] of the integer lattice.
struct Region {
    LatticePoint lower;
    LatticePoint upper;

    bool contains(const LatticePoint& n) const noexcept {
        for (std::size_t a = 0; a < 4; ++a) {
            if (n[a] < lower[a] || n[a] > upper[a]) return false;
        }
        return true;
    }
    bool operator==(const Region&) const = default;
};

/// Central subset of the last stage of the first cycle.
inline const Region kRegion42{{-5, -5, -5, -5}, {6, 6, 6, 6}};
/// Block that the full first-cycle model covers completely.
inline const Region kInnerBlock{{-3, -3, -3, -3}, {4, 4, 4, 4}};

/// One translation lattice center + sum_i t_i * periods[i] * e_i.
struct PointLattice {
    std::int64_t u = 0;  // lattice number, 1-based
    std::int64_t k = 0;  // family index: 0 for u <= 8, u - 8 otherwise
    LatticePoint center;
    Periods periods{};
    int stage = 0;
    int phase = 0;

    bool contains(const LatticePoint& n) const noexcept;
};

struct Projection3 {
    std::int64_t n1, n2, n3;
};

/// 3d projections used to expand the phase-1 centers of stages 2, 3 and 4.
struct CenterTables {
    std::span<const Projection3> stage2;
    std::span<const Projection3> stage3;
    std::span<const Projection3> stage4;
};

/// The tables shipped with the library.
CenterTables published_center_tables();

/// Order-sensitive checksum of a projection table.
std::int64_t projection_checksum(std::span<const Projection3> table);

/// Lattices u = 1..2222 of the first fractal cycle. Validates the shipped tables against
/// their lengths and checksums and throws std::runtime_error on any mismatch.
std::vector<PointLattice> build_cycle1();

/// Same construction from caller-provided tables (lengths are still enforced; checksums are
/// not, so tests can feed modified data through the generator).
std::vector<PointLattice> build_cycle1(const CenterTables& tables);

/// build_cycle1(tables) plus the checksum and reference-center checks applied to the shipped
/// tables. Used for tables loaded from disk.
std::vector<PointLattice> build_cycle1_checked(const CenterTables& tables);

/// Shared, lazily built copy of build_cycle1().
const std::vector<PointLattice>& cycle1();

/// Number of the last lattice of the first cycle and the largest family index it defines.
inline constexpr std::int64_t kCycle1LastU = 2222;
inline constexpr std::int64_t kCycle1MaxK = kCycle1LastU - 8;

/// Anchor facts of the second cycle. It is not generated.
struct CycleAnchor {
    std::int64_t u;
    LatticePoint center;
    Periods periods;
};
inline const CycleAnchor kCycle2First{2223, {4, 4, 4, -6}, {12, 12, 12, 36}};
inline const CycleAnchor kCycle2Last{108526, {-15, -15, 5, -7}, {36, 36, 36, 36}};

/// Lattice points inside the region, sorted by global index.
std::vector<LatticePoint> points_in_region(const PointLattice& lattice, const Region& region);

/// Lattices that make up family F_k (u = 1..8 for k = 0, u = 8 + k otherwise).
std::vector<const PointLattice*> family(std::span<const PointLattice> lattices, std::int64_t k);

/// Points of F_k inside the region, sorted by global index.
std::vector<LatticePoint> family_points(std::span<const PointLattice> lattices, std::int64_t k, const Region& region);

struct SeparationViolation {
    LatticePoint a;
    LatticePoint b;
    std::int64_t u_a = 0;
    std::int64_t u_b = 0;
};

struct SeparationReport {
    std::size_t points = 0;
    std::size_t close_pairs = 0;  // distinct pairs at g4d <= 2, whether or not a rule covers them
    std::vector<SeparationViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Checks, over all points of the given lattices inside `limit`:
///  - any two distinct points of family 0 are at g4d distance > 2;
///  - any two distinct points whose lattice offsets n - c0 differ are at g4d distance > 2.
SeparationReport verify_separation(std::span<const PointLattice> lattices, const Region& limit);

/// One finite truncation: the families k_list and their retained points.
struct ModelSpec {
    std::string name;
    std::vector<std::int64_t> k_list;
    std::map<std::int64_t, std::vector<LatticePoint>> points;
    Region region = kRegion42;

    std::size_t equation_count() const;
};

struct Equation {
    std::int64_t k;
    LatticePoint site;
};

/// Equations in processing order: k ascending, then global index.
std::vector<Equation> equations_of(const ModelSpec& model);

/// p-model: family 0 plus every k >= 1 with g4d(c0(8+k)) <= p, restricted to kRegion42.
/// The 0-model is the single equation at the origin.
ModelSpec model_spec(std::span<const PointLattice> lattices, int p);

/// Explicit family list, e.g. a k_L override from a run configuration.
/// Throws std::invalid_argument unless the list is strictly increasing, starts at 0 and stays
/// inside the first cycle.
ModelSpec custom_model(std::span<const PointLattice> lattices, std::vector<std::int64_t> k_list,
                       const Region& region, std::string name);

/// k_L = {0, ..., 2214} over kRegion42.
ModelSpec full_model_42(std::span<const PointLattice> lattices);

/// The 13 shifts with g4d <= 1, in global-index order.
std::vector<LatticePoint> stencil_13();

/// Union-find view of how equations join into clusters when added in order. Two equations
/// share unknowns exactly when their sites are within g4d distance 2.
struct ClusterStep {
    std::int64_t k = 0;
    std::size_t added = 0;
    std::size_t merges = 0;          // cluster unions performed by this family
    std::size_t clusters_after = 0;  // distinct clusters after the family
};

struct ClusterHistory {
    std::vector<ClusterStep> steps;
    std::size_t final_clusters = 0;
    std::size_t largest_cluster = 0;
};

ClusterHistory cluster_history(const ModelSpec& model);

}  // namespace estc
