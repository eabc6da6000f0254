#include "estc/fractal_scheduler.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "cycle1_tables.hpp"
#include "estc/union_find.hpp"

namespace estc {

namespace {

constexpr Periods kPeriodsStage0{4, 4, 4, 4};
constexpr Periods kPeriodsStage1{4, 4, 4, 12};
constexpr Periods kPeriodsStage2{12, 4, 4, 12};
constexpr Periods kPeriodsStage3{12, 12, 4, 12};
constexpr Periods kPeriodsStage4{12, 12, 12, 12};

const std::array<LatticePoint, 8> kCentersStage01{{
    {0, 0, 0, 0}, {-1, -1, -1, -1}, {1, 1, -1, -1}, {1, -1, 1, -1},
    {-1, 1, 1, -1}, {0, 2, 2, 0}, {2, 0, 2, 0}, {2, 2, 0, 0},
}};

const std::array<LatticePoint, 6> kCentersStage02{{
    {0, 0, -1, -1}, {0, -1, 0, -1}, {-1, 0, 0, -1}, {0, 1, 1, 0}, {1, 0, 1, 0}, {1, 1, 0, 0},
}};

// n4 values assigned to each block of five consecutive phase-1 centers.
constexpr std::array<std::int64_t, 5> kN4EvenShell{4, 0, -4, 2, -2};
constexpr std::array<std::int64_t, 5> kN4OddShell{3, -1, -5, 1, -3};

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

void require_length(std::span<const Projection3> table, std::size_t expected, const char* name) {
    if (table.size() != expected) {
        throw std::runtime_error(std::string("center table ") + name + ": expected " + std::to_string(expected) +
                                 " entries, got " + std::to_string(table.size()));
    }
}

void require_checksum(std::span<const Projection3> table, std::int64_t expected, const char* name) {
    if (projection_checksum(table) != expected) {
        throw std::runtime_error(std::string("center table ") + name + ": checksum mismatch");
    }
}

class LatticeBuilder {
 public:
    void add(const LatticePoint& center, const Periods& periods, int stage, int phase) {
        if (!center.even_sum()) {
            throw std::runtime_error("generated center " + to_string(center) + " has an odd sum");
        }
        PointLattice lat;
        lat.u = static_cast<std::int64_t>(out_.size()) + 1;
        lat.k = lat.u <= 8 ? 0 : lat.u - 8;
        lat.center = center;
        lat.periods = periods;
        lat.stage = stage;
        lat.phase = phase;
        out_.push_back(lat);
    }

    // Phase 1 of stages 2..4: each projection yields five centers.
    void expand(std::span<const Projection3> table, const Periods& periods, int stage) {
        for (const auto& pr : table) {
            const std::int64_t shell = std::llabs(pr.n1) + std::llabs(pr.n2) + std::llabs(pr.n3);
            const auto& n4s = (shell % 2 == 0) ? kN4EvenShell : kN4OddShell;
            for (auto n4 : n4s) add({pr.n1, pr.n2, pr.n3, n4}, periods, stage, 1);
        }
    }

    // Phase 2: replay the phase-1 block shifted by `shift`.
    void replay(std::size_t first, std::size_t count, const LatticePoint& shift, const Periods& periods, int stage) {
        for (std::size_t i = 0; i < count; ++i) add(out_[first + i].center + shift, periods, stage, 2);
    }

    const PointLattice& at(std::int64_t u) const { return out_.at(static_cast<std::size_t>(u - 1)); }
    std::size_t size() const { return out_.size(); }
    std::vector<PointLattice> take() { return std::move(out_); }

 private:
    std::vector<PointLattice> out_;
};

}  // namespace

bool PointLattice::contains(const LatticePoint& n) const noexcept {
    for (std::size_t a = 0; a < 4; ++a) {
        if (floor_mod(n[a] - center[a], periods[a]) != 0) return false;
    }
    return true;
}

CenterTables published_center_tables() {
    return {detail::kStage2Projections, detail::kStage3Projections, detail::kStage4Projections};
}

std::int64_t projection_checksum(std::span<const Projection3> table) {
    std::int64_t sum = 0;
    std::int64_t pos = 1;
    for (const auto& pr : table) sum += pos++ * (pr.n1 * 961 + pr.n2 * 31 + pr.n3 + 1000);
    return sum;
}

std::vector<PointLattice> build_cycle1() { return build_cycle1_checked(published_center_tables()); }

std::vector<PointLattice> build_cycle1_checked(const CenterTables& tables) {
    require_checksum(tables.stage2, detail::kStage2Checksum, "stage 2");
    require_checksum(tables.stage3, detail::kStage3Checksum, "stage 3");
    require_checksum(tables.stage4, detail::kStage4Checksum, "stage 4");
    auto lattices = build_cycle1(tables);

    const auto expect_center = [&](std::int64_t u, const LatticePoint& c) {
        if (lattices.at(static_cast<std::size_t>(u - 1)).center != c) {
            throw std::runtime_error("center of lattice " + std::to_string(u) + " does not match its reference value");
        }
    };
    expect_center(43, {-1, 2, 1, 4});
    expect_center(44, {-1, 2, 1, 0});
    expect_center(48, {-1, 1, 2, 4});
    return lattices;
}

std::vector<PointLattice> build_cycle1(const CenterTables& tables) {
    require_length(tables.stage2, 6, "stage 2");
    require_length(tables.stage3, 30, "stage 3");
    require_length(tables.stage4, 182, "stage 4");

    LatticeBuilder b;
    for (const auto& c : kCentersStage01) b.add(c, kPeriodsStage0, 0, 1);
    for (const auto& c : kCentersStage02) b.add(c, kPeriodsStage0, 0, 2);

    // Stage 1: u = 15..42 are u = 1..14 moved by -2 and then +2 along n4.
    for (int phase = 1; phase <= 2; ++phase) {
        const LatticePoint shift{0, 0, 0, phase == 1 ? -2 : 2};
        for (std::int64_t u = 1; u <= 14; ++u) b.add(b.at(u).center + shift, kPeriodsStage1, 1, phase);
    }

    b.expand(tables.stage2, kPeriodsStage2, 2);
    b.replay(42, 30, {4, 0, 0, 0}, kPeriodsStage2, 2);
    b.expand(tables.stage3, kPeriodsStage3, 3);
    b.replay(102, 150, {0, 4, 0, 0}, kPeriodsStage3, 3);
    b.expand(tables.stage4, kPeriodsStage4, 4);
    b.replay(402, 910, {0, 0, 4, 0}, kPeriodsStage4, 4);

    if (b.size() != static_cast<std::size_t>(kCycle1LastU)) {
        throw std::runtime_error("first cycle produced " + std::to_string(b.size()) + " lattices");
    }
    return b.take();
}

const std::vector<PointLattice>& cycle1() {
    static const std::vector<PointLattice> lattices = build_cycle1();
    return lattices;
}

std::vector<LatticePoint> points_in_region(const PointLattice& lattice, const Region& region) {
    std::array<std::vector<std::int64_t>, 4> axes;
    for (std::size_t a = 0; a < 4; ++a) {
        const std::int64_t period = lattice.periods[a];
        std::int64_t v = region.lower[a] + floor_mod(lattice.center[a] - region.lower[a], period);
        for (; v <= region.upper[a]; v += period) axes[a].push_back(v);
        if (axes[a].empty()) return {};
    }
    std::vector<LatticePoint> out;
    out.reserve(axes[0].size() * axes[1].size() * axes[2].size() * axes[3].size());
    for (auto a : axes[0])
        for (auto b : axes[1])
            for (auto c : axes[2])
                for (auto d : axes[3]) out.push_back({a, b, c, d});
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return index_of(x) < index_of(y); });
    return out;
}

std::vector<const PointLattice*> family(std::span<const PointLattice> lattices, std::int64_t k) {
    std::vector<const PointLattice*> out;
    for (const auto& lat : lattices) {
        if (lat.k == k) out.push_back(&lat);
    }
    return out;
}

std::vector<LatticePoint> family_points(std::span<const PointLattice> lattices, std::int64_t k, const Region& region) {
    std::vector<std::pair<std::int64_t, LatticePoint>> keyed;
    for (const auto* lat : family(lattices, k)) {
        for (const auto& n : points_in_region(*lat, region)) keyed.emplace_back(index_of(n), n);
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<LatticePoint> out;
    out.reserve(keyed.size());
    for (const auto& [i, n] : keyed) out.push_back(n);
    return out;
}

SeparationReport verify_separation(std::span<const PointLattice> lattices, const Region& limit) {
    struct Tagged {
        std::size_t lattice;
        LatticePoint offset;  // n - c0
    };
    std::unordered_multimap<LatticePoint, Tagged, LatticePointHash> at;
    for (std::size_t li = 0; li < lattices.size(); ++li) {
        for (const auto& n : points_in_region(lattices[li], limit)) at.emplace(n, Tagged{li, n - lattices[li].center});
    }

    // Every difference with g4d <= 2 is one of the 69 shifts of generations 0..2.
    const auto near = s69();
    SeparationReport report;
    report.points = at.size();
    for (const auto& [n, tag] : at) {
        for (const auto& d : near) {
            auto [lo, hi] = at.equal_range(n + d);
            for (auto it = lo; it != hi; ++it) {
                const Tagged& other = it->second;
                if (d == kOrigin && other.lattice == tag.lattice) continue;
                // each unordered pair once
                if (std::make_pair(index_of(n), tag.lattice) > std::make_pair(index_of(it->first), other.lattice)) continue;
                ++report.close_pairs;
                const auto& la = lattices[tag.lattice];
                const auto& lb = lattices[other.lattice];
                const bool both_f0 = la.k == 0 && lb.k == 0;
                const bool different_cells = tag.offset != other.offset;
                if (!both_f0 && !different_cells) continue;
                report.violations.push_back({n, it->first, la.u, lb.u});
            }
        }
    }
    return report;
}

std::size_t ModelSpec::equation_count() const {
    std::size_t total = 0;
    for (const auto& [k, pts] : points) total += pts.size();
    return total;
}

std::vector<Equation> equations_of(const ModelSpec& model) {
    std::vector<Equation> out;
    out.reserve(model.equation_count());
    for (auto k : model.k_list) {
        const auto it = model.points.find(k);
        if (it == model.points.end()) continue;
        for (const auto& n : it->second) out.push_back({k, n});
    }
    return out;
}

ModelSpec model_spec(std::span<const PointLattice> lattices, int p) {
    if (p < 0) throw std::invalid_argument("model level p must be non-negative");
    ModelSpec m;
    m.name = std::to_string(p) + "-model";
    m.region = kRegion42;
    if (p == 0) {
        m.k_list = {0};
        m.points[0] = {kOrigin};
        return m;
    }
    m.k_list.push_back(0);
    for (const auto& lat : lattices) {
        if (lat.k >= 1 && g4d(lat.center) <= p) m.k_list.push_back(lat.k);
    }
    for (auto k : m.k_list) m.points[k] = family_points(lattices, k, m.region);
    return m;
}

ModelSpec custom_model(std::span<const PointLattice> lattices, std::vector<std::int64_t> k_list, const Region& region,
                       std::string name) {
    if (k_list.empty() || k_list.front() != 0) throw std::invalid_argument("k list must start at 0");
    for (std::size_t i = 1; i < k_list.size(); ++i) {
        if (k_list[i] <= k_list[i - 1]) throw std::invalid_argument("k list must be strictly increasing");
    }
    const std::int64_t max_k = lattices.empty() ? 0 : lattices.back().k;
    if (k_list.back() > max_k) throw std::invalid_argument("k list exceeds the generated families");
    for (std::size_t a = 0; a < 4; ++a) {
        if (region.lower[a] > region.upper[a]) throw std::invalid_argument("region bounds are inverted");
    }
    ModelSpec m;
    m.name = std::move(name);
    m.region = region;
    m.k_list = std::move(k_list);
    for (auto k : m.k_list) m.points[k] = family_points(lattices, k, region);
    return m;
}

ModelSpec full_model_42(std::span<const PointLattice> lattices) {
    std::vector<std::int64_t> ks(static_cast<std::size_t>(lattices.back().k + 1));
    for (std::size_t k = 0; k < ks.size(); ++k) ks[k] = static_cast<std::int64_t>(k);
    return custom_model(lattices, std::move(ks), kRegion42, "full-4,2");
}

std::vector<LatticePoint> stencil_13() {
    auto all = s69();
    all.resize(13);
    return all;
}

ClusterHistory cluster_history(const ModelSpec& model) {
    const auto near = s69();
    std::unordered_map<LatticePoint, std::size_t, LatticePointHash> slot;
    UnionFind sets;
    ClusterHistory h;
    for (auto k : model.k_list) {
        const auto it = model.points.find(k);
        if (it == model.points.end()) continue;
        ClusterStep step;
        step.k = k;
        for (const auto& n : it->second) {
            const std::size_t me = sets.add();
            slot.emplace(n, me);
            ++step.added;
            for (const auto& d : near) {
                if (d == kOrigin) continue;
                const auto other = slot.find(n + d);
                if (other == slot.end()) continue;
                if (sets.find(other->second) != sets.find(me)) {
                    sets.unite(other->second, me);
                    ++step.merges;
                }
            }
        }
        step.clusters_after = sets.sets();
        h.steps.push_back(step);
    }
    h.final_clusters = sets.sets();
    for (std::size_t i = 0; i < sets.size(); ++i) h.largest_cluster = std::max(h.largest_cluster, sets.set_size(i));
    return h;
}

}  // namespace estc
