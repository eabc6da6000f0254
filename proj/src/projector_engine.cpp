#include "estc/projector_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "estc/parallel.hpp"

namespace estc {

namespace {

constexpr std::size_t kParallelWork = std::size_t{1} << 15;

std::size_t align_down(std::size_t i) { return i & ~std::size_t{3}; }

}  // namespace

// SparseMultispinor

void SparseMultispinor::add(const LatticePoint& site, const Bispinor& value) {
    const std::int64_t key = index_of(site);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const auto& e, std::int64_t k) { return index_of(e.first) < k; });
    if (it != entries_.end() && it->first == site) {
        it->second += value;
        if (it->second.isZero(0.0)) entries_.erase(it);
        return;
    }
    if (value.isZero(0.0)) return;
    entries_.insert(it, {site, value});
}

Bispinor SparseMultispinor::at(const LatticePoint& site) const {
    for (const auto& [n, v] : entries_) {
        if (n == site) return v;
    }
    return Bispinor::Zero();
}

double SparseMultispinor::norm() const {
    double sum = 0.0;
    for (const auto& e : entries_) sum += e.second.squaredNorm();
    return std::sqrt(sum);
}

Complex inner(const SparseMultispinor& a, const SparseMultispinor& b) {
    Complex sum{0.0, 0.0};
    auto i = a.entries_.begin();
    auto j = b.entries_.begin();
    while (i != a.entries_.end() && j != b.entries_.end()) {
        if (i->first == j->first) {
            sum += i->second.dot(j->second);
            ++i;
            ++j;
        } else if (index_of(i->first) < index_of(j->first)) {
            ++i;
        } else {
            ++j;
        }
    }
    return sum;
}

std::array<SparseMultispinor, 4> equation_rows(const FieldConfig& cfg, const LatticePoint& n) {
    std::array<SparseMultispinor, 4> rows;
    for (const auto& s : stencil_13()) {
        const SpinorBlock v = coupling(cfg, n, s);
        for (int a = 0; a < 4; ++a) rows[a].add(n + s, v.row(a).adjoint());
    }
    return rows;
}

RankDeficiency::RankDeficiency(std::int64_t k, const LatticePoint& site, int rank)
    : std::runtime_error("equation k=" + std::to_string(k) + " at " + to_string(site) + " has rank " +
                         std::to_string(rank) + " < 4"),
      k_(k),
      site_(site),
      rank_(rank) {}

std::optional<std::size_t> Cluster::site_index(const LatticePoint& n) const {
    const auto it = index.find(n);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

Bispinor Cluster::value(const RangeVector& v, std::size_t site) const {
    const std::size_t at = 4 * site;
    if (at < v.begin || at >= v.begin + static_cast<std::size_t>(v.data.size())) return Bispinor::Zero();
    return v.data.segment<4>(static_cast<Eigen::Index>(at - v.begin));
}

const SpinorBlock* SolutionTable::find(const LatticePoint& n) const {
    const std::int64_t key = index_of(n);
    const auto it = std::lower_bound(blocks.begin(), blocks.end(), key,
                                     [](const SolutionBlock& b, std::int64_t k) { return b.index < k; });
    if (it == blocks.end() || it->index != key) return nullptr;
    return &it->s;
}

SparseMultispinor SolveResult::vector_of(const ProjectorRecord& r, int i) const {
    if (i < 0 || i >= r.rank) throw std::out_of_range("vector number out of range");
    const Cluster& c = clusters.at(r.cluster);
    const RangeVector& v = c.vectors.at(r.first_vector + static_cast<std::size_t>(i));
    SparseMultispinor out;
    const std::size_t first = v.begin / 4;
    const std::size_t last = (v.begin + static_cast<std::size_t>(v.data.size())) / 4;
    for (std::size_t j = first; j < last; ++j) out.add(c.sites[j], c.value(v, j));
    return out;
}

namespace {

class Engine {
 public:
    Engine(const FieldConfig& cfg, const SolverOptions& options)
        : cfg_(cfg), options_(options), threads_(resolve_threads(options.threads)), stencil_(stencil_13()) {
        cfg_.validate();
        if (!(options_.rank_tolerance > 0.0)) throw std::invalid_argument("rank tolerance must be positive");
    }

    void process(const Equation& eq) {
        if (!eq.site.even_sum()) throw std::invalid_argument("equation site " + to_string(eq.site) + " is not in L");
        if (stats_.history.empty() || stats_.history.back().k != eq.k) stats_.history.push_back({eq.k, 0, 0, 0});
        ClusterStep& step = stats_.history.back();

        const std::size_t id = gather(eq, step);
        Cluster& c = clusters_[id];
        std::array<std::size_t, 13> base{};
        for (std::size_t i = 0; i < stencil_.size(); ++i) {
            const LatticePoint site = eq.site + stencil_[i];
            auto [it, fresh] = c.index.try_emplace(site, c.sites.size());
            if (fresh) {
                c.sites.push_back(site);
                owner_[site] = id;
            }
            base[i] = 4 * it->second;
        }

        const std::size_t dim = 4 * c.sites.size();
        Eigen::MatrixXcd rows = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), 4);
        std::size_t low = dim;
        for (std::size_t i = 0; i < stencil_.size(); ++i) {
            rows.middleRows<4>(static_cast<Eigen::Index>(base[i])) = coupling(cfg_, eq.site, stencil_[i]).adjoint();
            low = std::min(low, base[i]);
        }
        std::array<double, 4> row_norm{};
        for (int a = 0; a < 4; ++a) row_norm[a] = rows.col(a).norm();

        low = orthogonalize(c, rows, base, low);

        const std::size_t record = records_.size();
        const int rank = finish(c, rows, row_norm, low, record);
        if (rank < 4 && !options_.allow_rank_deficient) throw RankDeficiency(eq.k, eq.site, rank);
        records_.push_back({eq.k, eq.site, rank, id, 0});
        c.records.push_back(record);
        step.added += 1;
        step.clusters_after = live_;
    }

    SolveResult finish_run() {
        SolveResult out;
        for (std::size_t i = 0; i < clusters_.size(); ++i) {
            if (alive_[i]) out.clusters.push_back(std::move(clusters_[i]));
        }
        out.records = std::move(records_);
        for (std::size_t ci = 0; ci < out.clusters.size(); ++ci) {
            const Cluster& c = out.clusters[ci];
            for (std::size_t vi = c.vectors.size(); vi-- > 0;) {
                ProjectorRecord& r = out.records[c.vectors[vi].record];
                r.cluster = ci;
                r.first_vector = vi;
            }
            for (std::size_t r : c.records) out.records[r].cluster = ci;
        }

        stats_.count = out.clusters.size();
        for (const Cluster& c : out.clusters) stats_.sizes.push_back(c.records.size());
        std::sort(stats_.sizes.begin(), stats_.sizes.end(), std::greater<>());
        out.table.clusters = std::move(stats_);
        out.table.field = cfg_;
        out.table.blocks = solution_blocks(out.clusters);
        return out;
    }

 private:
    // Finds the clusters touched by the stencil of `eq` and merges them into one; returns its id.
    std::size_t gather(const Equation& eq, ClusterStep& step) {
        std::vector<std::size_t> touched;
        for (const auto& s : stencil_) {
            const auto it = owner_.find(eq.site + s);
            if (it != owner_.end()) touched.push_back(it->second);
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

        if (touched.empty()) {
            clusters_.emplace_back();
            alive_.push_back(true);
            ++live_;
            return clusters_.size() - 1;
        }
        std::size_t target = touched.front();
        for (std::size_t id : touched) {
            if (clusters_[id].vectors.size() > clusters_[target].vectors.size()) target = id;
        }
        for (std::size_t id : touched) {
            if (id == target) continue;
            absorb(clusters_[target], target, clusters_[id]);
            alive_[id] = false;
            --live_;
            ++step.merges;
        }
        return target;
    }

    void absorb(Cluster& into, std::size_t into_id, Cluster& from) {
        const std::size_t shift = 4 * into.sites.size();
        for (const LatticePoint& site : from.sites) {
            into.index.emplace(site, into.sites.size());
            into.sites.push_back(site);
            owner_[site] = into_id;
        }
        for (RangeVector& v : from.vectors) {
            v.begin += shift;
            into.vectors.push_back(std::move(v));
        }
        into.records.insert(into.records.end(), from.records.begin(), from.records.end());
        from = Cluster{};
    }

    // Two classical Gram-Schmidt sweeps of the rows against the cluster's vectors. Returns the
    // lowest coordinate the remainders can occupy.
    std::size_t orthogonalize(const Cluster& c, Eigen::MatrixXcd& rows, const std::array<std::size_t, 13>& base,
                              std::size_t low) {
        const std::size_t count = c.vectors.size();
        if (count == 0) return low;
        const std::size_t dim = static_cast<std::size_t>(rows.rows());

        // The rows live on 13 sites, so the first coefficients need only those coordinates.
        Eigen::MatrixXcd coeff = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(count), 4);
        std::vector<char> active(count, 0);
        for (std::size_t vi = 0; vi < count; ++vi) {
            const RangeVector& v = c.vectors[vi];
            const std::size_t end = v.begin + static_cast<std::size_t>(v.data.size());
            for (std::size_t at : base) {
                if (at < v.begin || at >= end) continue;
                coeff.row(static_cast<Eigen::Index>(vi)).noalias() +=
                    v.data.segment<4>(static_cast<Eigen::Index>(at - v.begin)).adjoint() *
                    rows.middleRows<4>(static_cast<Eigen::Index>(at));
            }
            if (!coeff.row(static_cast<Eigen::Index>(vi)).isZero(0.0)) {
                active[vi] = 1;
                low = std::min(low, v.begin);
            }
        }
        subtract(c, rows, coeff, active, low, dim);

        // Second sweep over every vector that reaches the remainder's range.
        std::size_t work = 0;
        for (const RangeVector& v : c.vectors) work += static_cast<std::size_t>(v.data.size());
        coeff.setZero();
        const unsigned threads = work * 4 >= kParallelWork ? threads_ : 1;
        parallel_for(count, threads, [&](std::size_t first, std::size_t last) {
            for (std::size_t vi = first; vi < last; ++vi) {
                const RangeVector& v = c.vectors[vi];
                const std::size_t lo = std::max(v.begin, low);
                const std::size_t hi = std::min(v.begin + static_cast<std::size_t>(v.data.size()), dim);
                if (lo >= hi) continue;
                const auto n = static_cast<Eigen::Index>(hi - lo);
                coeff.row(static_cast<Eigen::Index>(vi)).noalias() =
                    v.data.segment(static_cast<Eigen::Index>(lo - v.begin), n).adjoint() *
                    rows.middleRows(static_cast<Eigen::Index>(lo), n);
            }
        });
        std::size_t low2 = low;
        for (std::size_t vi = 0; vi < count; ++vi) {
            active[vi] = coeff.row(static_cast<Eigen::Index>(vi)).isZero(0.0) ? 0 : 1;
            if (active[vi]) low2 = std::min(low2, c.vectors[vi].begin);
        }
        subtract(c, rows, coeff, active, low2, dim);
        return low2;
    }

    // rows -= Q coeff over [low, dim), split by coordinate so every entry sees the same order.
    void subtract(const Cluster& c, Eigen::MatrixXcd& rows, const Eigen::MatrixXcd& coeff,
                  const std::vector<char>& active, std::size_t low, std::size_t dim) const {
        std::size_t work = 0;
        for (std::size_t vi = 0; vi < active.size(); ++vi) {
            if (active[vi]) work += static_cast<std::size_t>(c.vectors[vi].data.size());
        }
        const std::size_t span = dim - low;
        const unsigned threads = work * 4 >= kParallelWork ? threads_ : 1;
        parallel_for(span, threads, [&](std::size_t first, std::size_t last) {
            const std::size_t a = low + first;
            const std::size_t b = low + last;
            for (std::size_t vi = 0; vi < active.size(); ++vi) {
                if (!active[vi]) continue;
                const RangeVector& v = c.vectors[vi];
                const std::size_t lo = std::max(v.begin, a);
                const std::size_t hi = std::min(v.begin + static_cast<std::size_t>(v.data.size()), b);
                if (lo >= hi) continue;
                const auto n = static_cast<Eigen::Index>(hi - lo);
                rows.middleRows(static_cast<Eigen::Index>(lo), n).noalias() -=
                    v.data.segment(static_cast<Eigen::Index>(lo - v.begin), n) *
                    coeff.row(static_cast<Eigen::Index>(vi));
            }
        });
    }

    // Orthonormalizes the four remainders among themselves and stores the independent ones.
    int finish(Cluster& c, Eigen::MatrixXcd& rows, const std::array<double, 4>& row_norm, std::size_t low,
               std::size_t record) {
        const std::size_t dim = static_cast<std::size_t>(rows.rows());
        const auto n = static_cast<Eigen::Index>(dim - low);
        std::vector<Eigen::Index> kept;
        for (int a = 0; a < 4; ++a) {
            auto r = rows.col(a).segment(static_cast<Eigen::Index>(low), n);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index b : kept) {
                    auto q = rows.col(b).segment(static_cast<Eigen::Index>(low), n);
                    r -= q * q.dot(r);
                }
            }
            const double norm = r.norm();
            if (norm <= options_.rank_tolerance * row_norm[a] || norm == 0.0) continue;
            r /= norm;
            kept.push_back(a);
        }
        for (Eigen::Index a : kept) {
            const auto col = rows.col(a);
            std::size_t first = low;
            while (first < dim && col[static_cast<Eigen::Index>(first)] == Complex(0.0, 0.0)) ++first;
            first = align_down(first);
            RangeVector v;
            v.begin = first;
            v.data = col.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(dim - first));
            v.record = record;
            c.vectors.push_back(std::move(v));
        }
        return static_cast<int>(kept.size());
    }

    std::vector<SolutionBlock> solution_blocks(const std::vector<Cluster>& clusters) const {
        std::vector<SolutionBlock> blocks;
        const Cluster* home = nullptr;
        std::size_t origin = 0;
        for (const Cluster& c : clusters) {
            if (auto at = c.site_index(kOrigin)) {
                home = &c;
                origin = *at;
            }
        }
        if (home == nullptr) {
            blocks.push_back({0, kOrigin, SpinorBlock::Identity()});
            return blocks;
        }
        std::vector<SpinorBlock> s(home->sites.size(), SpinorBlock::Zero());
        s[origin] = SpinorBlock::Identity();
        for (const RangeVector& v : home->vectors) {
            const Bispinor at_origin = home->value(v, origin);
            if (at_origin.isZero(0.0)) continue;
            const std::size_t first = v.begin / 4;
            for (std::size_t j = 0; j < static_cast<std::size_t>(v.data.size()) / 4; ++j) {
                s[first + j].noalias() -= v.data.segment<4>(static_cast<Eigen::Index>(4 * j)) * at_origin.adjoint();
            }
        }
        blocks.reserve(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) {
            blocks.push_back({index_of(home->sites[j]), home->sites[j], s[j]});
        }
        std::sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
        return blocks;
    }

    FieldConfig cfg_;
    SolverOptions options_;
    unsigned threads_;
    std::vector<LatticePoint> stencil_;
    std::vector<Cluster> clusters_;
    std::vector<bool> alive_;
    std::size_t live_ = 0;
    std::unordered_map<LatticePoint, std::size_t, LatticePointHash> owner_;
    std::vector<ProjectorRecord> records_;
    ClusterStats stats_;
};

}  // namespace

SolveResult run_equations(const FieldConfig& cfg, std::span<const Equation> equations, const SolverOptions& options) {
    Engine engine(cfg, options);
    for (const Equation& eq : equations) engine.process(eq);
    return engine.finish_run();
}

SolveResult run_model(const FieldConfig& cfg, const ModelSpec& model, const SolverOptions& options) {
    const std::vector<Equation> eqs = equations_of(model);
    SolveResult out = run_equations(cfg, eqs, options);
    out.table.model_name = model.name;
    out.table.k_list = model.k_list;
    out.table.region = model.region;
    return out;
}

// Verification

bool VerificationReport::within(double tolerance) const noexcept {
    return max_rank_trace_error <= tolerance && max_idempotency <= tolerance && max_pair_overlap <= tolerance &&
           (rank_deficient > 0 || max_trace_error <= tolerance);
}

namespace {

struct RecordSpan {
    std::size_t record;
    std::size_t first;  // position in the cluster
    int rank;
};

// Vectors [first, first + count) of a cluster, zero padded into rows [low, high).
Eigen::MatrixXcd pack(const Cluster& c, std::size_t first, std::size_t count, std::size_t low, std::size_t high) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(high - low), static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        const RangeVector& v = c.vectors[first + i];
        const std::size_t lo = std::max(v.begin, low);
        const std::size_t hi = std::min(v.begin + static_cast<std::size_t>(v.data.size()), high);
        if (lo >= hi) continue;
        out.col(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(lo - low), static_cast<Eigen::Index>(hi - lo)) =
            v.data.segment(static_cast<Eigen::Index>(lo - v.begin), static_cast<Eigen::Index>(hi - lo));
    }
    return out;
}

std::pair<std::size_t, std::size_t> row_range(const Cluster& c, std::size_t first, std::size_t count) {
    std::size_t low = SIZE_MAX, high = 0;
    for (std::size_t i = first; i < first + count; ++i) {
        low = std::min(low, c.vectors[i].begin);
        high = std::max(high, c.vectors[i].begin + static_cast<std::size_t>(c.vectors[i].data.size()));
    }
    return {low, high};
}

double pair_residual(const Eigen::MatrixXcd& ga, const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& gb) {
    // ||rho_a rho_b||_F^2 = tr(G_a X G_b X^dagger) with X = V_a^dagger V_b
    const double t = (ga * x * gb * x.adjoint()).trace().real();
    return std::sqrt(std::max(0.0, t));
}

}  // namespace

VerificationReport verify_projectors(const SolveResult& result, const VerifyOptions& options) {
    VerificationReport rep;
    rep.records = result.records.size();
    const unsigned threads = resolve_threads(options.threads);

    std::size_t same_cluster_pairs = 0;
    for (std::size_t ci = 0; ci < result.clusters.size(); ++ci) {
        const Cluster& c = result.clusters[ci];
        std::vector<RecordSpan> spans;
        for (std::size_t r : c.records) {
            const ProjectorRecord& rec = result.records[r];
            spans.push_back({r, rec.first_vector, rec.rank});
        }
        std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        same_cluster_pairs += spans.size() * (spans.size() - 1) / 2;

        // Per record Gram matrices.
        std::vector<Eigen::MatrixXcd> gram(spans.size());
        for (std::size_t i = 0; i < spans.size(); ++i) {
            const RecordSpan& sp = spans[i];
            if (sp.rank == 0) {
                gram[i] = Eigen::MatrixXcd::Zero(0, 0);
            } else {
                const auto [lo, hi] = row_range(c, sp.first, static_cast<std::size_t>(sp.rank));
                const Eigen::MatrixXcd v = pack(c, sp.first, static_cast<std::size_t>(sp.rank), lo, hi);
                gram[i] = v.adjoint() * v;
            }
            const double tr = gram[i].trace().real();
            const auto id = Eigen::MatrixXcd::Identity(sp.rank, sp.rank);
            const Eigen::MatrixXcd e = gram[i] - id;
            const double idem = std::sqrt(std::max(0.0, (e * gram[i] * e * gram[i]).trace().real()));
            rep.max_rank_trace_error = std::max(rep.max_rank_trace_error, std::abs(tr - sp.rank));
            rep.max_idempotency = std::max(rep.max_idempotency, idem);
            if (sp.rank < 4) {
                ++rep.rank_deficient;
            } else {
                rep.max_trace_error = std::max(rep.max_trace_error, std::abs(tr - 4.0));
            }
        }
        if (!options.pairs || spans.size() < 2) continue;

        // A rank-0 record has no vectors and cannot overlap anything.
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            if (spans[i].rank > 0) keep.push_back(i);
        }
        std::vector<RecordSpan> live;
        std::vector<Eigen::MatrixXcd> live_gram;
        for (std::size_t i : keep) {
            live.push_back(spans[i]);
            live_gram.push_back(gram[i]);
        }
        rep.pairs_checked += spans.size() * (spans.size() - 1) / 2;
        spans = std::move(live);
        gram = std::move(live_gram);
        if (spans.size() < 2) continue;

        // Blocks of whole records, about 64 vectors each.
        std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [first span, last span)
        for (std::size_t i = 0; i < spans.size();) {
            std::size_t j = i, width = 0;
            while (j < spans.size() && (width == 0 || width + static_cast<std::size_t>(spans[j].rank) <= 64)) {
                width += static_cast<std::size_t>(spans[j].rank);
                ++j;
            }
            blocks.push_back({i, j});
            i = j;
        }
        auto vector_range = [&](std::size_t b) {
            const std::size_t first = spans[blocks[b].first].first;
            const auto& last = spans[blocks[b].second - 1];
            return std::pair<std::size_t, std::size_t>{first, last.first + static_cast<std::size_t>(last.rank) - first};
        };

        std::vector<double> worst(blocks.size(), 0.0);
        parallel_for(blocks.size(), threads, [&](std::size_t b0, std::size_t b1) {
            for (std::size_t bi = b0; bi < b1; ++bi) {
                const auto [fi, ni] = vector_range(bi);
                if (ni == 0) continue;
                const auto [li, hi] = row_range(c, fi, ni);
                const Eigen::MatrixXcd pi = pack(c, fi, ni, li, hi);
                for (std::size_t bj = 0; bj <= bi; ++bj) {
                    const auto [fj, nj] = vector_range(bj);
                    if (nj == 0) continue;
                    const auto [lj, hj] = row_range(c, fj, nj);
                    const std::size_t lo = std::max(li, lj);
                    const std::size_t hi2 = std::min(hi, hj);
                    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(ni));
                    if (lo < hi2) {
                        const Eigen::MatrixXcd pj = pack(c, fj, nj, lo, hi2);
                        x.noalias() = pj.adjoint() * pi.middleRows(static_cast<Eigen::Index>(lo - li), static_cast<Eigen::Index>(hi2 - lo));
                    }
                    for (std::size_t sa = blocks[bj].first; sa < blocks[bj].second; ++sa) {
                        for (std::size_t sb = blocks[bi].first; sb < blocks[bi].second; ++sb) {
                            if (bi == bj && sb <= sa) continue;
                            const Eigen::MatrixXcd xab = x.block(static_cast<Eigen::Index>(spans[sa].first - fj),
                                                                 static_cast<Eigen::Index>(spans[sb].first - fi),
                                                                 spans[sa].rank, spans[sb].rank);
                            worst[bi] = std::max(worst[bi], pair_residual(gram[sa], xab, gram[sb]));
                        }
                    }
                }
            }
        });
        for (double w : worst) rep.max_pair_overlap = std::max(rep.max_pair_overlap, w);
    }
    const std::size_t total_pairs = rep.records < 2 ? 0 : rep.records * (rep.records - 1) / 2;
    rep.disjoint_pairs = total_pairs - same_cluster_pairs;
    return rep;
}

// Residuals

ResidualMap residual_map(const FieldConfig& cfg, const SolutionTable& table) {
    const auto stencil = stencil_13();
    std::unordered_map<LatticePoint, const SpinorBlock*, LatticePointHash> blocks;
    for (const SolutionBlock& b : table.blocks) blocks.emplace(b.site, &b.s);

    std::map<std::int64_t, LatticePoint> targets;
    for (const SolutionBlock& b : table.blocks) {
        for (const auto& s : stencil) {
            const LatticePoint n = b.site - s;
            targets.emplace(index_of(n), n);
        }
    }
    ResidualMap out;
    out.reserve(targets.size());
    for (const auto& [i, n] : targets) {
        SpinorBlock sum = SpinorBlock::Zero();
        for (const auto& s : stencil) {
            const auto it = blocks.find(n + s);
            if (it != blocks.end()) sum.noalias() += coupling(cfg, n, s) * *it->second;
        }
        out.emplace(n, sum);
    }
    return out;
}

double max_relative_residual(const FieldConfig& cfg, const ResidualMap& residuals, std::span<const Equation> equations) {
    const auto stencil = stencil_13();
    double worst = 0.0;
    for (const Equation& eq : equations) {
        const auto it = residuals.find(eq.site);
        if (it == residuals.end()) continue;
        double scale = 0.0;
        for (const auto& s : stencil) scale = std::max(scale, coupling(cfg, eq.site, s).norm());
        worst = std::max(worst, it->second.norm() / scale);
    }
    return worst;
}

}  // namespace estc
