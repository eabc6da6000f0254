#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "estc/dirac_coupling.hpp"
#include "estc/fractal_scheduler.hpp"

namespace estc {

/// Finitely supported element of the amplitude space: one bispinor per lattice point.
/// Entries are kept sorted by global index and never hold an all-zero bispinor.
class SparseMultispinor {
 public:
    SparseMultispinor() = default;

    /// Adds `value` at `site`, merging with an existing entry.
    void add(const LatticePoint& site, const Bispinor& value);

    Bispinor at(const LatticePoint& site) const;
    const std::vector<std::pair<LatticePoint, Bispinor>>& entries() const noexcept { return entries_; }
    std::size_t support_size() const noexcept { return entries_.size(); }
    double norm() const;

    /// sum_n a(n)^dagger b(n)
    friend Complex inner(const SparseMultispinor& a, const SparseMultispinor& b);

 private:
    std::vector<std::pair<LatticePoint, Bispinor>> entries_;
};

/// The four rows of equation n: row a has w_a(n + s)_b = conj(V(n, s)_ab), so that
/// <w_a, C> = 0 for every a exactly when sum_s V(n, s) c(n + s) = 0.
std::array<SparseMultispinor, 4> equation_rows(const FieldConfig& cfg, const LatticePoint& n);

/// Raised when an equation contributes fewer than four independent directions and the caller
/// did not opt into reduced rank.
class RankDeficiency : public std::runtime_error {
 public:
    RankDeficiency(std::int64_t k, const LatticePoint& site, int rank);

    std::int64_t k() const noexcept { return k_; }
    const LatticePoint& site() const noexcept { return site_; }
    int rank() const noexcept { return rank_; }

 private:
    std::int64_t k_;
    LatticePoint site_;
    int rank_;
};

struct SolverOptions {
    double rank_tolerance = 1e-8;  // remainder norm relative to the incoming row norm
    bool allow_rank_deficient = false;
    unsigned threads = 1;          // 0 = hardware concurrency
};

/// Dense segment of a vector in its cluster's local coordinates. Coordinate 4*j + b is
/// component b at the cluster's j-th site; everything outside [begin, begin + size) is zero.
struct RangeVector {
    std::size_t begin = 0;
    Eigen::VectorXcd data;
    std::size_t record = 0;
};

/// A maximal set of equations whose projectors share lattice points.
struct Cluster {
    std::vector<LatticePoint> sites;
    std::vector<RangeVector> vectors;
    std::vector<std::size_t> records;

    /// Local site number of `n`, if the cluster covers it.
    std::optional<std::size_t> site_index(const LatticePoint& n) const;
    Bispinor value(const RangeVector& v, std::size_t site) const;

    std::unordered_map<LatticePoint, std::size_t, LatticePointHash> index;
};

/// rho_k(m) realized as `rank` orthonormal vectors stored in one cluster. Its F-domain is the
/// support of those vectors.
struct ProjectorRecord {
    std::int64_t k = 0;
    LatticePoint site;
    int rank = 0;
    std::size_t cluster = 0;       // index into SolveResult::clusters
    std::size_t first_vector = 0;  // position of the first vector in that cluster
};

struct SolutionBlock {
    std::int64_t index = 0;
    LatticePoint site;
    SpinorBlock s;
};

struct ClusterStats {
    std::size_t count = 0;
    std::vector<std::size_t> sizes;  // equations per final cluster, largest first
    std::vector<ClusterStep> history;
};

/// Blocks S(n) of the fundamental solution, sorted by global index, with run metadata.
struct SolutionTable {
    LatticePoint origin = kOrigin;
    std::vector<SolutionBlock> blocks;
    FieldConfig field;
    std::string model_name;
    std::vector<std::int64_t> k_list;
    Region region = kRegion42;
    ClusterStats clusters;

    const SpinorBlock* find(const LatticePoint& n) const;
};

struct SolveResult {
    std::vector<ProjectorRecord> records;
    std::vector<Cluster> clusters;
    SolutionTable table;

    /// Vector `i` (0 <= i < rank) of a record as a sparse multispinor.
    SparseMultispinor vector_of(const ProjectorRecord& r, int i) const;
};

/// Processes the model's equations in fractal order (k ascending, then global index):
/// each equation's rows are orthogonalized against every prior vector of the cluster it joins
/// (two classical Gram-Schmidt sweeps), then the remainders are orthonormalized among
/// themselves. S(n) = U delta(n - n_o) - sum_v v(n) v(n_o)^dagger is emitted for every site of
/// the cluster containing n_o; the table holds only S(n_o) = U when no equation touches n_o.
SolveResult run_model(const FieldConfig& cfg, const ModelSpec& model, const SolverOptions& options = {});

/// Same as run_model with an explicit processing order.
SolveResult run_equations(const FieldConfig& cfg, std::span<const Equation> equations, const SolverOptions& options = {});

struct VerifyOptions {
    bool pairs = true;  // pairwise orthogonality of records sharing a cluster
    unsigned threads = 1;
};

struct VerificationReport {
    std::size_t records = 0;
    std::size_t rank_deficient = 0;
    double max_trace_error = 0;        // |tr rho - 4| over full-rank records
    double max_rank_trace_error = 0;   // |tr rho - rank| over all records
    double max_idempotency = 0;        // ||rho^2 - rho||_F
    double max_pair_overlap = 0;       // ||rho_a rho_b||_F over records of one cluster
    std::size_t pairs_checked = 0;
    std::size_t disjoint_pairs = 0;    // pairs in different clusters, zero by construction

    bool within(double tolerance) const noexcept;
};

VerificationReport verify_projectors(const SolveResult& result, const VerifyOptions& options = {});

/// Hash map from lattice point to the residual block V_S(n) = sum_s V(n, s) S(n + s).
using ResidualMap = std::unordered_map<LatticePoint, SpinorBlock, LatticePointHash>;

/// V_S(n) for every n whose stencil touches a stored block.
ResidualMap residual_map(const FieldConfig& cfg, const SolutionTable& table);

/// Largest ||V_S(n)||_F / max_s ||V(n, s)||_F over the given equation sites.
double max_relative_residual(const FieldConfig& cfg, const ResidualMap& residuals, std::span<const Equation> equations);

}  // namespace estc
