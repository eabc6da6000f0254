#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "estc/dirac_coupling.hpp"
#include "estc/fractal_scheduler.hpp"

namespace estc {

/// Invalid or unreadable configuration.
class ConfigError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Either a p-level or an explicit family list over a region.
struct ModelChoice {
    std::optional<int> p;
    std::vector<std::int64_t> k_list;
    Region region = kRegion42;

    /// Throws ConfigError for p outside 0..3 or an invalid family list.
    ModelSpec build() const;
    ModelSpec build(std::span<const PointLattice> lattices) const;
    nlohmann::json to_json() const;
    static ModelChoice from_json(const nlohmann::json& j);
    bool operator==(const ModelChoice&) const = default;
};

struct Tolerances {
    double rank = 1e-8;       // rank decision, relative to the incoming row norm
    double projector = 1e-9;  // trace, idempotency and pair overlap
    double residual = 1e-8;   // V_S on L', relative to the equation scale
    double dual_path = 1e-8;  // the two U_D assemblies, relative
};

struct RunConfig {
    nlohmann::json field_source;  // the "field" object as written
    FieldConfig field;
    ModelChoice model;
    Tolerances tolerances;
    bool allow_rank_deficient = false;
    bool pairs = true;
    unsigned threads = 1;
    std::filesystem::path output_dir = "estc-run";
    std::uint64_t seed = 1;
    std::optional<Bispinor> a0;
    int grid = -1;  // -1 skips the quadrature check, 0 picks the default size
    std::optional<std::filesystem::path> lattice_tables;  // replaces the shipped center tables

    /// Echo with every default filled in; stable key order.
    nlohmann::json to_json() const;
};

/// FieldConfig from {"omega", "q", "q4", "amplitudes" | "standing_wave_preset"}.
FieldConfig field_from_json(const nlohmann::json& j);
nlohmann::json field_to_json(const FieldConfig& cfg);

/// Reads a run configuration. Either a "field" object or top-level field keys are accepted.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies ESTC_THREADS and ESTC_OUTPUT_DIR when set.
void apply_environment(RunConfig& cfg);

/// Center tables as {"stage2": [[n1, n2, n3], ...], "stage3": ..., "stage4": ...}.
nlohmann::json center_tables_json(const CenterTables& tables);

/// Builds the first cycle from a center-table file. The tables must pass the same length,
/// checksum and reference-center checks as the shipped ones; any mismatch is a ConfigError.
std::vector<PointLattice> load_cycle1(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);

/// "re,im,re,im,re,im,re,im"
Bispinor parse_spinor(const std::string& text);

/// Rounds to 12 significant digits, the precision of every emitted report.
double report_round(double x);
nlohmann::json complex_json(const Complex& z);
nlohmann::json block_json(const SpinorBlock& m);
nlohmann::json spinor_json(const Bispinor& v);

}  // namespace estc
