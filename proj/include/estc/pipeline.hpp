#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "estc/config.hpp"
#include "estc/observables.hpp"

namespace estc {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// An artifact no longer matches the digest recorded in the manifest.
class DigestError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

enum class Stage { schedule = 0, solve, verify, residual, observe };

inline constexpr std::array<Stage, 5> kStages{Stage::schedule, Stage::solve, Stage::verify, Stage::residual,
                                              Stage::observe};

std::string_view stage_name(Stage s);
/// Throws ConfigError for an unknown name.
Stage stage_from_name(std::string_view name);
/// File written by a stage, relative to the output directory.
std::string_view stage_artifact(Stage s);

inline constexpr std::string_view kManifestFile = "manifest.json";

/// Contents of manifest.json. `doc` holds the config echo, versions, per-stage timing, cluster
/// statistics, verification maxima and the SHA-256 digest of every artifact.
struct RunManifest {
    nlohmann::json doc;
    std::filesystem::path dir;

    /// 0 when every check passed, 2 otherwise.
    int exit_code() const;
    RunConfig config() const;
};

/// Runs every stage and writes model.csv, solution.estc, verify.json, residual.json,
/// observe.json and manifest.json into cfg.output_dir. RankDeficiency, ConfigError and I/O
/// errors propagate.
RunManifest pipeline(const RunConfig& cfg);

/// Reruns `from` and every later stage of the run in `dir`. With a new configuration the
/// start moves earlier when a setting read by an earlier stage changed: field, model, lattice
/// tables, rank tolerance or rank-deficient mode restart at schedule; the projector tolerance
/// and pair check at verify; the residual tolerance at residual. Every artifact read by the
/// rerun must match its recorded digest, otherwise DigestError.
RunManifest resume(const std::filesystem::path& dir, Stage from, const std::optional<RunConfig>& changed = {});

/// First stage whose inputs differ between two configurations; nullopt when none does.
std::optional<Stage> first_changed_stage(const RunConfig& before, const RunConfig& after);

RunManifest load_manifest(const std::filesystem::path& dir);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Report fields of an observable summary; amplitude-dependent entries are null when U_E = 0.
nlohmann::json observables_json(const ObservableSummary& s);

/// Serializes a report with every double rounded to 12 significant digits.
std::string report_text(const nlohmann::json& report);

}  // namespace estc
