#include "estc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include "estc/observables.hpp"
#include "estc/parallel.hpp"
#include "estc/solution_io.hpp"

namespace estc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;
constexpr int kAmplitudeProbes = 16;

json rounded(const json& j) {
    if (j.is_number_float()) return report_round(j.get<double>());
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto& v : out) v = rounded(v);
        return out;
    }
    return j;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
}

json point_json(const LatticePoint& n) { return {n[0], n[1], n[2], n[3]}; }

double min_eigenvalue(const SpinorBlock& m) {
    const SpinorBlock h = 0.5 * (m + m.adjoint());
    return Eigen::SelfAdjointEigenSolver<SpinorBlock>(h, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

json versions_json() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    std::ostringstream js;
    js << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.' << NLOHMANN_JSON_VERSION_PATCH;
    return {{"estc", std::string(kToolVersion)},
            {"manifest", kManifestVersion},
            {"solution_format", kSolutionFormatVersion},
            {"eigen", eigen.str()},
            {"nlohmann_json", js.str()},
            {"openssl", OpenSSL_version(OPENSSL_VERSION)}};
}

class Run {
 public:
    Run(RunConfig cfg, json doc) : cfg_(std::move(cfg)), doc_(std::move(doc)), dir_(cfg_.output_dir) {
        threads_ = resolve_threads(cfg_.threads);
        doc_["manifest_version"] = kManifestVersion;
        doc_["versions"] = versions_json();
        doc_["config"] = cfg_.to_json();
        for (Stage s : kStages) {
            json& t = doc_["timing"][std::string(stage_name(s))];
            if (!t.is_object()) t = {{"seconds", 0.0}};
            t["ran"] = false;
        }
    }

    RunManifest execute(Stage from) {
        fs::create_directories(dir_);
        for (Stage s : kStages) {
            if (s < from) continue;
            const auto start = std::chrono::steady_clock::now();
            switch (s) {
                case Stage::schedule: schedule(); break;
                case Stage::solve: solve(); break;
                case Stage::verify: verify(); break;
                case Stage::residual: residual(); break;
                case Stage::observe: observe(); break;
            }
            const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
            const std::string name(stage_name(s));
            doc_["timing"][name] = {{"seconds", took.count()}, {"ran", true}};
            doc_["digests"][std::string(stage_artifact(s))] = sha256_file(dir_ / stage_artifact(s));
        }
        finish_status();
        write_file(dir_ / kManifestFile, report_text(doc_));
        return {doc_, dir_};
    }

 private:
    void build_model() {
        if (model_) return;
        if (cfg_.lattice_tables) {
            const auto lattices = load_cycle1(*cfg_.lattice_tables);
            model_ = cfg_.model.build(lattices);
        } else {
            model_ = cfg_.model.build();
        }
        equations_ = equations_of(*model_);
    }

    const SolveResult& solution() {
        if (!solved_) {
            SolutionFile f = read_solution(dir_ / stage_artifact(Stage::solve));
            if (!f.has_projectors) throw SolutionFormatError("solution file holds no projectors");
            solved_ = std::move(f.result);
        }
        return *solved_;
    }

    void schedule() {
        build_model();
        std::ostringstream csv;
        csv << "k,index,n1,n2,n3,n4\n";
        for (const Equation& e : equations_) {
            csv << e.k << ',' << index_of(e.site) << ',' << e.site[0] << ',' << e.site[1] << ',' << e.site[2] << ','
                << e.site[3] << '\n';
        }
        write_file(dir_ / stage_artifact(Stage::schedule), csv.str());
        doc_["model"] = {{"name", model_->name},
                         {"families", model_->k_list.size()},
                         {"equations", equations_.size()},
                         {"region", {{"lower", point_json(model_->region.lower)}, {"upper", point_json(model_->region.upper)}}}};
    }

    void solve() {
        build_model();
        SolverOptions opts;
        opts.rank_tolerance = cfg_.tolerances.rank;
        opts.allow_rank_deficient = cfg_.allow_rank_deficient;
        opts.threads = threads_;
        solved_ = run_model(cfg_.field, *model_, opts);
        write_solution(dir_ / stage_artifact(Stage::solve), *solved_, cfg_.model.to_json(), false);

        const ClusterStats& c = solved_->table.clusters;
        std::size_t deficient = 0;
        std::size_t vectors = 0;
        for (const ProjectorRecord& r : solved_->records) {
            deficient += r.rank < 4 ? 1 : 0;
            vectors += static_cast<std::size_t>(r.rank);
        }
        doc_["clusters"] = {{"count", c.count},
                            {"largest", c.sizes.empty() ? 0 : c.sizes.front()},
                            {"sizes", c.sizes},
                            {"vectors", vectors},
                            {"rank_deficient_records", deficient},
                            {"solution_blocks", solved_->table.blocks.size()}};
    }

    void verify() {
        VerifyOptions opts;
        opts.pairs = cfg_.pairs;
        opts.threads = threads_;
        const VerificationReport v = verify_projectors(solution(), opts);
        const double tol = cfg_.tolerances.projector;
        json report = {{"records", v.records},
                       {"rank_deficient", v.rank_deficient},
                       {"max_trace_error", v.max_trace_error},
                       {"max_rank_trace_error", v.max_rank_trace_error},
                       {"max_idempotency", v.max_idempotency},
                       {"max_pair_overlap", v.max_pair_overlap},
                       {"pairs_checked", v.pairs_checked},
                       {"disjoint_pairs", v.disjoint_pairs},
                       {"tolerance", tol},
                       {"pass", v.within(tol)}};
        write_file(dir_ / stage_artifact(Stage::verify), report_text(report));
        doc_["verification"]["projectors"] = report;
    }

    void residual() {
        build_model();
        const SolutionTable& table = solution().table;
        const ResidualMap residuals = residual_map(cfg_.field, table);
        std::unordered_set<LatticePoint, LatticePointHash> inside;
        for (const Equation& e : equations_) inside.insert(e.site);
        std::vector<Equation> boundary;
        for (const auto& [n, block] : residuals) {
            if (!inside.count(n)) boundary.push_back({-1, n});
        }
        std::sort(boundary.begin(), boundary.end(),
                  [](const Equation& a, const Equation& b) { return index_of(a.site) < index_of(b.site); });
        const double max_inside = max_relative_residual(cfg_.field, residuals, equations_);
        const double max_boundary = max_relative_residual(cfg_.field, residuals, boundary);
        const double tol = cfg_.tolerances.residual;
        json report = {{"equation_sites", equations_.size()},
                       {"residual_sites", residuals.size()},
                       {"max_relative_residual", max_inside},
                       {"max_boundary_relative_residual", max_boundary},
                       {"tolerance", tol},
                       {"pass", max_inside <= tol}};
        write_file(dir_ / stage_artifact(Stage::residual), report_text(report));
        doc_["verification"]["residual"] = report;
    }

    void observe() {
        const SolutionTable& table = solution().table;
        ObservableOptions opts;
        opts.a0 = cfg_.a0;
        opts.grid = cfg_.grid;
        opts.threads = threads_;
        ObservableSummary s;
        try {
            s = summarize(table, cfg_.field, opts);
        } catch (const std::domain_error& e) {
            throw ConfigError(std::string("observables: ") + e.what());
        }

        const double tol = cfg_.tolerances.dual_path;
        json report = observables_json(s);
        report["a0_source"] = s.amplitude_defined ? json(cfg_.a0 ? "config" : "best") : json(nullptr);
        report["scale_probe"] = nullptr;
        report["random_probes"] = nullptr;
        if (s.amplitude_defined) {
            std::mt19937_64 rng(cfg_.seed);
            std::uniform_real_distribution<double> uni(-1.0, 1.0);
            std::uniform_real_distribution<double> mag(0.1, 10.0);
            const Complex lambda = std::polar(mag(rng), 3.141592653589793 * uni(rng));
            const double r_scaled = accuracy(s.ud, s.ue, Bispinor(lambda * s.a0));
            double probe_min = std::numeric_limits<double>::infinity();
            for (int i = 0; i < kAmplitudeProbes; ++i) {
                Bispinor a;
                for (int c = 0; c < 4; ++c) a[c] = Complex(uni(rng), uni(rng));
                try {
                    probe_min = std::min(probe_min, accuracy(s.ud, s.ue, a));
                } catch (const std::domain_error&) {
                }
            }
            report["scale_probe"] = {{"lambda", complex_json(lambda)}, {"r_scaled", r_scaled}, {"difference", std::abs(r_scaled - s.r)}};
            report["random_probes"] = {{"count", kAmplitudeProbes}, {"min_r", probe_min}};
        }
        const bool dual_ok = s.ud_term_mismatch <= tol;
        report["dual_path"] = {{"mismatch", s.ud_mismatch},
                               {"term_mismatch", s.ud_term_mismatch},
                               {"tolerance", tol},
                               {"pass", dual_ok}};
        report["pass"] = dual_ok;
        write_file(dir_ / stage_artifact(Stage::observe), report_text(report));
        doc_["observables"] = {{"r", report["r"]}, {"r_min", report["best"].is_null() ? json(nullptr) : report["best"]["r_min"]},
                               {"a0_source", report["a0_source"]}};
        doc_["verification"]["dual_path"] = report["dual_path"];
    }

    void finish_status() {
        json failed = json::array();
        for (const char* key : {"projectors", "residual", "dual_path"}) {
            const json& v = doc_["verification"][key];
            if (!v.is_object() || !v.value("pass", false)) failed.push_back(key);
        }
        doc_["status"] = {{"exit_code", failed.empty() ? 0 : 2}, {"failed", failed}};
    }

    RunConfig cfg_;
    json doc_;
    fs::path dir_;
    unsigned threads_ = 1;
    std::optional<ModelSpec> model_;
    std::vector<Equation> equations_;
    std::optional<SolveResult> solved_;
};

json subset(const RunConfig& c, Stage s) {
    const json j = c.to_json();
    switch (s) {
        case Stage::schedule: return {j["field"], j["model"], j["lattice_tables"]};
        case Stage::solve: return {j["tolerances"]["rank"], j["allow_rank_deficient"]};
        case Stage::verify: return {j["tolerances"]["projector"], j["pairs"]};
        case Stage::residual: return {j["tolerances"]["residual"]};
        case Stage::observe: return {j["tolerances"]["dual_path"], j["a0"], j["grid"], j["seed"]};
    }
    return nullptr;
}

}  // namespace

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::schedule: return "schedule";
        case Stage::solve: return "solve";
        case Stage::verify: return "verify";
        case Stage::residual: return "residual";
        case Stage::observe: return "observe";
    }
    return "";
}

Stage stage_from_name(std::string_view name) {
    for (Stage s : kStages) {
        if (stage_name(s) == name) return s;
    }
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::string_view stage_artifact(Stage s) {
    switch (s) {
        case Stage::schedule: return "model.csv";
        case Stage::solve: return "solution.estc";
        case Stage::verify: return "verify.json";
        case Stage::residual: return "residual.json";
        case Stage::observe: return "observe.json";
    }
    return "";
}

int RunManifest::exit_code() const { return doc.at("status").at("exit_code").get<int>(); }

RunConfig RunManifest::config() const { return parse_run_config(doc.at("config")); }

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 unavailable");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

json observables_json(const ObservableSummary& s) {
    json j;
    j["amplitude_defined"] = s.amplitude_defined;
    if (s.amplitude_defined) {
        j["a0"] = spinor_json(s.a0);
        j["r"] = s.r;
        j["best"] = {{"a0", spinor_json(s.best.a0)}, {"r_min", s.best.r_min}, {"range_rank", s.best.range_rank}};
        j["energy"] = complex_json(s.energy);
        j["beta"] = complex_json(s.beta);
    } else {
        for (const char* key : {"a0", "r", "best", "energy", "beta"}) j[key] = nullptr;
    }
    j["ue"] = block_json(s.ue);
    j["ud"] = block_json(s.ud);
    j["ud_residual"] = block_json(s.ud_residual);
    j["ud_mismatch"] = s.ud_mismatch;
    j["ud_term_scale"] = s.ud_term_scale;
    j["ud_term_mismatch"] = s.ud_term_mismatch;
    j["ue_min_eigenvalue"] = min_eigenvalue(s.ue);
    j["ud_min_eigenvalue"] = min_eigenvalue(s.ud);
    j["quadrature"] = nullptr;
    if (s.ue_grid) j["quadrature"] = {{"size", s.grid}, {"ue", block_json(*s.ue_grid)}, {"relative_error", s.ue_grid_error}};
    return j;
}

std::string report_text(const json& report) { return rounded(report).dump(2) + "\n"; }

RunManifest pipeline(const RunConfig& cfg) { return Run(cfg, json::object()).execute(Stage::schedule); }

std::optional<Stage> first_changed_stage(const RunConfig& before, const RunConfig& after) {
    for (Stage s : kStages) {
        if (subset(before, s) != subset(after, s)) return s;
    }
    return std::nullopt;
}

RunManifest load_manifest(const fs::path& dir) {
    RunManifest m;
    m.dir = dir;
    try {
        m.doc = load_json(dir / kManifestFile);
    } catch (const ConfigError& e) {
        throw IoError(e.what());
    }
    if (!m.doc.is_object() || m.doc.value("manifest_version", 0) != kManifestVersion || !m.doc.contains("config") ||
        !m.doc.contains("digests")) {
        throw IoError((dir / kManifestFile).string() + ": not a run manifest");
    }
    return m;
}

RunManifest resume(const fs::path& dir, Stage from, const std::optional<RunConfig>& changed) {
    RunManifest old = load_manifest(dir);
    const RunConfig before = old.config();
    RunConfig cfg = changed ? *changed : before;
    cfg.output_dir = dir;
    if (changed) {
        if (const auto s = first_changed_stage(before, cfg)) from = std::min(from, *s);
    }

    const json& digests = old.doc["digests"];
    for (Stage s : kStages) {
        if (s >= from) break;
        const std::string name(stage_artifact(s));
        const fs::path file = dir / name;
        if (!digests.contains(name)) throw DigestError(name + ": no recorded digest");
        if (!fs::exists(file)) throw DigestError(name + ": missing");
        if (sha256_file(file) != digests[name].get<std::string>()) throw DigestError(name + ": digest mismatch");
    }
    return Run(cfg, old.doc).execute(from);
}

}  // namespace estc
