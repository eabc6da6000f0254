#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "estc/config.hpp"
#include "estc/fractal_scheduler.hpp"
#include "estc/lattice_index.hpp"
#include "estc/observables.hpp"
#include "estc/pipeline.hpp"
#include "estc/projector_engine.hpp"
#include "estc/solution_io.hpp"

using namespace estc;
using nlohmann::json;

namespace {

constexpr int kExitVerification = 2;
constexpr int kExitRank = 3;
constexpr int kExitConfig = 4;

struct ConfigFlags {
    std::string config;
    int model = -1;
    unsigned threads = 1;
    CLI::Option* threads_opt = nullptr;
    bool allow_rank_deficient = false;

    void attach(CLI::App* app, bool solver) {
        app->add_option("--config", config, "Run configuration (JSON)");
        app->add_option("--model", model, "p-level model 0..3, overrides the configuration");
        threads_opt = app->add_option("--threads", threads, "Worker threads, 0 for all cores");
        if (solver) app->add_flag("--allow-rank-deficient", allow_rank_deficient, "Keep rank-deficient projectors");
    }

    RunConfig build() const {
        RunConfig cfg = config.empty() ? parse_run_config(json::object()) : load_run_config(config);
        apply_environment(cfg);
        if (model >= 0) {
            cfg.model = {};
            cfg.model.p = model;
            (void)cfg.model.build();
        }
        if (threads_opt && threads_opt->count()) cfg.threads = threads;
        if (allow_rank_deficient) cfg.allow_rank_deficient = true;
        return cfg;
    }
};

ModelSpec build_model(const RunConfig& cfg) {
    if (cfg.lattice_tables) return cfg.model.build(load_cycle1(*cfg.lattice_tables));
    return cfg.model.build();
}

SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    o.rank_tolerance = cfg.tolerances.rank;
    o.allow_rank_deficient = cfg.allow_rank_deficient;
    o.threads = cfg.threads;
    return o;
}

std::string number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json point_json(const LatticePoint& n) { return {n[0], n[1], n[2], n[3]}; }

json verification_json(const VerificationReport& v, double tol) {
    return {{"records", v.records},
            {"rank_deficient", v.rank_deficient},
            {"max_trace_error", v.max_trace_error},
            {"max_rank_trace_error", v.max_rank_trace_error},
            {"max_idempotency", v.max_idempotency},
            {"max_pair_overlap", v.max_pair_overlap},
            {"pairs_checked", v.pairs_checked},
            {"disjoint_pairs", v.disjoint_pairs},
            {"tolerance", tol},
            {"pass", v.within(tol)}};
}

struct ScanRange {
    double from = 0;
    double to = 0;
    double step = 0;
};

ScanRange parse_range(const std::string& text) {
    ScanRange r;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &r.from, &r.to, &r.step, &tail) != 3 || !(r.step > 0) ||
        r.to < r.from) {
        throw ConfigError("--q4 expects from:to:step with step > 0 and from <= to");
    }
    return r;
}

int cmd_index(const std::string& point, const CLI::Option* index_opt, std::int64_t index, const CLI::Option* dump_opt,
              std::int64_t dump) {
    if (!point.empty()) {
        try {
            std::cout << index_of(parse_point(point)) << '\n';
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (index_opt->count()) {
        if (index < 0) throw ConfigError("--index must be non-negative");
        std::cout << to_string(point_of(index)) << '\n';
    }
    if (dump_opt->count()) {
        if (dump < 0) throw ConfigError("--dump must be non-negative");
        std::cout << "index,n1,n2,n3,n4\n";
        for (std::int64_t i = 0; i < dump; ++i) {
            const LatticePoint n = point_of(i);
            std::cout << i << ',' << n[0] << ',' << n[1] << ',' << n[2] << ',' << n[3] << '\n';
        }
    }
    return 0;
}

int cmd_schedule(const ConfigFlags& flags, bool dump_lattices, bool verify, const std::string& dump_tables) {
    const RunConfig cfg = flags.build();
    if (!dump_tables.empty()) {
        std::ofstream out(dump_tables);
        out << center_tables_json(published_center_tables()).dump() << '\n';
        if (!out) throw IoError("cannot write " + dump_tables);
    }
    const std::vector<PointLattice> own = cfg.lattice_tables ? load_cycle1(*cfg.lattice_tables) : std::vector<PointLattice>{};
    const std::vector<PointLattice>& lattices = cfg.lattice_tables ? own : cycle1();
    if (dump_lattices) {
        std::cout << "u,k,stage,phase,c1,c2,c3,c4,p1,p2,p3,p4\n";
        for (const PointLattice& l : lattices) {
            std::cout << l.u << ',' << l.k << ',' << l.stage << ',' << l.phase;
            for (std::size_t a = 0; a < 4; ++a) std::cout << ',' << l.center[a];
            for (auto p : l.periods) std::cout << ',' << p;
            std::cout << '\n';
        }
        return 0;
    }
    const ModelSpec model = cfg.model.build(lattices);
    const ClusterHistory history = cluster_history(model);
    json report = {{"lattices", lattices.size()},
                   {"model", model.name},
                   {"families", model.k_list.size()},
                   {"k_list", model.k_list.size() <= 64 ? json(model.k_list) : json(nullptr)},
                   {"equations", model.equation_count()},
                   {"clusters", history.final_clusters},
                   {"largest_cluster", history.largest_cluster}};
    bool ok = true;
    if (verify) {
        const std::span<const PointLattice> first(lattices.data(), 14);
        const SeparationReport sep = verify_separation(first, Region{{-9, -9, -9, -9}, {10, 10, 10, 10}});
        json violations = json::array();
        for (std::size_t i = 0; i < sep.violations.size() && i < 20; ++i) {
            const auto& v = sep.violations[i];
            violations.push_back({{"a", point_json(v.a)}, {"b", point_json(v.b)}, {"u_a", v.u_a}, {"u_b", v.u_b}});
        }
        report["separation"] = {{"lattices", 14},
                                {"points", sep.points},
                                {"close_pairs", sep.close_pairs},
                                {"violations", sep.violations.size()},
                                {"examples", violations}};
        ok = sep.ok();
    }
    std::cout << report_text(report);
    return ok ? 0 : kExitVerification;
}

int cmd_solve(const ConfigFlags& flags, const std::string& out, bool compact) {
    const RunConfig cfg = flags.build();
    const ModelSpec model = build_model(cfg);
    const SolveResult res = run_model(cfg.field, model, solver_options(cfg));
    write_solution(out, res, cfg.model.to_json(), compact);
    const ClusterStats& c = res.table.clusters;
    std::size_t deficient = 0;
    for (const ProjectorRecord& r : res.records) deficient += r.rank < 4 ? 1 : 0;
    json report = {{"model", model.name},
                   {"equations", res.records.size()},
                   {"rank_deficient_records", deficient},
                   {"clusters", c.count},
                   {"largest_cluster", c.sizes.empty() ? 0 : c.sizes.front()},
                   {"solution_blocks", res.table.blocks.size()},
                   {"output", out},
                   {"compact", compact}};
    std::cout << report_text(report);
    return 0;
}

int cmd_verify(const std::string& path, double tol, double residual_tol, bool no_pairs, unsigned threads) {
    const SolutionFile f = read_solution(path);
    json report;
    bool ok = true;
    if (f.has_projectors) {
        VerifyOptions opts;
        opts.pairs = !no_pairs;
        opts.threads = threads;
        const VerificationReport v = verify_projectors(f.result, opts);
        report["projectors"] = verification_json(v, tol);
        ok = v.within(tol);
    } else {
        report["projectors"] = nullptr;
    }

    const FieldConfig& field = f.result.table.field;
    const ModelSpec model = ModelChoice::from_json(f.echo.at("model")).build();
    const std::vector<Equation> equations = equations_of(model);
    const ResidualMap residuals = residual_map(field, f.result.table);
    const double worst = max_relative_residual(field, residuals, equations);
    report["residual"] = {{"equation_sites", equations.size()},
                          {"max_relative_residual", worst},
                          {"tolerance", residual_tol},
                          {"pass", worst <= residual_tol}};
    ok = ok && worst <= residual_tol;
    report["pass"] = ok;
    std::cout << report_text(report);
    return ok ? 0 : kExitVerification;
}

int cmd_observe(const std::string& path, const std::string& a0_text, int grid, unsigned threads) {
    const SolutionFile f = read_solution(path);
    ObservableOptions opts;
    if (!a0_text.empty()) opts.a0 = parse_spinor(a0_text);
    opts.grid = grid;
    opts.threads = threads;
    ObservableSummary s;
    try {
        s = summarize(f.result.table, f.result.table.field, opts);
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("observables: ") + e.what());
    }
    json report = observables_json(s);
    report["a0_source"] = s.amplitude_defined ? json(opts.a0 ? "option" : "best") : json(nullptr);
    std::cout << report_text(report);
    return 0;
}

int cmd_scan(const ConfigFlags& flags, const std::string& range_text) {
    RunConfig cfg = flags.build();
    const ScanRange range = parse_range(range_text);
    const ModelSpec model = build_model(cfg);
    const auto steps = static_cast<long>((range.to - range.from) / range.step + 1e-9);
    std::cout << "q4,R_min\n";
    for (long i = 0; i <= steps; ++i) {
        cfg.field.q4 = range.from + static_cast<double>(i) * range.step;
        const SolveResult res = run_model(cfg.field, model, solver_options(cfg));
        const SpinorBlock ue = u_e(res.table);
        const std::string r = ue.isZero(0.0) ? "nan" : number(best_amplitude(u_d(res.table, cfg.field), ue).r_min);
        std::cout << number(cfg.field.q4) << ',' << r << '\n';
    }
    return 0;
}

int report_manifest(const RunManifest& m) {
    json summary = {{"output_dir", m.dir.string()},
                    {"status", m.doc.at("status")},
                    {"timing", m.doc.at("timing")},
                    {"verification", m.doc.value("verification", json::object())},
                    {"observables", m.doc.value("observables", json::object())}};
    std::cout << report_text(summary);
    return m.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Space-time crystal Dirac solver"};
    app.require_subcommand(1);

    auto* index = app.add_subcommand("index", "Sequential numbering of the even-sum lattice");
    std::string point;
    std::int64_t index_value = 0;
    std::int64_t dump = 0;
    index->add_option("--point", point, "Point n1,n2,n3,n4 to number");
    auto* index_opt = index->add_option("--index", index_value, "Index to convert to a point");
    auto* dump_opt = index->add_option("--dump", dump, "Print the first N points as CSV");

    auto* schedule = app.add_subcommand("schedule", "Fractal schedule and model statistics");
    ConfigFlags schedule_flags;
    schedule_flags.attach(schedule, false);
    bool dump_lattices = false;
    bool verify_sep = false;
    std::string dump_tables;
    schedule->add_flag("--dump-lattices", dump_lattices, "Print the first-cycle lattices as CSV");
    schedule->add_flag("--verify", verify_sep, "Check separation over the first 14 lattices");
    schedule->add_option("--dump-tables", dump_tables, "Write the shipped center tables as JSON");

    auto* solve = app.add_subcommand("solve", "Build the fundamental solution");
    ConfigFlags solve_flags;
    solve_flags.attach(solve, true);
    std::string solve_out = "solution.estc";
    bool compact = false;
    solve->add_option("--out", solve_out, "Solution file");
    solve->add_flag("--compact", compact, "Store S(n) only, without projector vectors");

    auto* verify = app.add_subcommand("verify", "Check projectors and residuals of a solution file");
    std::string verify_path;
    double verify_tol = Tolerances{}.projector;
    double residual_tol = Tolerances{}.residual;
    bool no_pairs = false;
    unsigned verify_threads = 1;
    verify->add_option("--solution", verify_path, "Solution file")->required();
    verify->add_option("--tolerance", verify_tol, "Projector tolerance")->check(CLI::PositiveNumber);
    verify->add_option("--residual-tolerance", residual_tol, "Relative residual tolerance")->check(CLI::PositiveNumber);
    verify->add_flag("--no-pairs", no_pairs, "Skip pairwise overlap checks");
    verify->add_option("--threads", verify_threads, "Worker threads, 0 for all cores");

    auto* observe = app.add_subcommand("observe", "Observables of a solution file");
    std::string observe_path;
    std::string a0_text;
    bool best = false;
    int grid = -1;
    unsigned observe_threads = 1;
    observe->add_option("--solution", observe_path, "Solution file")->required();
    auto* a0_opt = observe->add_option("--a0", a0_text, "Amplitude re,im,re,im,re,im,re,im");
    observe->add_flag("--best", best, "Use the amplitude that minimizes R (default)")->excludes(a0_opt);
    observe->add_option("--grid", grid, "Quadrature check on an N^4 grid, 0 for the default size");
    observe->add_option("--threads", observe_threads, "Worker threads, 0 for all cores");

    auto* scan = app.add_subcommand("scan", "R_min as a function of q4");
    ConfigFlags scan_flags;
    scan_flags.attach(scan, true);
    std::string q4_range;
    scan->add_option("--q4", q4_range, "from:to:step")->required();

    auto* run = app.add_subcommand("run", "Full pipeline with manifest");
    ConfigFlags run_flags;
    run_flags.attach(run, true);
    std::string run_dir;
    run->add_option("--output-dir", run_dir, "Output directory");

    auto* resume_cmd = app.add_subcommand("resume", "Rerun a stage and everything after it");
    std::string resume_dir;
    std::string stage_text = "observe";
    std::string resume_config;
    std::string resume_a0;
    resume_cmd->add_option("--dir", resume_dir, "Run directory")->required();
    resume_cmd->add_option("--stage", stage_text, "schedule, solve, verify, residual or observe");
    resume_cmd->add_option("--config", resume_config, "Changed configuration");
    resume_cmd->add_option("--a0", resume_a0, "New amplitude re,im,re,im,re,im,re,im");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*index) return cmd_index(point, index_opt, index_value, dump_opt, dump);
        if (*schedule) return cmd_schedule(schedule_flags, dump_lattices, verify_sep, dump_tables);
        if (*solve) return cmd_solve(solve_flags, solve_out, compact);
        if (*verify) return cmd_verify(verify_path, verify_tol, residual_tol, no_pairs, verify_threads);
        if (*observe) return cmd_observe(observe_path, a0_text, grid, observe_threads);
        if (*scan) return cmd_scan(scan_flags, q4_range);
        if (*run) {
            RunConfig cfg = run_flags.build();
            if (!run_dir.empty()) cfg.output_dir = run_dir;
            return report_manifest(pipeline(cfg));
        }
        if (*resume_cmd) {
            std::optional<RunConfig> changed;
            if (!resume_config.empty()) changed = load_run_config(resume_config);
            if (!resume_a0.empty()) {
                if (!changed) changed = load_manifest(resume_dir).config();
                changed->a0 = parse_spinor(resume_a0);
            }
            return report_manifest(resume(resume_dir, stage_from_name(stage_text), changed));
        }
    } catch (const RankDeficiency& e) {
        std::cerr << "rank deficiency: " << e.what() << '\n';
        return kExitRank;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DigestError& e) {
        std::cerr << "digest error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolutionFormatError& e) {
        std::cerr << "solution file error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
