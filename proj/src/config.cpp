#include "estc/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace estc {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

Complex complex_of(const json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {number(j[0], what), number(j[1], what)};
    throw ConfigError(what + " must be a number or a [re, im] pair");
}

Eigen::Vector3d real3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must hold 3 numbers");
    return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

LatticePoint point4(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(what + " must hold 4 integers");
    LatticePoint p;
    for (std::size_t a = 0; a < 4; ++a) {
        if (!j[a].is_number_integer()) throw ConfigError(what + " must hold 4 integers");
        p.c[a] = j[a].get<std::int64_t>();
    }
    return p;
}

json point_json(const LatticePoint& p) { return json::array({p[0], p[1], p[2], p[3]}); }

bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

}  // namespace

// Field

FieldConfig field_from_json(const json& j) {
    only_keys(j, {"omega", "q", "q4", "amplitudes", "standing_wave_preset"}, "field");
    FieldConfig cfg;
    if (j.contains("omega")) cfg.omega = number(j["omega"], "omega");
    if (j.contains("q")) cfg.q = real3(j["q"], "q");
    if (j.contains("q4")) cfg.q4 = number(j["q4"], "q4");
    if (j.contains("amplitudes") && j.contains("standing_wave_preset")) {
        throw ConfigError("give either amplitudes or standing_wave_preset, not both");
    }
    if (j.contains("amplitudes")) {
        const json& a = j["amplitudes"];
        if (!a.is_array() || a.size() != 6) throw ConfigError("amplitudes must list 6 vectors");
        for (std::size_t i = 0; i < 6; ++i) {
            if (!a[i].is_array() || a[i].size() != 3) throw ConfigError("each amplitude must hold 3 components");
            for (std::size_t k = 0; k < 3; ++k) {
                cfg.amplitudes[i][static_cast<Eigen::Index>(k)] = complex_of(a[i][k], "amplitude component");
            }
        }
    }
    if (j.contains("standing_wave_preset")) {
        const json& p = j["standing_wave_preset"];
        only_keys(p, {"strength", "polarization"}, "standing_wave_preset");
        StandingWavePreset preset;
        if (!p.contains("strength") || !p["strength"].is_array() || p["strength"].size() != 3) {
            throw ConfigError("standing_wave_preset.strength must hold 3 values");
        }
        for (std::size_t a = 0; a < 3; ++a) preset.strength[a] = complex_of(p["strength"][a], "strength");
        if (p.contains("polarization")) {
            if (!p["polarization"].is_array() || p["polarization"].size() != 3) {
                throw ConfigError("standing_wave_preset.polarization must hold 3 vectors");
            }
            for (std::size_t a = 0; a < 3; ++a) preset.polarization[a] = real3(p["polarization"][a], "polarization");
        }
        try {
            apply_preset(cfg, preset);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

json field_to_json(const FieldConfig& cfg) {
    json amps = json::array();
    for (const auto& a : cfg.amplitudes) {
        json v = json::array();
        for (int k = 0; k < 3; ++k) v.push_back(json::array({a[k].real(), a[k].imag()}));
        amps.push_back(v);
    }
    return {{"omega", cfg.omega}, {"q", {cfg.q[0], cfg.q[1], cfg.q[2]}}, {"q4", cfg.q4}, {"amplitudes", amps}};
}

// Model

ModelSpec ModelChoice::build() const { return build(cycle1()); }

ModelSpec ModelChoice::build(std::span<const PointLattice> lattices) const {
    if (p) {
        if (*p < 0 || *p > 3) throw ConfigError("model p must be 0, 1, 2 or 3");
        return model_spec(lattices, *p);
    }
    try {
        return custom_model(lattices, k_list, region, "custom");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

json ModelChoice::to_json() const {
    if (p) return {{"p", *p}};
    return {{"k_list", k_list}, {"region", {{"lower", point_json(region.lower)}, {"upper", point_json(region.upper)}}}};
}

ModelChoice ModelChoice::from_json(const json& j) {
    ModelChoice m;
    if (j.is_number_integer()) {
        m.p = j.get<int>();
        return m;
    }
    only_keys(j, {"p", "k_list", "region"}, "model");
    if (j.contains("p")) {
        if (j.contains("k_list")) throw ConfigError("model takes either p or k_list");
        if (!j["p"].is_number_integer()) throw ConfigError("model p must be an integer");
        m.p = j["p"].get<int>();
        return m;
    }
    if (!j.contains("k_list") || !j["k_list"].is_array()) throw ConfigError("model needs p or k_list");
    for (const json& k : j["k_list"]) {
        if (!k.is_number_integer()) throw ConfigError("k_list entries must be integers");
        m.k_list.push_back(k.get<std::int64_t>());
    }
    if (j.contains("region")) {
        const json& r = j["region"];
        only_keys(r, {"lower", "upper"}, "region");
        if (!r.contains("lower") || !r.contains("upper")) throw ConfigError("region needs lower and upper");
        m.region = {point4(r["lower"], "region.lower"), point4(r["upper"], "region.upper")};
        for (std::size_t a = 0; a < 4; ++a) {
            if (m.region.lower[a] > m.region.upper[a]) throw ConfigError("region lower bound exceeds upper bound");
        }
    }
    return m;
}

// Run configuration

json RunConfig::to_json() const {
    json j;
    j["field"] = field_to_json(field);
    j["model"] = model.to_json();
    j["tolerances"] = {{"rank", tolerances.rank},
                       {"projector", tolerances.projector},
                       {"residual", tolerances.residual},
                       {"dual_path", tolerances.dual_path}};
    j["allow_rank_deficient"] = allow_rank_deficient;
    j["pairs"] = pairs;
    j["threads"] = threads;
    j["output_dir"] = output_dir.string();
    j["seed"] = seed;
    if (a0) {
        json v = json::array();
        for (int i = 0; i < 4; ++i) v.push_back(json::array({(*a0)[i].real(), (*a0)[i].imag()}));
        j["a0"] = v;
    } else {
        j["a0"] = nullptr;
    }
    j["grid"] = grid;
    j["lattice_tables"] = lattice_tables ? json(lattice_tables->string()) : json(nullptr);
    return j;
}

RunConfig parse_run_config(const json& j) {
    static const std::set<std::string> field_keys{"omega", "q", "q4", "amplitudes", "standing_wave_preset"};
    std::set<std::string> allowed{"field", "model", "tolerances", "allow_rank_deficient", "pairs",
                                  "threads", "output_dir", "seed", "a0", "grid", "lattice_tables"};
    allowed.insert(field_keys.begin(), field_keys.end());
    only_keys(j, allowed, "configuration");

    RunConfig cfg;
    json field = json::object();
    if (j.contains("field")) field = j["field"];
    for (const auto& key : field_keys) {
        if (!j.contains(key)) continue;
        if (j.contains("field")) throw ConfigError("field keys given both inside and outside 'field'");
        field[key] = j[key];
    }
    cfg.field_source = field;
    cfg.field = field_from_json(field);

    if (j.contains("model")) cfg.model = ModelChoice::from_json(j["model"]);
    else cfg.model.p = 1;
    (void)cfg.model.build();

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        only_keys(t, {"rank", "projector", "residual", "dual_path"}, "tolerances");
        if (t.contains("rank")) cfg.tolerances.rank = number(t["rank"], "tolerances.rank");
        if (t.contains("projector")) cfg.tolerances.projector = number(t["projector"], "tolerances.projector");
        if (t.contains("residual")) cfg.tolerances.residual = number(t["residual"], "tolerances.residual");
        if (t.contains("dual_path")) cfg.tolerances.dual_path = number(t["dual_path"], "tolerances.dual_path");
    }
    for (double t : {cfg.tolerances.rank, cfg.tolerances.projector, cfg.tolerances.residual, cfg.tolerances.dual_path}) {
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("tolerances must be positive");
    }
    if (j.contains("allow_rank_deficient")) {
        if (!j["allow_rank_deficient"].is_boolean()) throw ConfigError("allow_rank_deficient must be true or false");
        cfg.allow_rank_deficient = j["allow_rank_deficient"].get<bool>();
    }
    if (j.contains("pairs")) {
        if (!j["pairs"].is_boolean()) throw ConfigError("pairs must be true or false");
        cfg.pairs = j["pairs"].get<bool>();
    }
    if (j.contains("threads")) {
        if (!non_negative_integer(j["threads"])) throw ConfigError("threads must be a non-negative integer");
        cfg.threads = j["threads"].get<unsigned>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) throw ConfigError("output_dir must be a string");
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!non_negative_integer(j["seed"])) throw ConfigError("seed must be a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("a0") && !j["a0"].is_null()) {
        const json& a = j["a0"];
        if (!a.is_array() || a.size() != 4) throw ConfigError("a0 must hold 4 complex values");
        Bispinor v;
        for (std::size_t i = 0; i < 4; ++i) v[static_cast<Eigen::Index>(i)] = complex_of(a[i], "a0");
        if (v.isZero(0.0)) throw ConfigError("a0 must not be zero");
        cfg.a0 = v;
    }
    if (j.contains("grid")) {
        if (!j["grid"].is_number_integer() || j["grid"].get<int>() < -1) throw ConfigError("grid must be -1, 0 or a positive size");
        cfg.grid = j["grid"].get<int>();
    }
    if (j.contains("lattice_tables") && !j["lattice_tables"].is_null()) {
        if (!j["lattice_tables"].is_string()) throw ConfigError("lattice_tables must be a path");
        cfg.lattice_tables = j["lattice_tables"].get<std::string>();
    }
    return cfg;
}

// Center tables

json center_tables_json(const CenterTables& tables) {
    const auto rows = [](std::span<const Projection3> t) {
        json a = json::array();
        for (const auto& pr : t) a.push_back({pr.n1, pr.n2, pr.n3});
        return a;
    };
    return {{"stage2", rows(tables.stage2)}, {"stage3", rows(tables.stage3)}, {"stage4", rows(tables.stage4)}};
}

std::vector<PointLattice> load_cycle1(const std::filesystem::path& path) {
    const json j = load_json(path);
    only_keys(j, {"stage2", "stage3", "stage4"}, path.string());
    std::vector<Projection3> stage[3];
    const char* names[3] = {"stage2", "stage3", "stage4"};
    for (int s = 0; s < 3; ++s) {
        if (!j.contains(names[s]) || !j[names[s]].is_array()) throw ConfigError(path.string() + ": missing " + names[s]);
        for (const json& row : j[names[s]]) {
            if (!row.is_array() || row.size() != 3) throw ConfigError(path.string() + ": rows must hold 3 integers");
            for (const json& x : row) {
                if (!x.is_number_integer()) throw ConfigError(path.string() + ": rows must hold 3 integers");
            }
            stage[s].push_back({row[0].get<std::int64_t>(), row[1].get<std::int64_t>(), row[2].get<std::int64_t>()});
        }
    }
    try {
        return build_cycle1_checked({stage[0], stage[1], stage[2]});
    } catch (const std::runtime_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(load_json(path)); }

void apply_environment(RunConfig& cfg) {
    if (const char* t = std::getenv("ESTC_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(t, &end, 10);
        if (end == t || *end != '\0') throw ConfigError("ESTC_THREADS must be a non-negative integer");
        cfg.threads = static_cast<unsigned>(v);
    }
    if (const char* d = std::getenv("ESTC_OUTPUT_DIR")) {
        if (*d != '\0') cfg.output_dir = d;
    }
}

Bispinor parse_spinor(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in amplitude list");
        }
    }
    if (values.size() != 8) throw ConfigError("a0 needs 8 numbers: re,im for each of 4 components");
    Bispinor v;
    for (int i = 0; i < 4; ++i) v[i] = Complex(values[2 * static_cast<std::size_t>(i)], values[2 * static_cast<std::size_t>(i) + 1]);
    if (v.isZero(0.0)) throw ConfigError("a0 must not be zero");
    return v;
}

// Report formatting

double report_round(double x) {
    if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

json complex_json(const Complex& z) { return json::array({report_round(z.real()), report_round(z.imag())}); }

json block_json(const SpinorBlock& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int k = 0; k < 4; ++k) row.push_back(complex_json(m(i, k)));
        rows.push_back(row);
    }
    return rows;
}

json spinor_json(const Bispinor& v) {
    json out = json::array();
    for (int i = 0; i < 4; ++i) out.push_back(complex_json(v[i]));
    return out;
}

}  // namespace estc
