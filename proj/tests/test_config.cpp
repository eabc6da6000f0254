#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "estc/config.hpp"

using namespace estc;
using nlohmann::json;

TEST_CASE("defaults") {
    const RunConfig cfg = parse_run_config(json::object());
    CHECK(cfg.model.p == 1);
    CHECK(cfg.field.field_free());
    CHECK(cfg.field.omega == 1.0);
    CHECK(cfg.tolerances.projector == 1e-9);
    CHECK(cfg.tolerances.residual == 1e-8);
    CHECK(cfg.threads == 1);
    CHECK_FALSE(cfg.a0.has_value());
    CHECK_FALSE(cfg.lattice_tables.has_value());
}

TEST_CASE("field keys at top level or nested") {
    const json flat = {{"q", {0.1, 0.2, 0.3}}, {"q4", 0.5}, {"omega", 2.0}};
    const json nested = {{"field", flat}};
    const RunConfig a = parse_run_config(flat);
    const RunConfig b = parse_run_config(nested);
    CHECK(a.field.q4 == 0.5);
    CHECK(a.field.omega == 2.0);
    CHECK(a.field.q == b.field.q);
    CHECK_THROWS_AS(parse_run_config({{"field", flat}, {"q4", 1.0}}), ConfigError);
}

TEST_CASE("amplitudes and preset") {
    json amps = json::array();
    for (int i = 0; i < 6; ++i) amps.push_back({0.0, {0.25 * i, -0.2}, 1.5});
    const FieldConfig f = field_from_json({{"amplitudes", amps}});
    CHECK(f.amplitudes[3][1] == Complex(0.75, -0.2));
    CHECK(f.amplitudes[5][2] == Complex(1.5, 0.0));

    const FieldConfig p = field_from_json({{"standing_wave_preset", {{"strength", {0.2, 0.0, 0.0}}}}});
    CHECK_FALSE(p.field_free());
    CHECK_THROWS_AS(field_from_json({{"amplitudes", amps}, {"standing_wave_preset", {{"strength", {1, 1, 1}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(field_from_json({{"standing_wave_preset", {{"strength", {1, 1, 1}},
                                                               {"polarization", {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}}}}),
                    ConfigError);
}

TEST_CASE("field echo round trip") {
    json amps = json::array();
    for (int i = 0; i < 6; ++i) amps.push_back({{0.125 * i, 0.3}, 0.0, {-1.0 / 3.0, 0.7}});
    const FieldConfig f = field_from_json({{"amplitudes", amps}, {"q", {0.1, 1.0 / 7.0, 0.0}}, {"q4", 0.9}, {"omega", 0.75}});
    const FieldConfig g = field_from_json(field_to_json(f));
    CHECK(g.q == f.q);
    CHECK(g.q4 == f.q4);
    CHECK(g.omega == f.omega);
    for (int i = 0; i < 6; ++i) CHECK(g.amplitudes[i] == f.amplitudes[i]);
}

TEST_CASE("config echo round trip") {
    const json in = {{"field", {{"q4", 0.3}, {"standing_wave_preset", {{"strength", {0.1, 0.2, 0.3}}}}}},
                     {"model", {{"k_list", {0, 1, 2}}, {"region", {{"lower", {-2, -2, -2, -2}}, {"upper", {3, 3, 3, 3}}}}}},
                     {"tolerances", {{"projector", 1e-10}}},
                     {"allow_rank_deficient", true},
                     {"threads", 3},
                     {"seed", 42},
                     {"a0", {1.0, {0.0, 2.0}, 0.0, 0.5}},
                     {"grid", 0},
                     {"lattice_tables", "tables.json"}};
    const RunConfig a = parse_run_config(in);
    const RunConfig b = parse_run_config(a.to_json());
    CHECK(a.to_json() == b.to_json());
    CHECK(b.model.k_list == std::vector<std::int64_t>{0, 1, 2});
    CHECK(b.tolerances.projector == 1e-10);
    REQUIRE(b.a0.has_value());
    CHECK((*b.a0)[1] == Complex(0.0, 2.0));
    CHECK(b.lattice_tables->string() == "tables.json");
}

TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(parse_run_config({{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"model", 4}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"model", {{"k_list", {0, 2215}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"model", {{"p", 1}, {"k_list", {0}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"tolerances", {{"rank", 0.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"tolerances", {{"residual", -1e-3}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"omega", 0.0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"q", {0.0, 0.0}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"a0", {0, 0, 0, 0}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"grid", -2}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"threads", -1}}), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/estc.json"), ConfigError);
}

TEST_CASE("model choice builds the p-models") {
    ModelChoice m;
    m.p = 2;
    const ModelSpec spec = m.build();
    CHECK(spec.equation_count() == 1520);
    CHECK(ModelChoice::from_json(3).p == 3);
    CHECK(ModelChoice::from_json(m.to_json()) == m);
}

TEST_CASE("environment overrides") {
    RunConfig cfg = parse_run_config(json::object());
    ::setenv("ESTC_THREADS", "5", 1);
    ::setenv("ESTC_OUTPUT_DIR", "/tmp/estc-env", 1);
    apply_environment(cfg);
    ::unsetenv("ESTC_THREADS");
    ::unsetenv("ESTC_OUTPUT_DIR");
    CHECK(cfg.threads == 5);
    CHECK(cfg.output_dir == "/tmp/estc-env");

    ::setenv("ESTC_THREADS", "many", 1);
    CHECK_THROWS_AS(apply_environment(cfg), ConfigError);
    ::unsetenv("ESTC_THREADS");
}

TEST_CASE("spinor parsing and report rounding") {
    const Bispinor v = parse_spinor("1,0,0.5,-2,0,0,3,1e-3");
    CHECK(v[1] == Complex(0.5, -2.0));
    CHECK(v[3] == Complex(3.0, 1e-3));
    CHECK_THROWS_AS(parse_spinor("1,2,3"), ConfigError);
    CHECK_THROWS_AS(parse_spinor("1,2,3,4,5,6,7,x"), ConfigError);

    CHECK(report_round(1.0 / 3.0) == 0.333333333333);
    CHECK(report_round(0.1 + 0.2) == 0.3);
    CHECK(report_round(0.0) == 0.0);
    CHECK(report_round(-2.5e-17) == -2.5e-17);
}

TEST_CASE("center tables round trip through a file") {
    const auto dir = std::filesystem::temp_directory_path() / "estc_test_config";
    std::filesystem::create_directories(dir);
    const json tables = center_tables_json(published_center_tables());
    CHECK(tables["stage2"].size() == 6);
    CHECK(tables["stage3"].size() == 30);
    CHECK(tables["stage4"].size() == 182);

    const auto good = dir / "good.json";
    std::ofstream(good) << tables.dump();
    const auto lattices = load_cycle1(good);
    REQUIRE(lattices.size() == cycle1().size());
    for (std::size_t i = 0; i < lattices.size(); ++i) {
        CHECK(lattices[i].center == cycle1()[i].center);
        CHECK(lattices[i].periods == cycle1()[i].periods);
    }

    json tampered = tables;
    tampered["stage4"][17][0] = tampered["stage4"][17][0].get<int>() + 1;
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << tampered.dump();
    CHECK_THROWS_AS(load_cycle1(bad), ConfigError);

    json shortened = tables;
    shortened["stage3"].erase(shortened["stage3"].begin());
    std::ofstream(bad) << shortened.dump();
    CHECK_THROWS_AS(load_cycle1(bad), ConfigError);
    std::filesystem::remove_all(dir);
}
