#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "estc/config.hpp"
#include "estc/solution_io.hpp"

using namespace estc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

FieldConfig test_field() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.15);
    FieldConfig cfg;
    for (auto& a : cfg.amplitudes) {
        for (int k = 0; k < 3; ++k) a[k] = Complex(g(rng), g(rng));
    }
    cfg.q = Eigen::Vector3d(0.05, 0.1, -0.02);
    cfg.q4 = 0.35;
    return cfg;
}

struct TempDir {
    fs::path path = fs::temp_directory_path() / "estc_test_solution_io";
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
};

const SolveResult& solved() {
    static const SolveResult res = run_model(test_field(), model_spec(cycle1(), 1));
    return res;
}

std::vector<char> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("full file round trip is exact") {
    TempDir tmp;
    const fs::path file = tmp.path / "s.estc";
    const SolveResult& res = solved();
    write_solution(file, res, json{{"p", 1}}, false);
    const SolutionFile f = read_solution(file);

    CHECK(f.has_projectors);
    CHECK(f.echo["model"] == json{{"p", 1}});
    const SolutionTable& a = res.table;
    const SolutionTable& b = f.result.table;
    CHECK(b.model_name == a.model_name);
    CHECK(b.k_list == a.k_list);
    CHECK(b.origin == a.origin);
    CHECK(b.region.lower == a.region.lower);
    CHECK(b.region.upper == a.region.upper);
    CHECK(b.clusters.count == a.clusters.count);
    CHECK(b.clusters.sizes == a.clusters.sizes);
    CHECK(b.clusters.history.size() == a.clusters.history.size());
    CHECK(b.field.q == a.field.q);
    CHECK(b.field.q4 == a.field.q4);
    for (int i = 0; i < 6; ++i) CHECK(b.field.amplitudes[i] == a.field.amplitudes[i]);

    REQUIRE(b.blocks.size() == a.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        CHECK(b.blocks[i].index == a.blocks[i].index);
        CHECK(b.blocks[i].site == a.blocks[i].site);
        CHECK(b.blocks[i].s == a.blocks[i].s);
    }

    REQUIRE(f.result.records.size() == res.records.size());
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const ProjectorRecord& x = res.records[i];
        const ProjectorRecord& y = f.result.records[i];
        CHECK(y.k == x.k);
        CHECK(y.site == x.site);
        CHECK(y.rank == x.rank);
        CHECK(y.cluster == x.cluster);
        CHECK(y.first_vector == x.first_vector);
    }
    REQUIRE(f.result.clusters.size() == res.clusters.size());
    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
        const Cluster& x = res.clusters[c];
        const Cluster& y = f.result.clusters[c];
        CHECK(y.sites == x.sites);
        CHECK(y.records == x.records);
        REQUIRE(y.vectors.size() == x.vectors.size());
        for (std::size_t v = 0; v < x.vectors.size(); ++v) {
            CHECK(y.vectors[v].begin == x.vectors[v].begin);
            CHECK(y.vectors[v].record == x.vectors[v].record);
            CHECK(y.vectors[v].data == x.vectors[v].data);
        }
        for (const LatticePoint& n : x.sites) CHECK(y.site_index(n) == x.site_index(n));
    }

    const VerificationReport v0 = verify_projectors(res);
    const VerificationReport v1 = verify_projectors(f.result);
    CHECK(v1.max_idempotency == v0.max_idempotency);
    CHECK(v1.max_pair_overlap == v0.max_pair_overlap);
    CHECK(v1.pairs_checked == v0.pairs_checked);
}

TEST_CASE("compact files hold only the table") {
    TempDir tmp;
    const fs::path full = tmp.path / "full.estc";
    const fs::path compact = tmp.path / "compact.estc";
    write_solution(full, solved(), json{{"p", 1}}, false);
    write_solution(compact, solved(), json{{"p", 1}}, true);
    CHECK(fs::file_size(compact) < fs::file_size(full));
    const SolutionFile f = read_solution(compact);
    CHECK_FALSE(f.has_projectors);
    CHECK(f.result.records.empty());
    CHECK(f.result.table.blocks.size() == solved().table.blocks.size());
}

TEST_CASE("writing is deterministic") {
    TempDir tmp;
    write_solution(tmp.path / "a.estc", solved(), json{{"p", 1}}, false);
    write_solution(tmp.path / "b.estc", solved(), json{{"p", 1}}, false);
    CHECK(bytes_of(tmp.path / "a.estc") == bytes_of(tmp.path / "b.estc"));
}

TEST_CASE("header layout") {
    TempDir tmp;
    const fs::path file = tmp.path / "h.estc";
    write_solution(file, solved(), json{{"p", 1}}, true);
    const auto b = bytes_of(file);
    REQUIRE(b.size() > 13);
    CHECK(std::string(b.begin(), b.begin() + 5) == "ESTC1");
    CHECK(b[5] == 1);
    CHECK(b[6] == 0);
    CHECK(b[7] == 0);
    CHECK(b[8] == 0);
    const std::string name = solved().table.model_name;
    CHECK(static_cast<unsigned char>(b[9]) == name.size());
    CHECK(std::string(b.begin() + 13, b.begin() + 13 + static_cast<long>(name.size())) == name);
}

TEST_CASE("malformed files are rejected") {
    TempDir tmp;
    const fs::path file = tmp.path / "m.estc";
    write_solution(file, solved(), json{{"p", 1}}, false);
    const auto good = bytes_of(file);

    CHECK_THROWS_AS(read_solution(tmp.path / "missing.estc"), SolutionFormatError);

    auto bad = good;
    bad[0] = 'X';
    write_bytes(file, bad);
    CHECK_THROWS_AS(read_solution(file), SolutionFormatError);

    bad = good;
    bad[5] = 2;
    write_bytes(file, bad);
    CHECK_THROWS_AS(read_solution(file), SolutionFormatError);

    bad.assign(good.begin(), good.begin() + static_cast<long>(good.size() / 2));
    write_bytes(file, bad);
    CHECK_THROWS_AS(read_solution(file), SolutionFormatError);

    bad = good;
    bad.push_back(0);
    write_bytes(file, bad);
    CHECK_THROWS_AS(read_solution(file), SolutionFormatError);

    // Corrupt the JSON echo.
    bad = good;
    const std::size_t name_len = static_cast<unsigned char>(good[9]);
    bad[9 + 4 + name_len + 4] = '#';
    write_bytes(file, bad);
    CHECK_THROWS_AS(read_solution(file), SolutionFormatError);
}
