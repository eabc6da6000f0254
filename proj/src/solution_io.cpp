#include "estc/solution_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "estc/config.hpp"

namespace estc {

using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'E', 'S', 'T', 'C', '1'};

class Writer {
 public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
        if (!out_) throw SolutionFormatError("cannot write " + path.string());
    }

    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

    template <class T>
    void le(T v) {
        static_assert(std::is_integral_v<T>);
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(v);
        unsigned char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf[i] = static_cast<unsigned char>(u & 0xFFu);
            u = static_cast<U>(u >> 8);
        }
        bytes(buf, sizeof buf);
    }

    void real(double x) { le(std::bit_cast<std::uint64_t>(x)); }

    void text(const std::string& s) {
        le(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void finish() {
        out_.flush();
        if (!out_) throw SolutionFormatError("write failed for " + path_.string());
    }

 private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
 public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw SolutionFormatError("cannot open " + path.string());
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw SolutionFormatError(path_.string() + ": truncated file");
    }

    template <class T>
    T le() {
        unsigned char buf[sizeof(T)];
        bytes(buf, sizeof buf);
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<std::make_unsigned_t<T>>((u << 8) | buf[i]);
        return static_cast<T>(u);
    }

    double real() { return std::bit_cast<double>(le<std::uint64_t>()); }

    std::string text(std::size_t limit) {
        const auto n = le<std::uint32_t>();
        if (n > limit) throw SolutionFormatError(path_.string() + ": string length out of range");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    // Guards allocations against corrupted counts.
    std::uint64_t count(std::uint64_t limit) {
        const auto n = le<std::uint64_t>();
        if (n > limit) throw SolutionFormatError(path_.string() + ": count out of range");
        return n;
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
    std::ifstream in_;
    std::filesystem::path path_;
};

constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

void write_block(Writer& w, const SpinorBlock& s) {
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            w.real(s(i, k).real());
            w.real(s(i, k).imag());
        }
    }
}

SpinorBlock read_block(Reader& r) {
    SpinorBlock s;
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            const double re = r.real();
            const double im = r.real();
            s(i, k) = Complex(re, im);
        }
    }
    return s;
}

json stats_json(const ClusterStats& c) {
    json history = json::array();
    for (const ClusterStep& s : c.history) history.push_back({s.k, s.added, s.merges, s.clusters_after});
    return {{"count", c.count}, {"sizes", c.sizes}, {"history", history}};
}

ClusterStats stats_from(const json& j) {
    ClusterStats c;
    c.count = j.at("count").get<std::size_t>();
    c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    for (const json& s : j.at("history")) {
        c.history.push_back({s.at(0).get<std::int64_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>(),
                             s.at(3).get<std::size_t>()});
    }
    return c;
}

LatticePoint point_from(const json& j) {
    return {j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>(), j.at(2).get<std::int64_t>(), j.at(3).get<std::int64_t>()};
}

}  // namespace

void write_solution(const std::filesystem::path& path, const SolveResult& result, const json& model, bool compact) {
    const SolutionTable& t = result.table;
    json echo;
    echo["field"] = field_to_json(t.field);
    echo["model"] = model;
    echo["k_list"] = t.k_list;
    echo["region"] = {{"lower", {t.region.lower[0], t.region.lower[1], t.region.lower[2], t.region.lower[3]}},
                      {"upper", {t.region.upper[0], t.region.upper[1], t.region.upper[2], t.region.upper[3]}}};
    echo["origin"] = {t.origin[0], t.origin[1], t.origin[2], t.origin[3]};
    echo["clusters"] = stats_json(t.clusters);

    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.le(kSolutionFormatVersion);
    w.text(t.model_name);
    w.text(echo.dump());
    w.le(static_cast<std::uint64_t>(t.blocks.size()));
    for (const SolutionBlock& b : t.blocks) {
        w.le(b.index);
        write_block(w, b.s);
    }

    const bool projectors = !compact;
    w.le(static_cast<std::uint8_t>(projectors ? 1 : 0));
    if (projectors) {
        w.le(static_cast<std::uint64_t>(result.records.size()));
        for (const ProjectorRecord& r : result.records) {
            w.le(r.k);
            w.le(index_of(r.site));
            w.le(static_cast<std::int32_t>(r.rank));
            w.le(static_cast<std::uint64_t>(r.cluster));
            w.le(static_cast<std::uint64_t>(r.first_vector));
        }
        w.le(static_cast<std::uint64_t>(result.clusters.size()));
        for (const Cluster& c : result.clusters) {
            w.le(static_cast<std::uint64_t>(c.sites.size()));
            for (const LatticePoint& s : c.sites) w.le(index_of(s));
            w.le(static_cast<std::uint64_t>(c.records.size()));
            for (std::size_t r : c.records) w.le(static_cast<std::uint64_t>(r));
            w.le(static_cast<std::uint64_t>(c.vectors.size()));
            for (const RangeVector& v : c.vectors) {
                w.le(static_cast<std::uint64_t>(v.record));
                w.le(static_cast<std::uint64_t>(v.begin));
                w.le(static_cast<std::uint64_t>(v.data.size()));
                for (Eigen::Index i = 0; i < v.data.size(); ++i) {
                    w.real(v.data[i].real());
                    w.real(v.data[i].imag());
                }
            }
        }
    }
    w.finish();
}

SolutionFile read_solution(const std::filesystem::path& path) {
    Reader r(path);
    char magic[5];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw SolutionFormatError(path.string() + ": not an ESTC1 file");
    const auto version = r.le<std::uint32_t>();
    if (version != kSolutionFormatVersion) {
        throw SolutionFormatError(path.string() + ": unsupported version " + std::to_string(version));
    }

    SolutionFile f;
    SolutionTable& t = f.result.table;
    t.model_name = r.text(1 << 16);
    try {
        f.echo = json::parse(r.text(1u << 30));
        t.field = field_from_json(f.echo.at("field"));
        t.k_list = f.echo.at("k_list").get<std::vector<std::int64_t>>();
        t.region = {point_from(f.echo.at("region").at("lower")), point_from(f.echo.at("region").at("upper"))};
        t.origin = point_from(f.echo.at("origin"));
        t.clusters = stats_from(f.echo.at("clusters"));
    } catch (const json::exception& e) {
        throw SolutionFormatError(path.string() + ": bad header: " + e.what());
    } catch (const ConfigError& e) {
        throw SolutionFormatError(path.string() + ": bad field echo: " + e.what());
    }

    const auto blocks = r.count(kMaxCount);
    t.blocks.reserve(blocks);
    for (std::uint64_t i = 0; i < blocks; ++i) {
        SolutionBlock b;
        b.index = r.le<std::int64_t>();
        if (b.index < 0) throw SolutionFormatError(path.string() + ": negative lattice index");
        b.site = point_of(b.index);
        b.s = read_block(r);
        if (!t.blocks.empty() && t.blocks.back().index >= b.index) {
            throw SolutionFormatError(path.string() + ": blocks are not sorted by index");
        }
        t.blocks.push_back(b);
    }

    f.has_projectors = r.le<std::uint8_t>() != 0;
    if (f.has_projectors) {
        const auto nrec = r.count(kMaxCount);
        f.result.records.resize(nrec);
        for (ProjectorRecord& rec : f.result.records) {
            rec.k = r.le<std::int64_t>();
            rec.site = point_of(r.le<std::int64_t>());
            rec.rank = r.le<std::int32_t>();
            rec.cluster = r.le<std::uint64_t>();
            rec.first_vector = r.le<std::uint64_t>();
        }
        const auto nclusters = r.count(kMaxCount);
        f.result.clusters.resize(nclusters);
        for (Cluster& c : f.result.clusters) {
            const auto nsites = r.count(kMaxCount);
            c.sites.reserve(nsites);
            for (std::uint64_t i = 0; i < nsites; ++i) {
                c.sites.push_back(point_of(r.le<std::int64_t>()));
                c.index.emplace(c.sites.back(), c.sites.size() - 1);
            }
            const auto nr = r.count(nrec);
            for (std::uint64_t i = 0; i < nr; ++i) c.records.push_back(r.le<std::uint64_t>());
            const auto nv = r.count(kMaxCount);
            c.vectors.resize(nv);
            for (RangeVector& v : c.vectors) {
                v.record = r.le<std::uint64_t>();
                v.begin = r.le<std::uint64_t>();
                const auto len = r.count(4 * nsites);
                if (v.begin + len > 4 * nsites) throw SolutionFormatError(path.string() + ": vector range out of bounds");
                v.data.resize(static_cast<Eigen::Index>(len));
                for (Eigen::Index i = 0; i < v.data.size(); ++i) {
                    const double re = r.real();
                    const double im = r.real();
                    v.data[i] = Complex(re, im);
                }
            }
        }
        for (const ProjectorRecord& rec : f.result.records) {
            if (rec.cluster >= nclusters ||
                rec.first_vector + static_cast<std::size_t>(rec.rank) > f.result.clusters[rec.cluster].vectors.size()) {
                throw SolutionFormatError(path.string() + ": projector record out of range");
            }
        }
    }
    if (!r.at_end()) throw SolutionFormatError(path.string() + ": trailing bytes");
    return f;
}

}  // namespace estc
