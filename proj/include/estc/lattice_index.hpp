#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace estc {

/// A point of the integer lattice with even component sum. Used as the index of
/// every Fourier amplitude, field harmonic and lattice center in the library.
struct LatticePoint {
    std::array<std::int64_t, 4> c{};

    constexpr LatticePoint() = default;
    constexpr LatticePoint(std::int64_t n1, std::int64_t n2, std::int64_t n3, std::int64_t n4)
        : c{n1, n2, n3, n4} {}

    constexpr std::int64_t operator[](std::size_t axis) const { return c[axis]; }
    constexpr std::int64_t& operator[](std::size_t axis) { return c[axis]; }

    constexpr bool even_sum() const { return ((c[0] + c[1] + c[2] + c[3]) & 1) == 0; }

    constexpr LatticePoint operator+(const LatticePoint& o) const {
        return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2], c[3] + o.c[3]};
    }
    constexpr LatticePoint operator-(const LatticePoint& o) const {
        return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2], c[3] - o.c[3]};
    }
    constexpr LatticePoint operator-() const { return {-c[0], -c[1], -c[2], -c[3]}; }

    constexpr auto operator<=>(const LatticePoint&) const = default;
};

inline constexpr LatticePoint kOrigin{0, 0, 0, 0};

std::ostream& operator<<(std::ostream& os, const LatticePoint& n);

/// "(n1,n2,n3,n4)"
std::string to_string(const LatticePoint& n);

/// Parses "n1,n2,n3,n4" (optional surrounding parentheses). Throws std::invalid_argument.
LatticePoint parse_point(const std::string& text);

struct LatticePointHash {
    std::size_t operator()(const LatticePoint& n) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto v : n.c) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

/// |n1|+|n2|+|n3|
std::int64_t g3d(const LatticePoint& n) noexcept;
/// max(g3d(n), |n4|)
std::int64_t g4d(const LatticePoint& n) noexcept;

// Counting functions of the sequential numbering. All of them use checked 64-bit
// arithmetic and throw std::overflow_error rather than wrap.

/// Size of G{p,r,n4,n3} as a function of R = r - |n3|.
std::int64_t count_n4(std::int64_t R);
/// Number of G{p,r,n4} members with n3' <= n3.
std::int64_t count_m4(std::int64_t r, std::int64_t n3);
/// Size of G{p,r,n4}.
std::int64_t count_n3(std::int64_t r);
/// Number of distinct n4 values inside G{p,r}.
std::int64_t j4_max(std::int64_t p, std::int64_t r);
/// Size of G{p,r}.
std::int64_t count_n2(std::int64_t p, std::int64_t r);
/// Number of distinct r values inside generation p.
std::int64_t k_max(std::int64_t p);
/// Number of generation-p members with r' <= r (0 below r_min).
std::int64_t count_m2(std::int64_t p, std::int64_t r);
/// Size of generation p.
std::int64_t count_n1(std::int64_t p);
/// Global number of the last member of generation p.
std::int64_t count_m1(std::int64_t p);

/// Local coordinates of a point inside its generation. All local indices are 1-based.
struct GenerationCoords {
    std::int64_t p = 0;   // g4d
    std::int64_t r = 0;   // g3d
    std::int64_t j4 = 1;  // rank of the n4 slice inside G{p,r}
    std::int64_t i4 = 1;  // rank inside G{p,r,n4,n3}
    std::int64_t i3 = 1;  // rank inside G{p,r,n4}
    std::int64_t i2 = 1;  // rank inside G{p,r}
    std::int64_t i1 = 1;  // rank inside G{p}
};

/// Local n4-slice number j4 (needs r = g3d, p = g4d of the point).
std::int64_t slice_j4(std::int64_t p, std::int64_t r, std::int64_t n4);
/// Local number i4 of (n1, n2) on the square ring |n1|+|n2| = R.
std::int64_t ring_i4(std::int64_t n1, std::int64_t n2);

/// Throws std::invalid_argument for odd-sum tuples.
GenerationCoords generation_coords(const LatticePoint& n);

/// Sequential number of n. Throws std::invalid_argument if n has an odd sum.
std::int64_t index_of(const LatticePoint& n);

/// Inverse of index_of. Throws std::invalid_argument for negative i.
LatticePoint point_of(std::int64_t i);

/// point_of(0..68): generations 0, 1 and 2.
std::vector<LatticePoint> s69();

}  // namespace estc
