#include "estc/lattice_index.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace estc {

namespace {

std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("lattice numbering: 64-bit overflow");
    return out;
}

std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("lattice numbering: 64-bit overflow");
    return out;
}

void require_non_negative(std::int64_t v, const char* what) {
    if (v < 0) throw std::invalid_argument(std::string(what) + " must be non-negative");
}

void require_even(const LatticePoint& n) {
    if (!n.even_sum()) throw std::invalid_argument("odd-sum tuple " + to_string(n) + " is not a lattice point");
}

}  // namespace

std::ostream& operator<<(std::ostream& os, const LatticePoint& n) { return os << to_string(n); }

std::string to_string(const LatticePoint& n) {
    std::ostringstream os;
    os << '(' << n[0] << ',' << n[1] << ',' << n[2] << ',' << n[3] << ')';
    return os.str();
}

LatticePoint parse_point(const std::string& text) {
    std::string s;
    for (char ch : text) {
        if (ch != '(' && ch != ')' && ch != ' ') s.push_back(ch);
    }
    LatticePoint n;
    std::size_t pos = 0;
    for (std::size_t axis = 0; axis < 4; ++axis) {
        const auto comma = s.find(',', pos);
        const bool last = axis == 3;
        if (last != (comma == std::string::npos)) throw std::invalid_argument("expected n1,n2,n3,n4: " + text);
        const std::string field = s.substr(pos, last ? std::string::npos : comma - pos);
        std::size_t used = 0;
        try {
            n[axis] = std::stoll(field, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("expected n1,n2,n3,n4: " + text);
        }
        if (used != field.size()) throw std::invalid_argument("expected n1,n2,n3,n4: " + text);
        pos = comma + 1;
    }
    return n;
}

std::int64_t g3d(const LatticePoint& n) noexcept { return std::llabs(n[0]) + std::llabs(n[1]) + std::llabs(n[2]); }

std::int64_t g4d(const LatticePoint& n) noexcept { return std::max(g3d(n), static_cast<std::int64_t>(std::llabs(n[3]))); }

std::int64_t count_n4(std::int64_t R) {
    require_non_negative(R, "R");
    return R == 0 ? 1 : mul(4, R);
}

std::int64_t count_m4(std::int64_t r, std::int64_t n3) {
    require_non_negative(r, "r");
    if (n3 < -r) return 0;
    if (n3 <= 0) return add(1, mul(2, mul(n3 + r, n3 + r + 1)));
    if (n3 < r) return add(1, add(mul(2, mul(r, r + 1)), -mul(2, mul(n3, n3 + 1 - 2 * r))));
    // n3 >= r > 0 covers the whole slice
    return add(2, mul(4, mul(r, r)));
}

std::int64_t count_n3(std::int64_t r) {
    require_non_negative(r, "r");
    return r == 0 ? 1 : add(2, mul(4, mul(r, r)));
}

std::int64_t j4_max(std::int64_t p, std::int64_t r) {
    require_non_negative(p, "p");
    require_non_negative(r, "r");
    if (r > p) throw std::invalid_argument("r must not exceed p");
    return r < p ? 2 : 1 + p;
}

std::int64_t count_n2(std::int64_t p, std::int64_t r) { return mul(j4_max(p, r), count_n3(r)); }

std::int64_t k_max(std::int64_t p) {
    require_non_negative(p, "p");
    return (p % 2 == 0) ? p / 2 + 1 : (p + 1) / 2;
}

std::int64_t count_m2(std::int64_t p, std::int64_t r) {
    require_non_negative(p, "p");
    const std::int64_t r_min = p % 2;
    if (r < r_min) return 0;
    if (r > p) throw std::invalid_argument("r must not exceed p");
    if ((r - p) % 2 != 0) throw std::invalid_argument("r and p must have equal parity");
    if (r < p) {
        // (2/3)(r+1)(2r^2+4r+3); the product is always divisible by 3
        return mul(2, mul(r + 1, add(mul(2, mul(r, r)), add(mul(4, r), 3)))) / 3;
    }
    if (p == 0) return 1;
    return mul(4, mul(p, add(mul(4, mul(p, p)), 5))) / 3;
}

std::int64_t count_n1(std::int64_t p) { return count_m2(p, p); }

std::int64_t count_m1(std::int64_t p) {
    require_non_negative(p, "p");
    // (2/3) p (p+1) (2p^2+2p+5)
    return mul(2, mul(mul(p, p + 1), add(mul(2, mul(p, p)), add(mul(2, p), 5)))) / 3;
}

std::int64_t slice_j4(std::int64_t p, std::int64_t r, std::int64_t n4) {
    if (r < p) return n4 < 0 ? 1 : 2;
    return n4 < 0 ? -n4 : 1 + n4;
}

std::int64_t ring_i4(std::int64_t n1, std::int64_t n2) {
    const std::int64_t R = std::llabs(n1) + std::llabs(n2);
    if (n1 == 0) return n2 <= 0 ? 1 : 4 * n2;
    return n1 < 0 ? 2 * (R + n2) : 2 * (R + n2) + 1;
}

GenerationCoords generation_coords(const LatticePoint& n) {
    require_even(n);
    GenerationCoords g;
    g.p = g4d(n);
    g.r = g3d(n);
    if (g.p == 0) return g;
    g.j4 = slice_j4(g.p, g.r, n[3]);
    g.i4 = ring_i4(n[0], n[1]);
    g.i3 = add(count_m4(g.r, n[2] - 1), g.i4);
    g.i2 = add(mul(g.j4 - 1, count_n3(g.r)), g.i3);
    g.i1 = add(count_m2(g.p, g.r - 2), g.i2);
    return g;
}

std::int64_t index_of(const LatticePoint& n) {
    const GenerationCoords g = generation_coords(n);
    if (g.p == 0) return 0;
    return add(count_m1(g.p - 1), g.i1);
}

LatticePoint point_of(std::int64_t i) {
    require_non_negative(i, "index");
    if (i == 0) return kOrigin;

    // M1(p) ~ (4/3) p^4; start just below the estimate and scan upward.
    auto p = static_cast<std::int64_t>(std::pow(0.75 * static_cast<double>(i), 0.25)) - 1;
    if (p < 1) p = 1;
    while (p > 1 && count_m1(p - 1) >= i) --p;
    while (count_m1(p) < i) ++p;
    const std::int64_t i1 = i - count_m1(p - 1);

    std::int64_t r = p % 2;
    while (count_m2(p, r) < i1) r += 2;
    const std::int64_t i2 = i1 - count_m2(p, r - 2);

    const std::int64_t n3_size = count_n3(r);
    const std::int64_t j4 = (i2 + n3_size - 1) / n3_size;
    std::int64_t n4 = 0;
    if (r < p) {
        n4 = (j4 % 2 == 0) ? p : -p;
    } else {
        const bool odd = ((p + j4) % 2) != 0;
        // (-1)^(p+j4+1) j4 + [(-1)^(p+j4) - 1]/2
        n4 = odd ? j4 - 1 : -j4;
    }
    const std::int64_t i3 = i2 - (j4 - 1) * n3_size;

    std::int64_t n3 = -r;
    while (count_m4(r, n3) < i3) ++n3;
    const std::int64_t i4 = i3 - count_m4(r, n3 - 1);
    const std::int64_t R = r - std::llabs(n3);

    std::int64_t n2 = 0;
    std::int64_t n1 = 0;
    if (i4 % 2 == 0) {
        n2 = -R + i4 / 2;
        n1 = std::llabs(n2) - R;
    } else {
        n2 = -R + (i4 - 1) / 2;
        n1 = R - std::llabs(n2);
    }
    return {n1, n2, n3, n4};
}

std::vector<LatticePoint> s69() {
    std::vector<LatticePoint> out;
    out.reserve(69);
    for (std::int64_t i = 0; i < 69; ++i) out.push_back(point_of(i));
    return out;
}

}  // namespace estc
