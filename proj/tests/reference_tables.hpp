#pragma once

#include <array>

#include "estc/lattice_index.hpp"

namespace estc::testing {

// First 69 values of the inverse numbering, as published.
inline const std::array<LatticePoint, 69> kPublishedS69 = {{
    LatticePoint{0, 0, 0, 0},
    LatticePoint{0, 0, -1, -1},
    LatticePoint{0, -1, 0, -1},
    LatticePoint{-1, 0, 0, -1},
    LatticePoint{1, 0, 0, -1},
    LatticePoint{0, 1, 0, -1},
    LatticePoint{0, 0, 1, -1},
    LatticePoint{0, 0, -1, 1},
    LatticePoint{0, -1, 0, 1},
    LatticePoint{-1, 0, 0, 1},
    LatticePoint{1, 0, 0, 1},
    LatticePoint{0, 1, 0, 1},
    LatticePoint{0, 0, 1, 1},
    LatticePoint{0, 0, 0, -2},
    LatticePoint{0, 0, 0, 2},
    LatticePoint{0, 0, -2, 0},
    LatticePoint{0, -1, -1, 0},
    LatticePoint{-1, 0, -1, 0},
    LatticePoint{1, 0, -1, 0},
    LatticePoint{0, 1, -1, 0},
    LatticePoint{0, -2, 0, 0},
    LatticePoint{-1, -1, 0, 0},
    LatticePoint{1, -1, 0, 0},
    LatticePoint{-2, 0, 0, 0},
    LatticePoint{2, 0, 0, 0},
    LatticePoint{-1, 1, 0, 0},
    LatticePoint{1, 1, 0, 0},
    LatticePoint{0, 2, 0, 0},
    LatticePoint{0, -1, 1, 0},
    LatticePoint{-1, 0, 1, 0},
    LatticePoint{1, 0, 1, 0},
    LatticePoint{0, 1, 1, 0},
    LatticePoint{0, 0, 2, 0},
    LatticePoint{0, 0, -2, -2},
    LatticePoint{0, -1, -1, -2},
    LatticePoint{-1, 0, -1, -2},
    LatticePoint{1, 0, -1, -2},
    LatticePoint{0, 1, -1, -2},
    LatticePoint{0, -2, 0, -2},
    LatticePoint{-1, -1, 0, -2},
    LatticePoint{1, -1, 0, -2},
    LatticePoint{-2, 0, 0, -2},
    LatticePoint{2, 0, 0, -2},
    LatticePoint{-1, 1, 0, -2},
    LatticePoint{1, 1, 0, -2},
    LatticePoint{0, 2, 0, -2},
    LatticePoint{0, -1, 1, -2},
    LatticePoint{-1, 0, 1, -2},
    LatticePoint{1, 0, 1, -2},
    LatticePoint{0, 1, 1, -2},
    LatticePoint{0, 0, 2, -2},
    LatticePoint{0, 0, -2, 2},
    LatticePoint{0, -1, -1, 2},
    LatticePoint{-1, 0, -1, 2},
    LatticePoint{1, 0, -1, 2},
    LatticePoint{0, 1, -1, 2},
    LatticePoint{0, -2, 0, 2},
    LatticePoint{-1, -1, 0, 2},
    LatticePoint{1, -1, 0, 2},
    LatticePoint{-2, 0, 0, 2},
    LatticePoint{2, 0, 0, 2},
    LatticePoint{-1, 1, 0, 2},
    LatticePoint{1, 1, 0, 2},
    LatticePoint{0, 2, 0, 2},
    LatticePoint{0, -1, 1, 2},
    LatticePoint{-1, 0, 1, 2},
    LatticePoint{1, 0, 1, 2},
    LatticePoint{0, 1, 1, 2},
    LatticePoint{0, 0, 2, 2}}};

}  // namespace estc::testing
