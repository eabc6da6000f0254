#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "estc/projector_engine.hpp"

namespace estc {

/// Binary solution file:
///   "ESTC1", u32 version, u32 + model name, u32 + JSON echo (field, model, cluster statistics),
///   u64 block count, then per block an i64 global index and 32 f64 (4x4 complex, row major,
///   re/im interleaved); then a u8 flag and, when set, the projector vectors so the file can be
///   verified again later. All integers and reals are little endian.
inline constexpr std::uint32_t kSolutionFormatVersion = 1;

class SolutionFormatError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct SolutionFile {
    SolveResult result;       // records and clusters are empty when has_projectors is false
    bool has_projectors = false;
    nlohmann::json echo;
};

/// `model` is stored verbatim in the echo so that readers can rebuild the equation list.
void write_solution(const std::filesystem::path& path, const SolveResult& result, const nlohmann::json& model,
                    bool compact);

SolutionFile read_solution(const std::filesystem::path& path);

}  // namespace estc
