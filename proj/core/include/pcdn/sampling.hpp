#pragma once

#include <cstddef>
#include <cstdint>

#include "pcdn/geometry.hpp"

namespace pcdn {

enum class SamplingMode { uniform, blue_noise };

// Draws n points on the surface of `mesh`.
//
// uniform: area-weighted triangle choice, uniform barycentric position.
// blue_noise: draws 4n uniform candidates and removes them one at a time by
// weighted sample elimination until n remain, approximating Poisson-disk
// spacing. Both modes are deterministic in `seed`.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                       SamplingMode mode = SamplingMode::uniform);

}  // namespace pcdn
