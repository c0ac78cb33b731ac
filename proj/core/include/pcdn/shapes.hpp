#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcdn/geometry.hpp"

namespace pcdn::shapes {

// Unit-radius icosphere: an icosahedron subdivided `subdivisions` times with
// vertices pushed onto the sphere.
TriangleMesh icosphere(int subdivisions = 5);

// Ring torus in the xy-plane with the given major/minor radii.
TriangleMesh torus(double major_radius = 1.0, double minor_radius = 0.4, int major_segments = 256,
                   int minor_segments = 96);

// Cube [-1,1]^3 with edges and corners rounded to `bevel_radius`.
TriangleMesh beveled_cube(double bevel_radius = 0.2, int resolution = 48);

// "sphere", "torus", or "cube"; throws InvalidInput otherwise.
TriangleMesh by_name(std::string_view name);
std::vector<std::string> names();

}  // namespace pcdn::shapes
