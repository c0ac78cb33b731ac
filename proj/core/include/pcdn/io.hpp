#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcdn/geometry.hpp"
#include "pcdn/network.hpp"

namespace pcdn::io {

enum class CloudFormat { xyz, ply };

// From the file extension (.xyz / .txt / .ply); throws InvalidInput otherwise.
CloudFormat cloud_format_for(const std::filesystem::path& path);

// ASCII XYZ: one "x y z" per line; blank lines and '#' comments are skipped.
PointCloud read_xyz(std::istream& in);
// ASCII PLY with a single vertex element carrying float/double x, y, z.
PointCloud read_ply(std::istream& in);
PointCloud read_point_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud read_point_cloud(const std::filesystem::path& path);

// Coordinates are written with 9 significant digits.
void write_xyz(std::ostream& out, const PointCloud& cloud);
void write_ply(std::ostream& out, const PointCloud& cloud);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                       CloudFormat format);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

struct MeshReadResult {
  TriangleMesh mesh;
  std::size_t dropped_faces = 0;  // zero-area faces removed on load
};

// ASCII OBJ: v and f records, 1-based (or negative relative) indices, "v/vt/vn"
// face tokens accepted; polygons are fan-triangulated.
MeshReadResult read_obj(std::istream& in);
MeshReadResult read_mesh(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

// Binary weights: "N2S3", u32 version, u32 layer count, then per layer u32
// rows and u32 cols, then every layer's row-major weights followed by its
// bias, as little-endian IEEE-754 doubles.
inline constexpr std::uint32_t kWeightsVersion = 1;
void write_weights(std::ostream& out, const NetworkWeights& w);
NetworkWeights read_weights(std::istream& in);
void write_weights(const std::filesystem::path& path, const NetworkWeights& w);
NetworkWeights read_weights(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace pcdn::io
