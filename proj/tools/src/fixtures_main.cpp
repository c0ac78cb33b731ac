// Writes the bundled analytic shapes as OBJ meshes plus clean blue-noise
// point clouds, all in the unit-sphere frame.
#include <filesystem>
#include <iostream>
#include <string>

#include "pcdn/io.hpp"
#include "pcdn/shapes.hpp"
#include "pcdn/text.hpp"
#include "pcdn_cli/commands.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 4) {
    std::cerr << "usage: pcdn-fixtures <out_dir> [points=10000] [seed=1]\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  return pcdn::cli::run_guarded([&] {
    const std::size_t points = argc > 2 ? pcdn::parse_u64(argv[2]) : 10000;
    const std::uint64_t seed = argc > 3 ? pcdn::parse_u64(argv[3]) : 1;
    std::filesystem::create_directories(dir);
    for (const std::string& shape : pcdn::shapes::names()) {
      const auto mesh = pcdn::cli::fixture_mesh(shape);
      pcdn::io::write_mesh(dir / (shape + ".obj"), mesh);
      pcdn::io::write_point_cloud(dir / (shape + ".xyz"),
                                  pcdn::cli::fixture_cloud(shape, points, seed));
      std::cout << "wrote " << (dir / shape).string() << ".{obj,xyz}\n";
    }
  });
}
