#include "pcdn/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pcdn/error.hpp"
#include "pcdn/text.hpp"

namespace pcdn::io {
namespace {

constexpr int kDigits = 9;

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

double parse_coord(std::string_view token, std::size_t line) {
  double v = 0.0;
  try {
    v = parse_double(token);
  } catch (const ParseError&) {
    throw ParseError("malformed number '" + std::string(token) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite coordinate", line);
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<unsigned char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ParseError("truncated weights file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw ParseError("truncated weights file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

CloudFormat cloud_format_for(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::xyz;
  if (ext == ".ply") return CloudFormat::ply;
  throw InvalidInput("cannot infer point cloud format from '" + path.string() +
                     "' (expected .xyz, .txt or .ply)");
}

PointCloud read_xyz(std::istream& in) {
  std::vector<Vec3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tokens = split_whitespace(t);
    if (tokens.size() != 3)
      throw ParseError("expected 3 coordinates, found " + std::to_string(tokens.size()), line_no);
    pts.push_back({parse_coord(tokens[0], line_no), parse_coord(tokens[1], line_no),
                   parse_coord(tokens[2], line_no)});
  }
  if (pts.empty()) throw ParseError("point cloud file contains no points");
  return PointCloud(std::move(pts));
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next_line() || trim(line) != "ply") throw ParseError("missing 'ply' magic", 1);

  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false, ascii = false;
  std::vector<std::string> props;
  std::vector<std::string> unsupported;
  while (true) {
    if (!next_line()) throw ParseError("unterminated PLY header", line_no);
    const auto tok = split_whitespace(trim(line));
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii")
        throw ParseError("only ASCII PLY is supported", line_no);
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line", line_no);
      in_vertex = tok[1] == "vertex";
      const std::uint64_t count = parse_u64(tok[2]);
      if (in_vertex) {
        vertex_count = count;
        seen_vertex = true;
      } else if (count != 0) {
        throw ParseError("unsupported PLY element '" + std::string(tok[1]) + "'", line_no);
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      if (tok.size() != 3) {
        unsupported.push_back(std::string(trim(line)));
        continue;
      }
      const std::string type(tok[1]);
      const std::string name(tok[2]);
      const bool is_float = type == "float" || type == "double" || type == "float32" ||
                            type == "float64";
      if (!is_float || (name != "x" && name != "y" && name != "z"))
        unsupported.push_back(type + " " + name);
      props.push_back(name);
    } else {
      throw ParseError("unexpected PLY header line", line_no);
    }
  }
  if (!ascii) throw ParseError("PLY header lacks a format line");
  if (!unsupported.empty()) {
    std::string list;
    for (const auto& u : unsupported) list += (list.empty() ? "" : ", ") + u;
    throw ParseError("unsupported PLY vertex properties: " + list);
  }
  if (!seen_vertex || vertex_count == 0) throw ParseError("PLY has no vertices");
  std::array<int, 3> slot{-1, -1, -1};
  for (std::size_t i = 0; i < props.size(); ++i) {
    const int axis = props[i] == "x" ? 0 : (props[i] == "y" ? 1 : 2);
    if (slot[axis] >= 0) throw ParseError("duplicate PLY property '" + props[i] + "'");
    slot[axis] = static_cast<int>(i);
  }
  if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
    throw ParseError("PLY vertex element needs x, y and z");

  std::vector<Vec3> pts;
  pts.reserve(vertex_count);
  while (pts.size() < vertex_count) {
    if (!next_line()) throw ParseError("PLY ends before all vertices were read", line_no);
    const auto tok = split_whitespace(trim(line));
    if (tok.empty()) continue;
    if (tok.size() != props.size())
      throw ParseError("expected " + std::to_string(props.size()) + " values", line_no);
    pts.push_back({parse_coord(tok[static_cast<std::size_t>(slot[0])], line_no),
                   parse_coord(tok[static_cast<std::size_t>(slot[1])], line_no),
                   parse_coord(tok[static_cast<std::size_t>(slot[2])], line_no)});
  }
  return PointCloud(std::move(pts));
}

PointCloud read_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  auto in = open_in(path);
  try {
    return format == CloudFormat::xyz ? read_xyz(in) : read_ply(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  return read_point_cloud(path, cloud_format_for(path));
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  std::string buf;
  for (const Vec3& p : cloud) {
    buf.clear();
    buf += format_double(p.x, kDigits);
    buf += ' ';
    buf += format_double(p.y, kDigits);
    buf += ' ';
    buf += format_double(p.z, kDigits);
    buf += '\n';
    out << buf;
  }
}

void write_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  write_xyz(out, cloud);
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                       CloudFormat format) {
  auto out = open_out(path);
  if (format == CloudFormat::xyz) write_xyz(out, cloud);
  else write_ply(out, cloud);
  finish(out, path);
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  write_point_cloud(path, cloud, cloud_format_for(path));
}

MeshReadResult read_obj(std::istream& in) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::string line;
  std::size_t line_no = 0;
  std::size_t face_no = 0;
  std::vector<std::int64_t> poly;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tok = split_whitespace(t);
    if (tok[0] == "v") {
      if (tok.size() < 4 || tok.size() > 5) throw ParseError("malformed vertex record", line_no);
      verts.push_back({parse_coord(tok[1], line_no), parse_coord(tok[2], line_no),
                       parse_coord(tok[3], line_no)});
    } else if (tok[0] == "f") {
      ++face_no;
      if (tok.size() < 4) throw ParseError("face needs at least 3 vertices", line_no);
      poly.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string_view idx = tok[i].substr(0, tok[i].find('/'));
        std::int64_t v = 0;
        try {
          v = parse_i64(idx);
        } catch (const ParseError&) {
          throw ParseError("malformed face index in face " + std::to_string(face_no), line_no);
        }
        const auto count = static_cast<std::int64_t>(verts.size());
        const std::int64_t zero_based = v > 0 ? v - 1 : count + v;
        if (v == 0 || zero_based < 0 || zero_based >= count)
          throw ParseError("vertex index " + std::to_string(v) + " out of range in face " +
                               std::to_string(face_no),
                           line_no);
        poly.push_back(zero_based);
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        faces.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[i]),
                         static_cast<std::uint32_t>(poly[i + 1])});
    }
    // vt, vn, o, g, s, usemtl, mtllib: ignored.
  }
  if (faces.empty()) throw ParseError("OBJ contains no faces");
  TriangleMesh mesh(std::move(verts), std::move(faces));
  const std::size_t dropped = mesh.dropped_faces();
  return {std::move(mesh), dropped};
}

MeshReadResult read_mesh(const std::filesystem::path& path) {
  if (lower(path.extension().string()) != ".obj")
    throw InvalidInput("unsupported mesh format '" + path.string() + "' (expected .obj)");
  auto in = open_in(path);
  try {
    return read_obj(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  for (const Vec3& v : mesh.vertices())
    out << "v " << format_double(v.x, kDigits) << ' ' << format_double(v.y, kDigits) << ' '
        << format_double(v.z, kDigits) << '\n';
  for (const Face& f : mesh.faces())
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path);
  write_obj(out, mesh);
  finish(out, path);
}

void write_weights(std::ostream& out, const NetworkWeights& w) {
  out.write("N2S3", 4);
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<std::uint32_t>(NetworkWeights::kLayers));
  for (std::size_t l = 0; l < NetworkWeights::kLayers; ++l) {
    const auto s = w.shape(l);
    put_u32(out, static_cast<std::uint32_t>(s.rows));
    put_u32(out, static_cast<std::uint32_t>(s.cols));
  }
  for (double v : w.params()) put_f64(out, v);
}

NetworkWeights read_weights(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "N2S3", 4) != 0)
    throw ParseError("not a weights file (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kWeightsVersion)
    throw ParseError("unsupported weights version " + std::to_string(version));
  const std::uint32_t layers = get_u32(in);
  if (layers != NetworkWeights::kLayers)
    throw ParseError("expected " + std::to_string(NetworkWeights::kLayers) + " layers, found " +
                     std::to_string(layers));
  std::vector<NetworkWeights::LayerShape> shapes(layers);
  for (auto& s : shapes) {
    s.rows = get_u32(in);
    s.cols = get_u32(in);
  }
  const std::size_t hidden = shapes[0].rows;
  if (hidden == 0) throw ParseError("weights file declares zero hidden width");
  NetworkWeights w(hidden);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto expect = w.shape(l);
    if (shapes[l].rows != expect.rows || shapes[l].cols != expect.cols)
      throw ParseError("layer " + std::to_string(l) + " has inconsistent dimensions");
  }
  for (double& v : w.params()) {
    v = get_f64(in);
    if (!std::isfinite(v)) throw ParseError("weights file contains a non-finite value");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in weights file");
  return w;
}

void write_weights(const std::filesystem::path& path, const NetworkWeights& w) {
  auto out = open_out(path, true);
  write_weights(out, w);
  finish(out, path);
}

NetworkWeights read_weights(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_weights(in);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  auto put_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  put_row(header);
  for (const auto& r : rows) put_row(r);
  finish(out, path);
}

}  // namespace pcdn::io
