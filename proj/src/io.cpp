#include "radarfield/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace radarfield::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace fs = std::filesystem;

namespace {

enum class RawType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

RawType parse_type(const std::string& t) {
  if (t == "char" || t == "int8") return RawType::Int8;
  if (t == "uchar" || t == "uint8") return RawType::UInt8;
  if (t == "short" || t == "int16") return RawType::Int16;
  if (t == "ushort" || t == "uint16") return RawType::UInt16;
  if (t == "int" || t == "int32") return RawType::Int32;
  if (t == "uint" || t == "uint32") return RawType::UInt32;
  if (t == "float" || t == "float32") return RawType::Float32;
  if (t == "double" || t == "float64") return RawType::Float64;
  throw IoError("PLY: unknown property type '" + t + "'");
}

template <typename T>
T load(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("PLY: unexpected end of binary data");
  return v;
}

double read_binary(std::istream& in, RawType t) {
  switch (t) {
    case RawType::Int8: return load<std::int8_t>(in);
    case RawType::UInt8: return load<std::uint8_t>(in);
    case RawType::Int16: return load<std::int16_t>(in);
    case RawType::UInt16: return load<std::uint16_t>(in);
    case RawType::Int32: return load<std::int32_t>(in);
    case RawType::UInt32: return load<std::uint32_t>(in);
    case RawType::Float32: return load<float>(in);
    case RawType::Float64: return load<double>(in);
  }
  return 0.0;
}

double read_ascii(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw IoError("PLY: unexpected end of ascii data");
  return std::stod(token);
}

struct Property {
  std::string name;
  RawType type = RawType::Float32;
  bool is_list = false;
  RawType count_type = RawType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

template <typename T>
void store(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

const char* type_name(PlyScalar t) {
  switch (t) {
    case PlyScalar::Float32: return "float";
    case PlyScalar::Float64: return "double";
    case PlyScalar::UInt8: return "uchar";
    case PlyScalar::Int32: return "int";
  }
  return "double";
}

void write_value(std::ostream& out, PlyFormat format, PlyScalar t, double v) {
  if (format == PlyFormat::Ascii) {
    switch (t) {
      case PlyScalar::Float32: out << std::setprecision(9) << static_cast<float>(v); break;
      case PlyScalar::Float64: out << std::setprecision(17) << v; break;
      case PlyScalar::UInt8: out << static_cast<int>(static_cast<std::uint8_t>(v)); break;
      case PlyScalar::Int32: out << static_cast<std::int32_t>(v); break;
    }
    return;
  }
  switch (t) {
    case PlyScalar::Float32: store(out, static_cast<float>(v)); break;
    case PlyScalar::Float64: store(out, v); break;
    case PlyScalar::UInt8: store(out, static_cast<std::uint8_t>(v)); break;
    case PlyScalar::Int32: store(out, static_cast<std::int32_t>(v)); break;
  }
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

const std::vector<double>* PlyData::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &columns[i];
  return nullptr;
}

PlyData read_ply(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw IoError("'" + path.string() + "' is not a PLY file");

  PlyData data;
  std::vector<Element> elements;
  bool ascii = false;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") ascii = true;
      else if (fmt != "binary_little_endian") throw IoError("PLY: unsupported format '" + fmt + "'");
    } else if (key == "comment") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      data.comments.push_back(rest);
    } else if (key == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) throw IoError("PLY: property before element");
      Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_type(ct);
        p.type = parse_type(it);
      } else {
        p.type = parse_type(t);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else if (key == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw IoError("PLY: missing end_header in '" + path.string() + "'");

  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex) {
      for (const auto& p : e.properties) {
        if (p.is_list) continue;
        data.names.push_back(p.name);
        data.columns.emplace_back();
        data.columns.back().reserve(e.count);
      }
    }
    for (std::size_t row = 0; row < e.count; ++row) {
      std::size_t col = 0;
      for (const auto& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(ascii ? read_ascii(in) : read_binary(in, p.count_type));
          std::vector<std::uint32_t> idx(n);
          for (auto& v : idx) v = static_cast<std::uint32_t>(ascii ? read_ascii(in) : read_binary(in, p.type));
          if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            if (n < 3) throw IoError("PLY: face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < n; ++k) data.faces.push_back({idx[0], idx[k], idx[k + 1]});
          }
          continue;
        }
        const double v = ascii ? read_ascii(in) : read_binary(in, p.type);
        if (is_vertex) data.columns[col++].push_back(v);
      }
    }
  }
  return data;
}

void write_ply(const fs::path& path, const PlyData& data, std::span<const PlyColumnSpec> types, PlyFormat format) {
  if (types.size() != data.names.size()) throw IoError("write_ply: type list does not match columns");
  std::ofstream out = open_out(path, true);
  out << "ply\n"
      << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
  for (const auto& c : data.comments) out << "comment " << c << "\n";
  const std::size_t n = data.vertex_count();
  out << "element vertex " << n << "\n";
  for (std::size_t i = 0; i < types.size(); ++i) out << "property " << type_name(types[i].type) << " " << data.names[i] << "\n";
  if (!data.faces.empty()) {
    out << "element face " << data.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < types.size(); ++c) {
      if (format == PlyFormat::Ascii && c > 0) out << ' ';
      write_value(out, format, types[c].type, data.columns[c][r]);
    }
    if (format == PlyFormat::Ascii) out << '\n';
  }
  for (const auto& f : data.faces) {
    if (format == PlyFormat::Ascii) {
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    } else {
      store<std::uint8_t>(out, 3);
      for (auto i : f) store<std::int32_t>(out, static_cast<std::int32_t>(i));
    }
  }
  if (!out) throw IoError("write_ply: write failed for '" + path.string() + "'");
}

PointCloudFrame read_frame_ply(const fs::path& path) {
  const PlyData data = read_ply(path);
  const auto* x = data.column("x");
  const auto* y = data.column("y");
  const auto* z = data.column("z");
  const auto* in = data.column("intensity");
  if (!x || !y || !z || !in) throw IoError("PLY '" + path.string() + "' lacks x,y,z,intensity");
  PointCloudFrame frame;
  frame.points.reserve(x->size());
  for (std::size_t i = 0; i < x->size(); ++i) frame.points.emplace_back((*x)[i], (*y)[i], (*z)[i]);
  frame.intensities = *in;
  return frame;
}

void write_frame_ply(const fs::path& path, const PointCloudFrame& frame, PlyFormat format) {
  frame.validate();
  PlyData data;
  data.names = {"x", "y", "z", "intensity"};
  data.columns.assign(4, {});
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (int a = 0; a < 3; ++a) data.columns[a].push_back(frame.points[i][a]);
    data.columns[3].push_back(frame.intensities[i]);
  }
  const std::array<PlyColumnSpec, 4> types{{{"x"}, {"y"}, {"z"}, {"intensity"}}};
  write_ply(path, data, types, format);
}

PointCloudFrame read_xyzi(const fs::path& path) {
  std::ifstream in = open_in(path, false);
  PointCloudFrame frame;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double x, y, z, i;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z >> i)) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 4 values");
    frame.points.emplace_back(x, y, z);
    frame.intensities.push_back(i);
  }
  return frame;
}

void write_xyzi(const fs::path& path, const PointCloudFrame& frame) {
  std::ofstream out = open_out(path, false);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < frame.size(); ++i)
    out << frame.points[i].x() << ' ' << frame.points[i].y() << ' ' << frame.points[i].z() << ' '
        << frame.intensities[i] << '\n';
}

std::vector<StampedPose> read_tum(const fs::path& path) {
  std::ifstream in = open_in(path, false);
  std::vector<StampedPose> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> t)) continue;
    if (!(ls >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 8 values");
    const Quat q(qw, qx, qy, qz);
    if (!(q.norm() > 0.0)) throw IoError(path.string() + ":" + std::to_string(lineno) + ": zero quaternion");
    poses.push_back({t, Pose(q, Vec3(tx, ty, tz))});
  }
  return poses;
}

void write_tum(const fs::path& path, std::span<const StampedPose> poses) {
  std::ofstream out = open_out(path, false);
  out << "# timestamp tx ty tz qx qy qz qw\n" << std::setprecision(17);
  for (const auto& p : poses) {
    const auto& q = p.pose.rotation;
    const auto& t = p.pose.translation;
    out << p.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
        << q.z() << ' ' << q.w() << '\n';
  }
}

std::optional<Pose> associate_pose(std::span<const StampedPose> poses, double timestamp, double max_skew) {
  const StampedPose* best = nullptr;
  double best_skew = max_skew;
  for (const auto& p : poses) {
    const double skew = std::abs(p.timestamp - timestamp);
    if (skew <= best_skew) {
      if (!best || skew < best_skew) best = &p;
      best_skew = skew;
    }
  }
  if (!best) return std::nullopt;
  return best->pose;
}

std::vector<Vec3> read_points(const fs::path& path) {
  const PlyData data = read_ply(path);
  const auto* x = data.column("x");
  const auto* y = data.column("y");
  const auto* z = data.column("z");
  if (!x || !y || !z) throw IoError("PLY '" + path.string() + "' lacks x,y,z");
  std::vector<Vec3> pts;
  pts.reserve(x->size());
  for (std::size_t i = 0; i < x->size(); ++i) pts.emplace_back((*x)[i], (*y)[i], (*z)[i]);
  return pts;
}

void write_points(const fs::path& path, std::span<const Vec3> points) {
  PlyData data;
  data.names = {"x", "y", "z"};
  data.columns.assign(3, {});
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) data.columns[a].push_back(p[a]);
  const std::array<PlyColumnSpec, 3> types{{{"x"}, {"y"}, {"z"}}};
  write_ply(path, data, types);
}

void write_mesh_ply(const fs::path& path, const TriangleMesh& mesh, MeshColor color) {
  mesh.validate();
  PlyData data;
  std::vector<PlyColumnSpec> types;
  auto add = [&](const std::string& name, PlyScalar t) {
    data.names.push_back(name);
    data.columns.emplace_back();
    types.push_back({name, t});
  };
  add("x", PlyScalar::Float32);
  add("y", PlyScalar::Float32);
  add("z", PlyScalar::Float32);
  const bool has_normals = !mesh.normals.empty();
  const bool has_intensity = !mesh.intensities.empty();
  const bool colored = color == MeshColor::Normals && has_normals;
  if (has_normals) {
    add("nx", PlyScalar::Float32);
    add("ny", PlyScalar::Float32);
    add("nz", PlyScalar::Float32);
  }
  if (has_intensity) add("intensity", PlyScalar::Float32);
  if (colored) {
    add("red", PlyScalar::UInt8);
    add("green", PlyScalar::UInt8);
    add("blue", PlyScalar::UInt8);
  }
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    std::size_t c = 0;
    for (int a = 0; a < 3; ++a) data.columns[c++].push_back(mesh.vertices[i][a]);
    if (has_normals)
      for (int a = 0; a < 3; ++a) data.columns[c++].push_back(mesh.normals[i][a]);
    if (has_intensity) data.columns[c++].push_back(mesh.intensities[i]);
    if (colored) {
      const Vec3 n = mesh.normals[i].normalized();
      for (int a = 0; a < 3; ++a) data.columns[c++].push_back(std::round((0.5 * n[a] + 0.5) * 255.0));
    }
  }
  data.faces = mesh.triangles;
  write_ply(path, data, types);
}

TriangleMesh read_mesh_ply(const fs::path& path) {
  PlyData data = read_ply(path);
  TriangleMesh mesh;
  mesh.vertices = read_points(path);
  const auto* nx = data.column("nx");
  const auto* ny = data.column("ny");
  const auto* nz = data.column("nz");
  if (nx && ny && nz)
    for (std::size_t i = 0; i < nx->size(); ++i) mesh.normals.emplace_back((*nx)[i], (*ny)[i], (*nz)[i]);
  if (const auto* in = data.column("intensity")) mesh.intensities = *in;
  mesh.triangles = std::move(data.faces);
  mesh.validate();
  return mesh;
}

void write_dataset(const fs::path& dir, std::span<const PointCloudFrame> frames) {
  fs::create_directories(dir / "frames");
  std::ostringstream index;
  index << std::setprecision(17);
  std::vector<StampedPose> poses;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::ostringstream name;
    name << "frames/frame_" << std::setw(6) << std::setfill('0') << i << ".ply";
    write_frame_ply(dir / name.str(), frames[i]);
    index << frames[i].timestamp << ' ' << name.str() << '\n';
    poses.push_back({frames[i].timestamp, frames[i].sensor_pose});
  }
  write_text(dir / "frames.txt", index.str());
  write_tum(dir / "poses.txt", poses);
}

Dataset read_dataset(const fs::path& dir, double max_pose_skew) {
  const auto poses = read_tum(dir / "poses.txt");
  std::ifstream in = open_in(dir / "frames.txt", false);
  Dataset ds;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double t;
    std::string rel;
    if (!(ls >> t >> rel)) continue;
    const fs::path file = dir / rel;
    PointCloudFrame frame = file.extension() == ".ply" ? read_frame_ply(file) : read_xyzi(file);
    frame.timestamp = t;
    auto pose = associate_pose(poses, t, max_pose_skew);
    if (!pose) throw IoError("no pose within " + std::to_string(max_pose_skew) + " s of frame '" + rel + "'");
    frame.sensor_pose = *pose;
    ds.frames.push_back(std::move(frame));
  }
  return ds;
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path, true);
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace radarfield::io
