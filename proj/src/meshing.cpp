#include "radarfield/meshing.hpp"

#include "radarfield/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace radarfield {

Vec3 TriangleMesh::face_normal(std::size_t t) const {
  const auto& f = triangles.at(t);
  const Vec3& a = vertices[f[0]];
  return (vertices[f[1]] - a).cross(vertices[f[2]] - a);
}

void TriangleMesh::validate() const {
  for (const auto& f : triangles)
    for (auto i : f)
      if (i >= vertices.size()) throw std::invalid_argument("mesh: triangle index out of range");
  if (!normals.empty() && normals.size() != vertices.size())
    throw std::invalid_argument("mesh: normal count does not match vertex count");
  if (!intensities.empty() && intensities.size() != vertices.size())
    throw std::invalid_argument("mesh: intensity count does not match vertex count");
}

MeshTopology mesh_topology(const TriangleMesh& mesh) {
  MeshTopology topo;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& f : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      used[f[k]] = true;
      const auto a = f[k], b = f[(k + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  topo.faces = mesh.triangles.size();
  topo.vertices = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  topo.edges = edges.size();
  for (const auto& [e, n] : edges) {
    if (n == 1) ++topo.boundary_edges;
    if (n > 2) ++topo.nonmanifold_edges;
  }
  return topo;
}

void VoxelGridSpec::validate() const {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("mesh: voxel size must be positive");
  if (!aabb.valid() || !(aabb.extent().array() > 0.0).all()) throw std::invalid_argument("mesh: invalid bounding box");
}

std::array<long, 3> VoxelGridSpec::dims() const {
  const Vec3 e = aabb.extent();
  std::array<long, 3> n{};
  for (int a = 0; a < 3; ++a) n[a] = std::max(1L, static_cast<long>(std::ceil(e[a] / voxel_size - 1e-9)));
  return n;
}

void ModelSdfField::evaluate(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> gradients) const {
  if (parallel_) model_.evaluate_sdf(x, d, gradients);
  else model_.evaluate_sdf_serial(x, d, gradients);
}

void FunctionSdfField::evaluate(std::span<const Vec3> x, std::span<double> d, std::span<Vec3> gradients) const {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    d[i] = value_(x[i]);
    if (gradients.empty()) continue;
    if (gradient_) {
      gradients[i] = gradient_(x[i]);
    } else {
      constexpr double h = 1e-6;
      Vec3 g;
      for (int a = 0; a < 3; ++a) {
        Vec3 p = x[i], m = x[i];
        p[a] += h;
        m[a] -= h;
        g[a] = (value_(p) - value_(m)) / (2.0 * h);
      }
      gradients[i] = g;
    }
  }
}

namespace {

struct Grid {
  std::array<long, 3> n;  // cells per axis
  Vec3 origin;
  double h;

  long corner_id(long i, long j, long k) const { return (k * (n[1] + 1) + j) * (n[0] + 1) + i; }
  long corner_count() const { return (n[0] + 1) * (n[1] + 1) * (n[2] + 1); }
  long cell_id(long i, long j, long k) const { return (k * n[1] + j) * n[0] + i; }
  Vec3 corner(long i, long j, long k) const { return origin + h * Vec3(i, j, k); }
};

std::vector<bool> active_cells(const Grid& g, const VoxelGridSpec& spec, std::span<const Vec3> pts) {
  const long total = g.n[0] * g.n[1] * g.n[2];
  if (pts.empty() || spec.mask_radius <= 0.0) return std::vector<bool>(static_cast<std::size_t>(total), true);
  std::vector<bool> active(static_cast<std::size_t>(total), false);
  const double r = spec.mask_radius, r2 = r * r;
  for (const Vec3& p : pts) {
    std::array<long, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0L, static_cast<long>(std::floor((p[a] - r - g.origin[a]) / g.h - 0.5)));
      hi[a] = std::min(g.n[a] - 1, static_cast<long>(std::ceil((p[a] + r - g.origin[a]) / g.h - 0.5)));
    }
    for (long k = lo[2]; k <= hi[2]; ++k)
      for (long j = lo[1]; j <= hi[1]; ++j)
        for (long i = lo[0]; i <= hi[0]; ++i) {
          const long id = g.cell_id(i, j, k);
          if (active[id]) continue;
          const Vec3 center = g.corner(i, j, k) + Vec3::Constant(0.5 * g.h);
          if ((center - p).squaredNorm() <= r2) active[id] = true;
        }
  }
  return active;
}

struct Key {
  long x, y, z;
  bool operator==(const Key&) const = default;
};
struct KeyHash {
  std::size_t operator()(const Key& k) const {
    return std::hash<long>()(k.x * 73856093L ^ k.y * 19349663L ^ k.z * 83492791L);
  }
};

// Merges vertices closer than `tol`, drops degenerate and collapsed
// triangles, and compacts unreferenced vertices.
void weld(TriangleMesh& mesh, double tol, MeshingStats* stats) {
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> buckets;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  std::size_t merged = 0;
  for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3& p = mesh.vertices[v];
    const Key base{static_cast<long>(std::floor(p.x() / tol)), static_cast<long>(std::floor(p.y() / tol)),
                   static_cast<long>(std::floor(p.z() / tol))};
    std::uint32_t target = v;
    for (long dz = -1; dz <= 1 && target == v; ++dz)
      for (long dy = -1; dy <= 1 && target == v; ++dy)
        for (long dx = -1; dx <= 1 && target == v; ++dx) {
          auto it = buckets.find({base.x + dx, base.y + dy, base.z + dz});
          if (it == buckets.end()) continue;
          for (auto u : it->second)
            if ((mesh.vertices[u] - p).norm() <= tol) {
              target = u;
              break;
            }
        }
    remap[v] = target;
    if (target == v) buckets[base].push_back(v);
    else ++merged;
  }

  std::vector<std::array<std::uint32_t, 3>> tris;
  tris.reserve(mesh.triangles.size());
  std::size_t removed = 0;
  for (auto f : mesh.triangles) {
    for (auto& i : f) i = remap[i];
    const bool collapsed = f[0] == f[1] || f[1] == f[2] || f[0] == f[2];
    const Vec3& a = mesh.vertices[f[0]];
    if (collapsed || 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm() < 1e-12) {
      ++removed;
      continue;
    }
    tris.push_back(f);
  }

  std::vector<std::uint32_t> compact(mesh.vertices.size(), UINT32_MAX);
  std::vector<Vec3> verts;
  for (auto& f : tris)
    for (auto& i : f) {
      if (compact[i] == UINT32_MAX) {
        compact[i] = static_cast<std::uint32_t>(verts.size());
        verts.push_back(mesh.vertices[i]);
      }
      i = compact[i];
    }
  mesh.vertices = std::move(verts);
  mesh.triangles = std::move(tris);
  if (stats) {
    stats->welded_vertices = merged;
    stats->removed_degenerate = removed;
  }
}

}  // namespace

TriangleMesh extract_mesh(const SdfField& field, const VoxelGridSpec& spec, std::span<const Vec3> mask_points,
                          MeshingStats* stats) {
  spec.validate();
  Grid g{spec.dims(), spec.aabb.min, spec.voxel_size};
  const std::vector<bool> active = active_cells(g, spec, mask_points);

  // Corners needed by active cells, in corner-id order.
  std::vector<std::int64_t> slot(static_cast<std::size_t>(g.corner_count()), -1);
  std::vector<Vec3> positions;
  std::size_t active_count = 0;
  for (long k = 0; k < g.n[2]; ++k)
    for (long j = 0; j < g.n[1]; ++j)
      for (long i = 0; i < g.n[0]; ++i) {
        if (!active[g.cell_id(i, j, k)]) continue;
        ++active_count;
        for (int c = 0; c < 8; ++c) slot[g.corner_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))] = 0;
      }
  for (long c = 0; c < g.corner_count(); ++c) {
    if (slot[c] < 0) continue;
    slot[c] = static_cast<std::int64_t>(positions.size());
    const long i = c % (g.n[0] + 1), j = (c / (g.n[0] + 1)) % (g.n[1] + 1), k = c / ((g.n[0] + 1) * (g.n[1] + 1));
    positions.push_back(g.corner(i, j, k));
  }
  std::vector<double> values(positions.size());
  field.evaluate(positions, values, {});
  if (stats) {
    stats->active_cells = active_count;
    stats->evaluated_corners = positions.size();
  }

  TriangleMesh mesh;
  std::unordered_map<long, std::uint32_t> edge_vertex;
  for (long k = 0; k < g.n[2]; ++k)
    for (long j = 0; j < g.n[1]; ++j)
      for (long i = 0; i < g.n[0]; ++i) {
        if (!active[g.cell_id(i, j, k)]) continue;
        std::array<double, 8> v{};
        std::array<long, 8> cid{};
        for (int c = 0; c < 8; ++c) {
          cid[c] = g.corner_id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          v[c] = values[static_cast<std::size_t>(slot[cid[c]])];
        }
        const auto& tris = mc::case_triangles(mc::case_index(v));
        for (const auto& t : tris) {
          std::array<std::uint32_t, 3> f{};
          for (int q = 0; q < 3; ++q) {
            const int e = t[q];
            const int a = mc::kEdgeCorners[e][0], b = mc::kEdgeCorners[e][1];
            const long key = cid[a] * 3 + mc::edge_axis(e);
            auto [it, fresh] = edge_vertex.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (fresh) {
              const Vec3& pa = positions[static_cast<std::size_t>(slot[cid[a]])];
              const Vec3& pb = positions[static_cast<std::size_t>(slot[cid[b]])];
              const double s = v[a] / (v[a] - v[b]);
              mesh.vertices.push_back(pa + s * (pb - pa));
            }
            f[q] = it->second;
          }
          mesh.triangles.push_back(f);
        }
      }

  weld(mesh, 1e-6, stats);

  if (!mesh.vertices.empty()) {
    std::vector<double> d(mesh.vertices.size());
    mesh.normals.resize(mesh.vertices.size());
    field.evaluate(mesh.vertices, d, mesh.normals);
    std::vector<Vec3> area_normals(mesh.vertices.size(), Vec3::Zero());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
      for (auto i : mesh.triangles[t]) area_normals[i] += mesh.face_normal(t);
    for (std::size_t i = 0; i < mesh.normals.size(); ++i) {
      const double len = mesh.normals[i].norm();
      if (len > 1e-12 && std::isfinite(len)) mesh.normals[i] /= len;
      else mesh.normals[i] = area_normals[i].normalized();
    }
  }
  return mesh;
}

Vec3 ViewPolicy::view_dir(const Vec3& vertex, const Vec3& normal) const {
  switch (kind) {
    case Kind::Fixed: return direction.normalized();
    case Kind::Normal: return (-normal).normalized();
    case Kind::TowardSensor: {
      const Vec3 v = vertex - sensor;
      if (v.norm() < 1e-12) throw std::invalid_argument("attach_intensity: vertex coincides with the sensor");
      return v.normalized();
    }
  }
  return direction;
}

void attach_intensity(TriangleMesh& mesh, const IntensityQuery& query, const ViewPolicy& policy) {
  if (policy.kind == ViewPolicy::Kind::Normal && mesh.normals.size() != mesh.vertices.size())
    throw std::invalid_argument("attach_intensity: normal policy needs vertex normals");
  std::vector<Vec3> dirs(mesh.vertices.size());
  for (std::size_t i = 0; i < dirs.size(); ++i)
    dirs[i] = policy.view_dir(mesh.vertices[i], mesh.normals.empty() ? Vec3::UnitZ() : mesh.normals[i]);
  mesh.intensities.assign(mesh.vertices.size(), 0.0);
  query(mesh.vertices, dirs, mesh.intensities);
}

void attach_intensity(TriangleMesh& mesh, const RadarField& model, const ViewPolicy& policy) {
  attach_intensity(
      mesh, [&model](std::span<const Vec3> x, std::span<const Vec3> v, std::span<double> out) {
        model.evaluate_intensity(x, v, out);
      },
      policy);
}

}  // namespace radarfield
