#include "radarfield/marching_cubes.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <stdexcept>

namespace radarfield::mc {

namespace {

using V3 = Eigen::Vector3d;

V3 corner_pos(int c) { return V3(c & 1, (c >> 1) & 1, (c >> 2) & 1); }

V3 edge_mid(int e) { return 0.5 * (corner_pos(kEdgeCorners[e][0]) + corner_pos(kEdgeCorners[e][1])); }

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e)
    if ((kEdgeCorners[e][0] == a && kEdgeCorners[e][1] == b) || (kEdgeCorners[e][0] == b && kEdgeCorners[e][1] == a))
      return e;
  throw std::logic_error("marching cubes: corners are not adjacent");
}

struct Face {
  std::array<int, 4> corners;  // cyclic
  V3 normal;                   // outward
};

std::array<Face, 6> make_faces() {
  std::array<Face, 6> faces;
  int f = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3, c = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      Face face;
      const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
      for (int k = 0; k < 4; ++k)
        face.corners[k] = (side << axis) | (uv[k][0] << b) | (uv[k][1] << c);
      face.normal = V3::Zero();
      face.normal[axis] = side ? 1.0 : -1.0;
      faces[f++] = face;
    }
  }
  return faces;
}

// Orients a segment between two edge crossings so the negative corner lies on
// its left when viewed from outside the cube.
std::array<int, 2> oriented(int e1, int e2, int negative_corner, const V3& normal) {
  const V3 p = edge_mid(e1), q = edge_mid(e2);
  const double s = (q - p).cross(corner_pos(negative_corner) - p).dot(normal);
  return s > 0.0 ? std::array<int, 2>{e1, e2} : std::array<int, 2>{e2, e1};
}

// Bitmask of the (up to two) cube faces an edge lies on; face index = 2 * axis + side.
int edge_faces(int e) {
  const int axis = edge_axis(e);
  const int c = kEdgeCorners[e][0];
  int mask = 0;
  for (int a = 0; a < 3; ++a)
    if (a != axis) mask |= 1 << (2 * a + ((c >> a) & 1));
  return mask;
}

bool coplanar_with_face(int e1, int e2, int e3) { return (edge_faces(e1) & edge_faces(e2) & edge_faces(e3)) != 0; }

// A diagonal between two crossings on the same cube face lies inside that
// face, where the neighbouring cube may pick the same diagonal.
bool valid_diagonal(const std::vector<int>& loop, std::size_t i, std::size_t j) {
  const std::size_t n = loop.size();
  if (j == i + 1 || (i == 0 && j == n - 1)) return true;
  return (edge_faces(loop[i]) & edge_faces(loop[j])) == 0;
}

// Triangulates loop[lo..hi] (a sub-polygon closed by the chord hi -> lo) so
// that no triangle lies inside a cube face and no diagonal runs along one.
// Either would be emitted by the neighbouring cube as well and make the
// shared edges non-manifold.
bool triangulate(const std::vector<int>& loop, std::size_t lo, std::size_t hi, std::vector<std::array<int, 3>>& out) {
  if (hi - lo < 2) return true;
  const std::size_t mark = out.size();
  // Prefer apexes near the middle for better-shaped triangles.
  std::vector<std::size_t> apex;
  for (std::size_t k = lo + 1; k < hi; ++k) apex.push_back(k);
  const std::size_t mid = (lo + hi) / 2;
  std::stable_sort(apex.begin(), apex.end(), [mid](std::size_t a, std::size_t b) {
    return (a > mid ? a - mid : mid - a) < (b > mid ? b - mid : mid - b);
  });
  for (std::size_t k : apex) {
    if (coplanar_with_face(loop[lo], loop[k], loop[hi])) continue;
    if (!valid_diagonal(loop, lo, k) || !valid_diagonal(loop, k, hi)) continue;
    out.push_back({loop[lo], loop[hi], loop[k]});
    if (triangulate(loop, lo, k, out) && triangulate(loop, k, hi, out)) return true;
    out.resize(mark);
  }
  return false;
}

std::vector<std::array<int, 3>> build_case(int index, const std::array<Face, 6>& faces) {
  auto negative = [index](int c) { return ((index >> c) & 1) != 0; };
  std::array<int, 12> next;
  next.fill(-1);
  auto link = [&next](const std::array<int, 2>& seg) {
    if (next[seg[0]] != -1) throw std::logic_error("marching cubes: inconsistent segment orientation");
    next[seg[0]] = seg[1];
  };
  for (const Face& face : faces) {
    std::vector<int> crossing;
    int neg_corner = -1;
    for (int k = 0; k < 4; ++k) {
      const int a = face.corners[k], b = face.corners[(k + 1) % 4];
      if (negative(a) != negative(b)) crossing.push_back(edge_between(a, b));
      if (negative(a)) neg_corner = a;
    }
    if (crossing.empty()) continue;
    if (crossing.size() == 2) {
      link(oriented(crossing[0], crossing[1], neg_corner, face.normal));
      continue;
    }
    // Four crossings: two diagonal negative corners, each cut off on its own.
    for (int k = 0; k < 4; ++k) {
      const int c = face.corners[k];
      if (!negative(c)) continue;
      const int prev = face.corners[(k + 3) % 4], nxt = face.corners[(k + 1) % 4];
      link(oriented(edge_between(prev, c), edge_between(c, nxt), c, face.normal));
    }
  }

  std::vector<std::array<int, 3>> tris;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] == -1 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      if (next[e] == -1) throw std::logic_error("marching cubes: open loop");
      used[e] = true;
      loop.push_back(e);
    }
    // The loop runs counter-clockwise around the negative part of the cube
    // boundary; triangulate() emits (lo, hi, apex), i.e. reversed order, so
    // the surface normal points to the positive side.
    if (!triangulate(loop, 0, loop.size() - 1, tris))
      throw std::logic_error("marching cubes: no valid triangulation");
  }
  return tris;
}

const std::array<std::vector<std::array<int, 3>>, 256>& table() {
  static const std::array<std::vector<std::array<int, 3>>, 256> t = [] {
    const auto faces = make_faces();
    std::array<std::vector<std::array<int, 3>>, 256> out;
    for (int i = 0; i < 256; ++i) out[i] = build_case(i, faces);
    return out;
  }();
  return t;
}

}  // namespace

int case_index(const std::array<double, 8>& values) {
  int index = 0;
  for (int c = 0; c < 8; ++c)
    if (values[c] < 0.0) index |= 1 << c;
  return index;
}

const std::vector<std::array<int, 3>>& case_triangles(int index) {
  if (index < 0 || index > 255) throw std::out_of_range("marching cubes: case index out of range");
  return table()[index];
}

}  // namespace radarfield::mc
