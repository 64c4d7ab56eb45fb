#pragma once

#include <array>
#include <vector>

namespace radarfield::mc {

// Cube corner c sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1). Edges 0-3 run
// along x, 4-7 along y, 8-11 along z.
inline constexpr std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},
    {0, 2}, {1, 3}, {4, 6}, {5, 7},
    {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

inline int edge_axis(int edge) { return edge / 4; }

/// Bit c is set when corner c is on the negative side (value < 0).
int case_index(const std::array<double, 8>& values);

/// Triangles (as edge triples) for one of the 256 sign configurations,
/// ordered so that the right-hand normal points toward the positive side.
/// Faces with four crossings always separate the two negative corners, so
/// neighbouring cubes agree on their shared face and the surface is closed.
const std::vector<std::array<int, 3>>& case_triangles(int case_index);

}  // namespace radarfield::mc
