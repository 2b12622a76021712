#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nlfem/cmap.hpp"

namespace nlfem {

// Raw simplicial mesh: the box [0,1]^n (region 0) surrounded by a structured
// constraint layer (region 1) wide enough to hold every interaction ball.
struct MeshData {
  int n = 2;
  std::vector<Vec> coords;
  std::vector<std::array<Index, 4>> cells;
  std::vector<std::uint8_t> region;
};

// Structured mesh at grid resolution `res` with layer width
// L = ceil(delta*res - 1e-9) cells, covering cube indices [-L, res+L)^n.
// 2D cubes split into two triangles along a fixed diagonal; 3D cubes into six
// positively oriented tetrahedra. Cells of a cube are consecutive, cubes in
// x-fastest order.
MeshData generate_mesh(int n, int res, double delta);

// Index of the cell containing p in a mesh produced by generate_mesh with the
// same (res, delta); clamps p into the covered box first.
Index structured_locate(const MeshData& md, int res, double delta, Vec p);

// Free-standing grid patch covering cube indices [lo, hi)^n with pitch h and
// corners at integer multiples of h, split like generate_mesh but with every
// cell tagged region 0.
MeshData patch_mesh(int n, Index lo, Index hi, double h);

// Cell containing p in a mesh produced by patch_mesh with the same
// (lo, hi, h); clamps p into the covered box first.
Index patch_locate(const MeshData& md, Index lo, Index hi, double h, Vec p);

// Text format:
//   nlfem-mesh v1 dim=<n>
//   vertices <count>
//   <x> <y> [<z>]          (count lines)
//   cells <count>
//   <v0> ... <vn> <region> (count lines)
// Read errors throw BadMeshFile naming the offending line.
MeshData read_mesh(std::istream& in);
MeshData read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const MeshData& m);
void write_mesh_file(const std::string& path, const MeshData& m);

struct HStats {
  double h_avg = 0;
  double h_min = 0;
  double h_max = 0;
};

// Edge-length statistics over the mesh's 1-cells.
HStats mesh_h_stats(const CMap& m);

}  // namespace nlfem
