#pragma once
// Dyadic grids on [-L,L)^n (n = 1 or 2) plus the shifted "one-third" cube
// lattices on the tripled extended domain, realized as arcs on a periodic
// extension. All geometry is exact: coordinates live in integer units of
// cell/3 (the finest granularity at which shifted cube corners land), and a
// cube's measure is (number of member cells) * cell volume, where a cell
// belongs to a cube iff the cell center lies inside it.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sdom {

using GridFn = std::vector<double>;  // one value per cell, row-major

struct Grid {
  int dim = 1;             // 1 or 2
  double half_width = 1.0; // L: base domain is [-L, L)^dim
  int level = 0;           // m: 2^m cells per side
  int nx = 1;              // cells per side
  int ny = 1;              // nx for dim==2, else 1
  std::int64_t ncells = 1;
  double h = 2.0;          // cell side
  double hvol = 2.0;       // h^dim

  // integer unit system: one unit = h/3 along each axis. The base domain is
  // [0, 3*nx) units per axis; the extended (tripled) domain is the torus
  // [-3*nx, 6*nx) of circumference 9*nx.
  std::int64_t units() const { return 3LL * nx; }
  std::int64_t torus() const { return 9LL * nx; }

  std::int64_t cell_id(std::int64_t cx, std::int64_t cy) const { return cy * nx + cx; }
  double x_of(std::int64_t cx) const { return -half_width + (double(cx) + 0.5) * h; }
  double y_of(std::int64_t cy) const { return -half_width + (double(cy) + 0.5) * h; }
};

// level cap guards against runaway allocations; pass max_level < 0 for the
// default cap (14 in 1D, 9 in 2D)
Grid build_grid(int dim, double half_width, int level, int max_level = -1);

// lat == -1: the base dyadic lattice on [-L,L)^dim, index idx[a] in [0, 2^level).
// lat in [0, 3^dim): shifted lattice with per-axis offset components
// k0 = lat % 3, k1 = lat / 3; index is the arc index in [0, 2^level) per axis.
struct Cube {
  int lat = -1;
  int level = 0;
  std::array<std::int32_t, 2> idx{0, 0};

  friend bool operator==(const Cube&, const Cube&) = default;
  friend auto operator<=>(const Cube&, const Cube&) = default;
};

// up to two half-open cell-index ranges per axis (a shifted cube can wrap
// around the periodic extension, meeting the base domain in two runs)
struct AxisSpan {
  std::int32_t lo[2]{0, 0};
  std::int32_t hi[2]{0, 0};
  std::int64_t count() const {
    return (std::int64_t(hi[0]) - lo[0]) + (std::int64_t(hi[1]) - lo[1]);
  }
};

struct CubeGeo {
  Cube c;
  std::int64_t start_u[2]{0, 0}; // arc start per axis, torus representative in [-3nx, 6nx)
  std::int64_t side_u = 0;       // arc length per axis, in units (capped at the circumference)
  AxisSpan ax[2];                // member cells of the base grid, per axis
  std::int64_t ncell = 0;        // total member cells (product over axes)
};

// the scan family: every base-lattice cube (levels 0..m) followed by every
// shifted-lattice cube with at least one member cell, in a fixed order
struct Domain {
  Grid g;
  std::vector<CubeGeo> cubes;
  std::int64_t n_base = 0; // cubes[0..n_base) are the base-lattice cubes

  const CubeGeo& base_geo(int level, std::int64_t jx, std::int64_t jy) const;
  std::int64_t base_index(int level, std::int64_t jx, std::int64_t jy) const;
};

Domain build_domain(const Grid& g);

int lattice_count(const Grid& g); // 3^dim

// geometry of an arbitrary cube (valid lat/level/idx for this grid)
CubeGeo make_geo(const Grid& g, const Cube& c);

// geometry of the tripled cube 3Q (same center, three times the side),
// as an arc on the periodic extension
CubeGeo tripled_geo(const Grid& g, const Cube& c);

// the 2^dim children of a cube one level down; error if already at the
// finest level
std::vector<Cube> dyadic_children(const Grid& g, const Cube& c);

// ancestor at a coarser level within the same lattice
Cube ancestor_of(const Grid& g, const Cube& c, int level);

// true iff inner's member-cell set is contained in outer's
bool cube_contains(const Grid& g, const CubeGeo& outer, const CubeGeo& inner);

// smallest shifted-lattice cube R with 3Q inside it, searching the same
// level first, then one coarser, lowest lattice id winning ties. By
// construction the exact match at the same level always exists.
Cube shifted_parent(const Grid& g, const Cube& base_cube);

// "lat:level:ix" (1D)  /  "lat:level:ix,iy" (2D); lat == -1 is the base lattice
std::string cube_to_string(const Cube& c, int dim);
Cube parse_cube(const std::string& s, const Grid& g);

// iterate member cells in ascending cell-id order
template <class F>
inline void for_each_cell(const Grid& g, const CubeGeo& q, F&& f) {
  const AxisSpan& X = q.ax[0];
  const AxisSpan& Y = q.ax[1];
  for (int ry = 0; ry < 2; ++ry)
    for (std::int32_t cy = Y.lo[ry]; cy < Y.hi[ry]; ++cy)
      for (int rx = 0; rx < 2; ++rx)
        for (std::int32_t cx = X.lo[rx]; cx < X.hi[rx]; ++cx)
          f(std::int64_t(cy) * g.nx + cx, cx, cy);
}

struct SparseFamily {
  int lattice_id = -1; // -1 base, else shifted lattice id
  double eta = 0.5;
  std::vector<Cube> cubes;
  // witness: for each cube, the claimed pairwise-disjoint member cells
  // (filled by verify_sparse on success)
  std::vector<std::vector<std::int64_t>> witness;
};

// checks eta-sparseness by exhibiting disjoint subsets E_Q with
// |E_Q| >= eta * |Q|: processes cubes smallest first and claims the
// lowest-index free cells. Exact for nested (laminar) families. Fills
// family.witness and returns true on success.
bool verify_sparse(const Domain& dom, SparseFamily& family, double eta);

// Carleson packing: for every Q in the family,
// sum of |Q'| over family cubes Q' contained in Q is at most |Q| / eta
bool carleson_packing_ok(const Domain& dom, const SparseFamily& family, double eta);

} // namespace sdom
