#pragma once
// summed-area table over grid cells: O(1) sums over axis-aligned cell
// rectangles, used for fast cube averages and cube-intersection sums

#include "sdom/lattice.hpp"

namespace sdom {

struct CellSum {
  int nx = 0, ny = 0;
  std::vector<double> s; // (nx+1) * (ny+1), s[y][x] = sum over cells [0,x) x [0,y)

  CellSum() = default;
  CellSum(const Grid& g, const GridFn& f) { build(g, f); }

  void build(const Grid& g, const GridFn& f) {
    nx = g.nx;
    ny = g.ny;
    s.assign(std::size_t(nx + 1) * (ny + 1), 0.0);
    for (int y = 0; y < ny; ++y) {
      double row = 0.0;
      for (int x = 0; x < nx; ++x) {
        row += f[std::size_t(y) * nx + x];
        s[std::size_t(y + 1) * (nx + 1) + (x + 1)] = s[std::size_t(y) * (nx + 1) + (x + 1)] + row;
      }
    }
  }

  double rect(std::int64_t x0, std::int64_t x1, std::int64_t y0, std::int64_t y1) const {
    if (x0 >= x1 || y0 >= y1) return 0.0;
    auto at = [&](std::int64_t y, std::int64_t x) { return s[std::size_t(y) * (nx + 1) + x]; };
    return at(y1, x1) - at(y0, x1) - at(y1, x0) + at(y0, x0);
  }

  double over(const CubeGeo& q) const {
    double acc = 0.0;
    for (int ry = 0; ry < 2; ++ry)
      for (int rx = 0; rx < 2; ++rx)
        acc += rect(q.ax[0].lo[rx], q.ax[0].hi[rx], q.ax[1].lo[ry], q.ax[1].hi[ry]);
    return acc;
  }
};

// intersection of two per-axis member range sets (at most 4 pieces)
struct AxisRanges {
  int n = 0;
  std::int32_t lo[4];
  std::int32_t hi[4];
};

inline AxisRanges intersect_axis(const AxisSpan& a, const AxisSpan& b) {
  AxisRanges r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      std::int32_t lo = a.lo[i] > b.lo[j] ? a.lo[i] : b.lo[j];
      std::int32_t hi = a.hi[i] < b.hi[j] ? a.hi[i] : b.hi[j];
      if (lo < hi) {
        r.lo[r.n] = lo;
        r.hi[r.n] = hi;
        ++r.n;
      }
    }
  return r;
}

} // namespace sdom
