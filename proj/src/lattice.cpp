#include "sdom/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdom {

namespace {

std::int64_t imod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

// torus representative in [-3nx, 6nx)
std::int64_t torus_rep(const Grid& g, std::int64_t u) {
  return imod(u + 3LL * g.nx, g.torus()) - 3LL * g.nx;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// per-axis arc anchor of shifted lattice component k at a level: the offset
// alternates sign with the level so consecutive levels nest exactly
std::int64_t anchor(const Grid& g, int k, int level) {
  std::int64_t third = 3LL << (g.level - level); // one third of the arc length... of the base cube side
  std::int64_t sgn = (level % 2 == 0) ? 1 : -1;
  return -3LL * g.nx + sgn * k * third;
}

std::int64_t arc_side(const Grid& g, int level) { return 9LL << (g.level - level); }
std::int64_t base_side(const Grid& g, int level) { return 3LL << (g.level - level); }

// cells of the base grid whose centers fall in the arc [start, start+side)
// on the torus; start must be a representative in [-3nx, 6nx)
AxisSpan span_of_arc(const Grid& g, std::int64_t start, std::int64_t side) {
  const std::int64_t C = g.nx;
  AxisSpan sp;
  int nr = 0;
  std::int64_t a[2] = {start, start - g.torus()};
  for (int p = 0; p < 2; ++p) {
    // cell c has center 3c + 1.5; centers in [lo, hi) <=> c in [ceil((2lo-3)/6), ...)
    std::int64_t lo = floor_div(2 * a[p] + 3, 6);
    std::int64_t hi = floor_div(2 * (a[p] + side) + 3, 6);
    lo = std::max<std::int64_t>(lo, 0);
    hi = std::min<std::int64_t>(hi, C);
    if (lo < hi) {
      sp.lo[nr] = std::int32_t(lo);
      sp.hi[nr] = std::int32_t(hi);
      ++nr;
    }
  }
  if (nr == 2 && sp.lo[0] > sp.lo[1]) {
    std::swap(sp.lo[0], sp.lo[1]);
    std::swap(sp.hi[0], sp.hi[1]);
  }
  if (nr == 2 && sp.hi[0] == sp.lo[1]) { // merge abutting runs
    sp.hi[0] = sp.hi[1];
    sp.lo[1] = sp.hi[1] = 0;
  }
  return sp;
}

void check_cube(const Grid& g, const Cube& c) {
  int nlat = lattice_count(g);
  if (c.lat < -1 || c.lat >= nlat)
    throw std::invalid_argument("cube lattice id out of range");
  if (c.level < 0 || c.level > g.level)
    throw std::invalid_argument("cube level out of range");
  std::int64_t n = 1LL << c.level;
  for (int a = 0; a < g.dim; ++a)
    if (c.idx[a] < 0 || c.idx[a] >= n)
      throw std::invalid_argument("cube index out of range");
}

CubeGeo geo_of_arcs(const Grid& g, const Cube& c, const std::int64_t start[2], std::int64_t side) {
  CubeGeo geo;
  geo.c = c;
  geo.side_u = std::min(side, g.torus());
  geo.ncell = 1;
  for (int a = 0; a < 2; ++a) {
    if (a < g.dim) {
      geo.start_u[a] = torus_rep(g, start[a]);
      geo.ax[a] = span_of_arc(g, geo.start_u[a], geo.side_u);
    } else {
      geo.start_u[a] = 0;
      geo.ax[a] = AxisSpan{};
      geo.ax[a].lo[0] = 0;
      geo.ax[a].hi[0] = 1; // dummy row so 1D iteration sees cy == 0
    }
    geo.ncell *= geo.ax[a].count();
  }
  return geo;
}

} // namespace

Grid build_grid(int dim, double half_width, int level, int max_level) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw std::invalid_argument("half_width must be positive and finite");
  if (level < 0) throw std::invalid_argument("level must be nonnegative");
  int cap = max_level >= 0 ? max_level : (dim == 1 ? 14 : 9);
  if (level > cap) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "level %d exceeds memory cap %d", level, cap);
    throw std::invalid_argument(buf);
  }
  Grid g;
  g.dim = dim;
  g.half_width = half_width;
  g.level = level;
  g.nx = 1 << level;
  g.ny = dim == 2 ? g.nx : 1;
  g.ncells = std::int64_t(g.nx) * g.ny;
  g.h = 2.0 * half_width / double(g.nx);
  g.hvol = dim == 2 ? g.h * g.h : g.h;
  return g;
}

int lattice_count(const Grid& g) { return g.dim == 2 ? 9 : 3; }

CubeGeo make_geo(const Grid& g, const Cube& c) {
  check_cube(g, c);
  std::int64_t start[2];
  std::int64_t side;
  if (c.lat < 0) {
    side = base_side(g, c.level);
    for (int a = 0; a < g.dim; ++a) start[a] = std::int64_t(c.idx[a]) * side;
  } else {
    side = arc_side(g, c.level);
    int k[2] = {c.lat % 3, c.lat / 3};
    for (int a = 0; a < g.dim; ++a)
      start[a] = anchor(g, k[a], c.level) + std::int64_t(c.idx[a]) * side;
  }
  if (g.dim == 1) start[1] = 0;
  return geo_of_arcs(g, c, start, side);
}

CubeGeo tripled_geo(const Grid& g, const Cube& c) {
  check_cube(g, c);
  CubeGeo q = make_geo(g, c);
  std::int64_t side = (c.lat < 0) ? base_side(g, c.level) : arc_side(g, c.level);
  std::int64_t start[2] = {q.start_u[0] - side, q.start_u[1] - side};
  if (g.dim == 1) start[1] = 0;
  return geo_of_arcs(g, c, start, 3 * side);
}

std::vector<Cube> dyadic_children(const Grid& g, const Cube& c) {
  check_cube(g, c);
  if (c.level >= g.level) throw std::invalid_argument("cube already at finest level");
  int lc = c.level + 1;
  std::int32_t opt[2][2]; // per axis, the two child indices (lower arc first)
  if (c.lat < 0) {
    for (int a = 0; a < g.dim; ++a) {
      opt[a][0] = 2 * c.idx[a];
      opt[a][1] = 2 * c.idx[a] + 1;
    }
  } else {
    int k[2] = {c.lat % 3, c.lat / 3};
    CubeGeo q = make_geo(g, c);
    std::int64_t sc = arc_side(g, lc);
    for (int a = 0; a < g.dim; ++a) {
      for (int half = 0; half < 2; ++half) {
        std::int64_t u = q.start_u[a] + half * sc;
        std::int64_t off = imod(u - anchor(g, k[a], lc), g.torus());
        if (off % sc != 0) throw std::logic_error("child arc not on the finer lattice");
        opt[a][half] = std::int32_t(off / sc);
      }
    }
  }
  std::vector<Cube> out;
  int ny = g.dim == 2 ? 2 : 1;
  for (int hy = 0; hy < ny; ++hy)
    for (int hx = 0; hx < 2; ++hx) {
      Cube ch;
      ch.lat = c.lat;
      ch.level = lc;
      ch.idx[0] = opt[0][hx];
      ch.idx[1] = g.dim == 2 ? opt[1][hy] : 0;
      out.push_back(ch);
    }
  return out;
}

Cube ancestor_of(const Grid& g, const Cube& c, int level) {
  check_cube(g, c);
  if (level < 0 || level > c.level) throw std::invalid_argument("ancestor level out of range");
  Cube anc;
  anc.lat = c.lat;
  anc.level = level;
  if (c.lat < 0) {
    for (int a = 0; a < g.dim; ++a) anc.idx[a] = c.idx[a] >> (c.level - level);
  } else {
    int k[2] = {c.lat % 3, c.lat / 3};
    CubeGeo q = make_geo(g, c);
    std::int64_t s = arc_side(g, level);
    for (int a = 0; a < g.dim; ++a) {
      std::int64_t off = imod(q.start_u[a] - anchor(g, k[a], level), g.torus());
      std::int64_t i = off / s;
      if (off % s + arc_side(g, c.level) > s)
        throw std::logic_error("lattice levels do not nest");
      anc.idx[a] = std::int32_t(i);
    }
  }
  return anc;
}

bool cube_contains(const Grid& g, const CubeGeo& outer, const CubeGeo& inner) {
  for (int a = 0; a < g.dim; ++a) {
    for (int ri = 0; ri < 2; ++ri) {
      std::int32_t lo = inner.ax[a].lo[ri], hi = inner.ax[a].hi[ri];
      if (lo >= hi) continue;
      bool ok = false;
      for (int ro = 0; ro < 2 && !ok; ++ro)
        ok = outer.ax[a].lo[ro] <= lo && hi <= outer.ax[a].hi[ro];
      if (!ok) return false;
    }
  }
  return true;
}

Cube shifted_parent(const Grid& g, const Cube& base_cube) {
  check_cube(g, base_cube);
  if (base_cube.lat != -1)
    throw std::invalid_argument("shifted_parent expects a base-lattice cube");
  CubeGeo q = make_geo(g, base_cube);
  std::int64_t side = base_side(g, base_cube.level);
  std::int64_t w[2] = {q.start_u[0] - side, q.start_u[1] - side}; // start of 3Q
  std::int64_t need = 3 * side;                                   // length of 3Q
  int nlat = lattice_count(g);
  for (int lev = base_cube.level; lev >= std::max(0, base_cube.level - 1); --lev) {
    std::int64_t s = arc_side(g, lev);
    for (int lat = 0; lat < nlat; ++lat) {
      int k[2] = {lat % 3, lat / 3};
      Cube r;
      r.lat = lat;
      r.level = lev;
      bool ok = true;
      for (int a = 0; a < g.dim && ok; ++a) {
        std::int64_t off = imod(w[a] - anchor(g, k[a], lev), g.torus());
        std::int64_t i = off / s, rem = off % s;
        if (rem + need <= s)
          r.idx[a] = std::int32_t(i);
        else
          ok = false;
      }
      if (ok) return r;
    }
  }
  throw std::logic_error("no shifted cube contains the tripled cube");
}

std::string cube_to_string(const Cube& c, int dim) {
  char buf[64];
  if (dim == 2)
    std::snprintf(buf, sizeof buf, "%d:%d:%d,%d", c.lat, c.level, c.idx[0], c.idx[1]);
  else
    std::snprintf(buf, sizeof buf, "%d:%d:%d", c.lat, c.level, c.idx[0]);
  return buf;
}

Cube parse_cube(const std::string& s, const Grid& g) {
  Cube c;
  int n = 0;
  if (g.dim == 2) {
    if (std::sscanf(s.c_str(), "%d:%d:%d,%d%n", &c.lat, &c.level, &c.idx[0], &c.idx[1], &n) != 4 ||
        n != int(s.size()))
      throw std::invalid_argument("cube string must be lat:level:ix,iy");
  } else {
    if (std::sscanf(s.c_str(), "%d:%d:%d%n", &c.lat, &c.level, &c.idx[0], &n) != 3 ||
        n != int(s.size()))
      throw std::invalid_argument("cube string must be lat:level:ix");
    c.idx[1] = 0;
  }
  check_cube(g, c);
  return c;
}

std::int64_t Domain::base_index(int level, std::int64_t jx, std::int64_t jy) const {
  std::int64_t off = g.dim == 1 ? (1LL << level) - 1 : ((1LL << (2 * level)) - 1) / 3;
  return off + jy * (1LL << level) + jx;
}

const CubeGeo& Domain::base_geo(int level, std::int64_t jx, std::int64_t jy) const {
  return cubes[std::size_t(base_index(level, jx, jy))];
}

Domain build_domain(const Grid& g) {
  Domain d;
  d.g = g;
  for (int l = 0; l <= g.level; ++l) {
    std::int64_t n = 1LL << l;
    std::int64_t ny = g.dim == 2 ? n : 1;
    for (std::int64_t jy = 0; jy < ny; ++jy)
      for (std::int64_t jx = 0; jx < n; ++jx) {
        Cube c;
        c.lat = -1;
        c.level = l;
        c.idx = {std::int32_t(jx), std::int32_t(jy)};
        d.cubes.push_back(make_geo(g, c));
      }
  }
  d.n_base = std::int64_t(d.cubes.size());
  int nlat = lattice_count(g);
  for (int lat = 0; lat < nlat; ++lat)
    for (int l = 0; l <= g.level; ++l) {
      std::int64_t n = 1LL << l;
      std::int64_t ny = g.dim == 2 ? n : 1;
      for (std::int64_t jy = 0; jy < ny; ++jy)
        for (std::int64_t jx = 0; jx < n; ++jx) {
          Cube c;
          c.lat = lat;
          c.level = l;
          c.idx = {std::int32_t(jx), std::int32_t(jy)};
          CubeGeo geo = make_geo(g, c);
          if (geo.ncell > 0) d.cubes.push_back(geo);
        }
    }
  return d;
}

bool verify_sparse(const Domain& dom, SparseFamily& family, double eta) {
  if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("eta must lie in (0, 1]");
  family.eta = eta;
  family.witness.assign(family.cubes.size(), {});
  std::vector<CubeGeo> geos;
  geos.reserve(family.cubes.size());
  for (const Cube& c : family.cubes) geos.push_back(make_geo(dom.g, c));

  std::vector<std::size_t> order(family.cubes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return geos[a].ncell < geos[b].ncell;
  });

  std::vector<std::uint8_t> claimed(std::size_t(dom.g.ncells), 0);
  for (std::size_t oi : order) {
    const CubeGeo& q = geos[oi];
    double t = eta * double(q.ncell);
    std::int64_t need = std::int64_t(std::floor(t));
    if (t - double(need) > 1e-9 * std::max(1.0, t)) ++need;
    std::vector<std::int64_t>& e = family.witness[oi];
    for_each_cell(dom.g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
      if (std::int64_t(e.size()) < need && !claimed[std::size_t(id)]) {
        claimed[std::size_t(id)] = 1;
        e.push_back(id);
      }
    });
    if (std::int64_t(e.size()) < need) {
      family.witness.clear();
      return false;
    }
  }
  return true;
}

bool carleson_packing_ok(const Domain& dom, const SparseFamily& family, double eta) {
  if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("eta must lie in (0, 1]");
  std::vector<CubeGeo> geos;
  geos.reserve(family.cubes.size());
  for (const Cube& c : family.cubes) geos.push_back(make_geo(dom.g, c));
  for (std::size_t i = 0; i < geos.size(); ++i) {
    std::int64_t tot = 0;
    for (std::size_t j = 0; j < geos.size(); ++j)
      if (cube_contains(dom.g, geos[i], geos[j])) tot += geos[j].ncell;
    if (double(tot) > double(geos[i].ncell) / eta * (1.0 + 1e-12)) return false;
  }
  return true;
}

} // namespace sdom
