#include "sdom/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace sdom::reference {

namespace {

constexpr double kPi = 3.14159265358979323846;

int sector_of(double dx, double dy) {
  double a = std::atan2(dy, dx);
  int k = int(std::floor((a + kPi) / (kPi / 8.0) + 1e-9));
  return k >= 16 ? k - 16 : k;
}

double kernel_at(const OmegaKernel& k, std::int64_t dx, std::int64_t dy, bool adjoint) {
  if (dx == 0 && dy == 0) return 0.0;
  if (k.dim == 1) {
    bool pos = adjoint ? (dx < 0) : (dx > 0);
    return k.values[pos ? 0 : 1] / double(dx > 0 ? dx : -dx);
  }
  int s = adjoint ? sector_of(double(-dx), double(-dy)) : sector_of(double(dx), double(dy));
  return k.values[std::size_t(s)] / double(dx * dx + dy * dy);
}

} // namespace

GridFn apply_t_omega(const Grid& g, const OmegaKernel& k, const GridFn& f, bool adjoint) {
  if (k.dim != g.dim) throw std::invalid_argument("kernel dimension does not match grid");
  if (std::int64_t(f.size()) != g.ncells)
    throw std::invalid_argument("grid function has wrong size");
  GridFn out(f.size(), 0.0);
  if (g.dim == 1) {
    for (std::int64_t x = 0; x < g.nx; ++x) {
      double acc = 0.0;
      for (std::int64_t y = 0; y < g.nx; ++y)
        acc += kernel_at(k, x - y, 0, adjoint) * f[std::size_t(y)];
      out[std::size_t(x)] = acc;
    }
    return out;
  }
  for (std::int64_t xy = 0; xy < g.ny; ++xy)
    for (std::int64_t xx = 0; xx < g.nx; ++xx) {
      double acc = 0.0;
      for (std::int64_t yy = 0; yy < g.ny; ++yy)
        for (std::int64_t yx = 0; yx < g.nx; ++yx)
          acc += kernel_at(k, xx - yx, xy - yy, adjoint) * f[std::size_t(yy * g.nx + yx)];
      out[std::size_t(xy * g.nx + xx)] = acc;
    }
  return out;
}

GridFn maximal_fn(const Domain& dom, const GridFn& h, const Young& Psi) {
  const Grid& g = dom.g;
  if (std::int64_t(h.size()) != g.ncells)
    throw std::invalid_argument("grid function has wrong size");
  GridFn out(h.size(), 0.0);
  for (const CubeGeo& geo : dom.cubes) {
    double v = Psi.kind == Young::Kind::Power ? local_avg(g, h, geo, Psi.r)
                                              : orlicz_local_norm(g, h, geo, Psi);
    for_each_cell(g, geo, [&](std::int64_t id, std::int64_t, std::int64_t) {
      if (v > out[std::size_t(id)]) out[std::size_t(id)] = v;
    });
  }
  return out;
}

} // namespace sdom::reference
