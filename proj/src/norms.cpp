#include "sdom/norms.hpp"

#include "sdom/cellsum.hpp"

#include "omp_shim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdom {

namespace {

constexpr double kE = 2.718281828459045235;

void require_positive(const GridFn& w, const Grid& g) {
  if (std::int64_t(w.size()) != g.ncells)
    throw std::invalid_argument("grid function has wrong size");
  for (double v : w)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("weight must be strictly positive and finite");
}

void require_size(const GridFn& h, const Grid& g) {
  if (std::int64_t(h.size()) != g.ncells)
    throw std::invalid_argument("grid function has wrong size");
}

// serial reduction over per-cube values. The argmax is the first cube whose
// value sits within a relative 1e-12 band of the max: exact ties (constant
// weights, repeated patterns) pick up ~1e-15 position noise from the prefix
// sums once the weight is rescaled, and a strict comparison would let that
// noise move the argmax. The band keeps it pinned to the first tied cube.
ConstantReport reduce_max(const Domain& dom, const std::vector<double>& vals) {
  ConstantReport rep;
  rep.value = -1.0;
  for (double v : vals) rep.value = std::max(rep.value, v);
  double cut = rep.value - 1e-12 * std::fabs(rep.value);
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] >= cut) {
      rep.argmax = dom.cubes[i].c;
      break;
    }
  return rep;
}

} // namespace

double Young::operator()(double t) const {
  switch (kind) {
    case Kind::Power: return std::pow(t, r);
    case Kind::LlogL: return t * std::log(kE + t);
    case Kind::ExpL: return t >= 700.0 ? 1e300 : std::expm1(t);
  }
  return 0.0;
}

std::string Young::name() const {
  switch (kind) {
    case Kind::Power: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "power(%g)", r);
      return buf;
    }
    case Kind::LlogL: return "llogl";
    case Kind::ExpL: return "expl";
  }
  return "?";
}

Young Young::power(double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("power exponent must be >= 1");
  return Young{Kind::Power, r};
}
Young Young::llogl() { return Young{Kind::LlogL, 1.0}; }
Young Young::expl() { return Young{Kind::ExpL, 1.0}; }

double local_avg(const Grid& g, const GridFn& h, const CubeGeo& q, double alpha,
                 const GridFn* mu) {
  require_size(h, g);
  if (!(alpha >= 1.0)) throw std::invalid_argument("average exponent must be >= 1");
  if (alpha == 1.0) {
    double num = 0.0, den = 0.0;
    for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
      double m = mu ? (*mu)[std::size_t(id)] : 1.0;
      num += m * std::fabs(h[std::size_t(id)]);
      den += m;
    });
    return den > 0.0 ? num / den : 0.0;
  }
  // normalize by the max so the power sum can neither underflow to zero on
  // denormal tails (which would break power-mean monotonicity) nor overflow
  double hmax = 0.0, den = 0.0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    double m = mu ? (*mu)[std::size_t(id)] : 1.0;
    den += m;
    if (m > 0.0) hmax = std::max(hmax, std::fabs(h[std::size_t(id)]));
  });
  if (!(den > 0.0) || hmax == 0.0) return 0.0;
  double num = 0.0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    double m = mu ? (*mu)[std::size_t(id)] : 1.0;
    if (m > 0.0) num += m * std::pow(std::fabs(h[std::size_t(id)]) / hmax, alpha);
  });
  return hmax * std::pow(num / den, 1.0 / alpha);
}

double orlicz_local_norm(const Grid& g, const GridFn& h, const CubeGeo& q, const Young& Psi,
                         const GridFn* mu) {
  require_size(h, g);
  double hmax = 0.0, den = 0.0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    double m = mu ? (*mu)[std::size_t(id)] : 1.0;
    den += m;
    if (m > 0.0) hmax = std::max(hmax, std::fabs(h[std::size_t(id)]));
  });
  if (hmax == 0.0 || !(den > 0.0)) return 0.0;

  auto avg_psi = [&](double lambda) {
    double acc = 0.0;
    for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
      double m = mu ? (*mu)[std::size_t(id)] : 1.0;
      if (m > 0.0) acc += m * Psi(std::fabs(h[std::size_t(id)]) / lambda);
    });
    return acc / den;
  };

  double hi = hmax;
  for (int it = 0; it < 200 && avg_psi(hi) > 1.0; ++it) hi *= 2.0;
  double lo = hi;
  for (int it = 0; it < 1100; ++it) {
    double cand = lo * 0.5;
    if (avg_psi(cand) > 1.0 || cand == 0.0) break;
    hi = cand;
    lo = cand;
  }
  if (lo == hi) lo = hi * 0.5;
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (avg_psi(mid) <= 1.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

GridFn maximal_fn(const Domain& dom, const GridFn& h, const Young& Psi) {
  const Grid& g = dom.g;
  require_size(h, g);
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);

  if (Psi.kind == Young::Kind::Power) {
    GridFn hp(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
      hp[i] = Psi.r == 1.0 ? std::fabs(h[i]) : std::pow(std::fabs(h[i]), Psi.r);
    CellSum S(g, hp);
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
    for (std::int64_t i = 0; i < nq; ++i) {
      const CubeGeo& q = dom.cubes[std::size_t(i)];
      double mean = S.over(q) / double(q.ncell);
      vals[std::size_t(i)] = Psi.r == 1.0 ? mean : std::pow(mean, 1.0 / Psi.r);
    }
  } else {
#pragma omp parallel for schedule(dynamic, 16) if (!omp_in_parallel())
    for (std::int64_t i = 0; i < nq; ++i)
      vals[std::size_t(i)] = orlicz_local_norm(g, h, dom.cubes[std::size_t(i)], Psi);
  }

  GridFn out(std::size_t(g.ncells), 0.0);
  for (std::int64_t i = 0; i < nq; ++i) {
    double v = vals[std::size_t(i)];
    for_each_cell(g, dom.cubes[std::size_t(i)], [&](std::int64_t id, std::int64_t, std::int64_t) {
      if (v > out[std::size_t(id)]) out[std::size_t(id)] = v;
    });
  }
  return out;
}

GridFn m_r_weight(const Domain& dom, const GridFn& w, double r) {
  require_positive(w, dom.g);
  if (!(r >= 1.0)) throw std::invalid_argument("m_r exponent must be >= 1");
  GridFn wr(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) wr[i] = r == 1.0 ? w[i] : std::pow(w[i], r);
  GridFn m = maximal_fn(dom, wr, Young::power(1.0));
  if (r != 1.0)
    for (double& v : m) v = std::pow(v, 1.0 / r);
  return m;
}

double weighted_lp_norm(const Grid& g, const GridFn& f, const GridFn* u, double p) {
  require_size(f, g);
  if (u) require_size(*u, g);
  if (!(p >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double a = std::fabs(f[i]);
    acc += (p == 1.0 ? a : std::pow(a, p)) * (u ? (*u)[i] : 1.0);
  }
  acc *= g.hvol;
  return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

double geo_mean(const Grid& g, const GridFn& w, const CubeGeo& q) {
  require_positive(w, g);
  double acc = 0.0;
  std::int64_t n = 0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    acc += std::log(w[std::size_t(id)]);
    ++n;
  });
  if (n == 0) return 0.0;
  return std::exp(acc / double(n));
}

double ap_ratio(const Grid& g, const GridFn& w, const CubeGeo& q, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("ap_ratio needs p > 1");
  double sw = 0.0, sd = 0.0;
  std::int64_t n = 0;
  double e = 1.0 / (1.0 - p);
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    sw += w[std::size_t(id)];
    sd += std::pow(w[std::size_t(id)], e);
    ++n;
  });
  if (n == 0) return 0.0;
  return (sw / double(n)) * std::pow(sd / double(n), p - 1.0);
}

double mixed_ratio(const Grid& g, const GridFn& w, const CubeGeo& q, double p, double q_exp) {
  if (!(p > 1.0) || !(q_exp > 1.0) || !(q_exp < p))
    throw std::invalid_argument("mixed_ratio needs 1 < q < p");
  double sw = 0.0, sd = 0.0, sl = 0.0;
  std::int64_t n = 0;
  double e = 1.0 / (1.0 - q_exp);
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    double v = w[std::size_t(id)];
    sw += v;
    sd += std::pow(v, e);
    sl += std::log(v);
    ++n;
  });
  if (n == 0) return 0.0;
  double inv_pp = 1.0 - 1.0 / p; // 1/p'
  return (sw / double(n)) * std::pow(sd / double(n), (q_exp - 1.0) / p) *
         std::exp(-(sl / double(n)) * inv_pp);
}

ConstantReport ap_constant(const Domain& dom, const GridFn& w, double p) {
  const Grid& g = dom.g;
  require_positive(w, g);
  if (!(p >= 1.0)) throw std::invalid_argument("ap_constant needs p >= 1");
  if (p == 1.0) {
    GridFn m = maximal_fn(dom, w, Young::power(1.0));
    GridFn ratio(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) ratio[i] = m[i] / w[i];
    ConstantReport rep;
    rep.value = -1.0;
    for (double v : ratio) rep.value = std::max(rep.value, v);
    // same tie band as reduce_max, over cell-level cubes
    double cut = rep.value - 1e-12 * std::fabs(rep.value);
    for (std::int64_t cy = 0; cy < g.ny; ++cy) {
      for (std::int64_t cx = 0; cx < g.nx; ++cx)
        if (ratio[std::size_t(g.cell_id(cx, cy))] >= cut) {
          rep.argmax = Cube{-1, g.level, {std::int32_t(cx), std::int32_t(cy)}};
          return rep;
        }
    }
    return rep;
  }
  GridFn wd(w.size());
  double e = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < w.size(); ++i) wd[i] = std::pow(w[i], e);
  CellSum Sw(g, w), Sd(g, wd);
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i) {
    const CubeGeo& q = dom.cubes[std::size_t(i)];
    double n = double(q.ncell);
    vals[std::size_t(i)] = (Sw.over(q) / n) * std::pow(Sd.over(q) / n, p - 1.0);
  }
  return reduce_max(dom, vals);
}

ConstantReport ainf_constant(const Domain& dom, const GridFn& w) {
  const Grid& g = dom.g;
  require_positive(w, g);
  CellSum Sw(g, w);
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);

#pragma omp parallel if (!omp_in_parallel())
  {
    std::vector<double> best(std::size_t(g.ncells), 0.0);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < nq; ++i) {
      const CubeGeo& q = dom.cubes[std::size_t(i)];
      // M(w chi_Q) on the cells of Q: scan every cube meeting Q
      for (const CubeGeo& r : dom.cubes) {
        AxisRanges ix = intersect_axis(q.ax[0], r.ax[0]);
        if (ix.n == 0) continue;
        AxisRanges iy = intersect_axis(q.ax[1], r.ax[1]);
        if (iy.n == 0) continue;
        double s = 0.0;
        for (int a = 0; a < iy.n; ++a)
          for (int b = 0; b < ix.n; ++b) s += Sw.rect(ix.lo[b], ix.hi[b], iy.lo[a], iy.hi[a]);
        double val = s / double(r.ncell);
        for (int a = 0; a < iy.n; ++a)
          for (std::int32_t cy = iy.lo[a]; cy < iy.hi[a]; ++cy)
            for (int b = 0; b < ix.n; ++b)
              for (std::int32_t cx = ix.lo[b]; cx < ix.hi[b]; ++cx) {
                std::size_t id = std::size_t(cy) * g.nx + cx;
                if (val > best[id]) best[id] = val;
              }
      }
      double num = 0.0, den = 0.0;
      for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
        num += best[std::size_t(id)];
        den += w[std::size_t(id)];
        best[std::size_t(id)] = 0.0; // reset for the next cube in this thread
      });
      vals[std::size_t(i)] = num / den;
    }
  }
  return reduce_max(dom, vals);
}

ConstantReport mixed_one_sup_constant(const Domain& dom, const GridFn& w, double p, double q) {
  const Grid& g = dom.g;
  require_positive(w, g);
  if (!(p > 1.0) || !(q > 1.0) || !(q < p))
    throw std::invalid_argument("mixed constant needs 1 < q < p");
  GridFn wd(w.size()), lw(w.size());
  double e = 1.0 / (1.0 - q);
  for (std::size_t i = 0; i < w.size(); ++i) {
    wd[i] = std::pow(w[i], e);
    lw[i] = std::log(w[i]);
  }
  CellSum Sw(g, w), Sd(g, wd), Sl(g, lw);
  double inv_pp = 1.0 - 1.0 / p;
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i) {
    const CubeGeo& c = dom.cubes[std::size_t(i)];
    double n = double(c.ncell);
    vals[std::size_t(i)] = (Sw.over(c) / n) * std::pow(Sd.over(c) / n, (q - 1.0) / p) *
                           std::exp(-(Sl.over(c) / n) * inv_pp);
  }
  return reduce_max(dom, vals);
}

double bmo_norm(const Domain& dom, const GridFn& b) {
  const Grid& g = dom.g;
  require_size(b, g);
  CellSum Sb(g, b);
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);
#pragma omp parallel for schedule(dynamic, 16) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i) {
    const CubeGeo& q = dom.cubes[std::size_t(i)];
    double mean = Sb.over(q) / double(q.ncell);
    double dev = 0.0;
    for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
      dev += std::fabs(b[std::size_t(id)] - mean);
    });
    vals[std::size_t(i)] = dev / double(q.ncell);
  }
  double best = 0.0;
  for (double v : vals) best = std::max(best, v);
  return best;
}

ReverseHolderReport reverse_holder_check(const Domain& dom, const GridFn& w, double tau) {
  const Grid& g = dom.g;
  require_positive(w, g);
  if (tau < 0.0) tau = 11.0 * double(1 << g.dim);
  ReverseHolderReport rep;
  rep.ainf = ainf_constant(dom, w).value;
  rep.r_w = 1.0 + 1.0 / (tau * rep.ainf);
  GridFn wr(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) wr[i] = std::pow(w[i], rep.r_w);
  CellSum Sw(g, w), Sr(g, wr);
  std::int64_t nq = std::int64_t(dom.cubes.size());
  std::vector<double> vals(std::size_t(nq), 0.0);
#pragma omp parallel for schedule(static) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i) {
    const CubeGeo& q = dom.cubes[std::size_t(i)];
    double n = double(q.ncell);
    double lhs = std::pow(Sr.over(q) / n, 1.0 / rep.r_w);
    vals[std::size_t(i)] = lhs / (Sw.over(q) / n);
  }
  rep.worst_ratio = -1.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    rep.worst_ratio = std::max(rep.worst_ratio, vals[i]);
    if (vals[i] > 2.0 * (1.0 + 1e-9)) ++rep.violations;
  }
  // same tie band as reduce_max
  double cut = rep.worst_ratio - 1e-12 * std::fabs(rep.worst_ratio);
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] >= cut) {
      rep.argmax = dom.cubes[i].c;
      break;
    }
  return rep;
}

} // namespace sdom
