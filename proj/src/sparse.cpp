#include "sdom/sparse.hpp"

#include "sdom/cellsum.hpp"
#include "omp_shim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sdom {

namespace {

void require_size(const GridFn& h, const Grid& g) {
  if (std::int64_t(h.size()) != g.ncells)
    throw std::invalid_argument("grid function has wrong size");
}

double mean_over(const Grid& g, const GridFn& h, const CubeGeo& q) {
  double acc = 0.0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    acc += h[std::size_t(id)];
  });
  return acc / double(q.ncell);
}

std::int64_t count_mask(const Grid& g, const std::vector<std::uint8_t>& mask, const CubeGeo& q) {
  std::int64_t acc = 0;
  for_each_cell(g, q, [&](std::int64_t id, std::int64_t, std::int64_t) {
    acc += mask[std::size_t(id)];
  });
  return acc;
}

struct DomCtx {
  const Domain& dom;
  const OmegaKernel& kern;
  const GridFn& b;
  const GridFn& f;
  const GridFn& g;
  double s;
  GridFn bfprod;                   // b * f
  std::vector<std::uint8_t> mask;  // scratch for the stopping sets
  DominationResult res;
  double resid_total = 0.0;        // FP residue scale of the splitting identities
};

// post-order recursion; returns the node's local integral and records the node
double process_node(DomCtx& C, const Cube& q0c) {
  const Grid& g = C.dom.g;
  CubeGeo geo0 = make_geo(g, q0c);
  CubeGeo g03 = tripled_geo(g, q0c);
  Cube rc = shifted_parent(g, q0c);
  CubeGeo geoR = make_geo(g, rc);
  if (geoR.ncell != g03.ncell)
    throw std::logic_error("tripled cube does not coincide with its shifted parent");

  double bR = mean_over(g, C.b, geoR);
  std::size_t n = C.b.size();
  GridFn bf(n), bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    bf[i] = (C.b[i] - bR) * C.f[i];
    bg[i] = (C.b[i] - bR) * C.g[i];
  }

  GridFn tf = apply_t_restricted(g, C.kern, C.f, g03, geo0);
  GridFn tbf = apply_t_restricted(g, C.kern, C.bfprod, g03, geo0);
  GridFn m2 = local_bilinear_maximal(C.dom, C.kern, C.f, bg, q0c);
  GridFn m4 = local_bilinear_maximal(C.dom, C.kern, bf, C.g, q0c);

  std::vector<std::int64_t> ids;
  ids.reserve(std::size_t(geo0.ncell));
  for_each_cell(g, geo0, [&](std::int64_t id, std::int64_t, std::int64_t) { ids.push_back(id); });
  std::int64_t nc0 = geo0.ncell;

  // the four comparison functions on the node's cells
  std::vector<double> u[4];
  for (auto& v : u) v.resize(std::size_t(nc0));
  for (std::int64_t j = 0; j < nc0; ++j) {
    std::size_t id = std::size_t(ids[std::size_t(j)]);
    u[0][std::size_t(j)] = std::fabs(tf[id]);
    u[1][std::size_t(j)] = m2[id];
    u[2][std::size_t(j)] = std::fabs(tbf[id] - bR * tf[id]);
    u[3][std::size_t(j)] = m4[id];
  }
  double n1 = local_avg(g, C.f, g03, 1.0);
  double n3 = local_avg(g, bf, g03, 1.0);
  double sg = local_avg(g, C.g, geo0, C.s);
  double sbg = local_avg(g, bg, geo0, C.s);
  double nv[4] = {n1, n1 * sbg, n3, n3 * sg};

  // quantile thresholds: the (t_allow + 1)-th largest value, so each
  // stopping set keeps at most t_allow cells by strict comparison
  std::int64_t t_allow = nc0 >> (g.dim + 5);
  double qthr[4], aloc[4];
  for (int i = 0; i < 4; ++i) {
    if (!(nv[i] > 0.0)) {
      qthr[i] = std::numeric_limits<double>::infinity();
      aloc[i] = 0.0;
      continue;
    }
    std::vector<double> tmp(u[i]);
    std::nth_element(tmp.begin(), tmp.begin() + t_allow, tmp.end(), std::greater<double>());
    qthr[i] = tmp[std::size_t(t_allow)];
    aloc[i] = qthr[i] / nv[i];
  }

  std::int64_t omega = 0;
  for (std::int64_t j = 0; j < nc0; ++j) {
    bool in = false;
    for (int i = 0; i < 4 && !in; ++i) in = u[i][std::size_t(j)] > qthr[i];
    if (in) {
      C.mask[std::size_t(ids[std::size_t(j)])] = 1;
      ++omega;
    }
  }
  if (omega > 4 * t_allow) throw std::logic_error("stopping set exceeds its measure bound");

  std::vector<Cube> kids;
  std::int64_t seltot = 0;
  if (omega > 0) {
    kids = cz_decompose(C.dom, C.mask, q0c, std::ldexp(1.0, -(g.dim + 1)));
    for (const Cube& kid : kids) {
      if (kid == q0c) throw std::logic_error("the node itself was selected");
      CubeGeo gk = make_geo(g, kid);
      std::int64_t cnt = count_mask(g, C.mask, gk);
      if (cnt * (std::int64_t(1) << (g.dim + 1)) <= gk.ncell)
        throw std::logic_error("selected cube misses the density lower bound");
      if (2 * cnt > gk.ncell) throw std::logic_error("selected cube exceeds half density");
      seltot += gk.ncell;
    }
    if (2 * seltot > nc0) throw std::logic_error("next generation exceeds half the node");
  }
  for (std::int64_t id : ids) C.mask[std::size_t(id)] = 0;

  double lhs_local = 0.0, resid = 0.0;
  for (std::int64_t j = 0; j < nc0; ++j) {
    std::size_t id = std::size_t(ids[std::size_t(j)]);
    double cm = tbf[id] - C.b[id] * tf[id];
    double gw = std::fabs(C.g[id]);
    lhs_local += std::fabs(cm) * gw;
    resid += (std::fabs(tbf[id]) + std::fabs(C.b[id] * tf[id])) * gw;
  }
  lhs_local *= g.hvol;
  resid *= g.hvol;

  double meas0 = double(nc0) * g.hvol;
  double t1 = n1 * sbg * meas0;
  double t2 = n3 * sg * meas0;
  double a_loc = aloc[0] + aloc[1] + aloc[2] + aloc[3];

  // lift of the node terms onto the shifted parent's form terms
  double t1r = local_avg(g, C.f, geoR, 1.0) * local_avg(g, bg, geoR, C.s) *
               double(geoR.ncell) * g.hvol;
  double t2r = local_avg(g, bf, geoR, 1.0) * local_avg(g, C.g, geoR, C.s) *
               double(geoR.ncell) * g.hvol;
  double rho = std::pow(double(nc0) / double(geoR.ncell), 1.0 - 1.0 / C.s);
  if (t1 > rho * t1r * (1.0 + 1e-9) + 1e-300) C.res.chain_ok = false;
  if (t2 > rho * t2r * (1.0 + 1e-9) + 1e-300) C.res.chain_ok = false;

  DominationNode node;
  node.q = q0c;
  node.r = rc;
  node.a_local = a_loc;
  node.t1 = t1;
  node.t2 = t2;
  node.rho = rho;
  node.lhs_local = lhs_local;
  node.omega_cells = omega;
  node.selected_cells = seltot;
  C.res.nodes.push_back(node);

  double child_sum = 0.0;
  for (const Cube& kid : kids) child_sum += process_node(C, kid);

  double rhs_node = child_sum + a_loc * (t1 + t2);
  double tol = 1e-9 * (lhs_local + rhs_node) + 1e-13 * resid + 1e-300;
  if (lhs_local > rhs_node + tol) C.res.chain_ok = false;
  C.resid_total += resid;
  return lhs_local;
}

} // namespace

std::vector<Cube> cz_decompose(const Domain& dom, const std::vector<std::uint8_t>& mask,
                               const Cube& q0, double height) {
  const Grid& g = dom.g;
  if (q0.lat != -1) throw std::invalid_argument("cz_decompose expects a base cube");
  if (std::int64_t(mask.size()) != g.ncells)
    throw std::invalid_argument("mask has wrong size");
  if (!(height > 0.0) || !(height < 1.0))
    throw std::invalid_argument("height must lie in (0, 1)");
  GridFn md(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) md[i] = double(mask[i]);
  CellSum S(g, md);
  double total = 0.0;
  for (double v : md) total += v;
  if (total != S.over(make_geo(g, q0)))
    throw std::invalid_argument("mask has cells outside the root cube");

  std::vector<Cube> out;
  auto rec = [&](auto&& self, const Cube& c) -> void {
    CubeGeo geo = make_geo(g, c);
    double cnt = S.over(geo);
    if (cnt <= 0.0) return;
    if (cnt > height * double(geo.ncell)) {
      out.push_back(c);
      return;
    }
    if (c.level >= g.level) return;
    for (const Cube& ch : dyadic_children(g, c)) self(self, ch);
  };
  rec(rec, q0);
  return out;
}

DominationResult sparse_dominate_commutator(const Domain& dom, const OmegaKernel& k,
                                            const GridFn& b, const GridFn& f, const GridFn& g,
                                            double s) {
  const Grid& gr = dom.g;
  require_size(b, gr);
  require_size(f, gr);
  require_size(g, gr);
  if (!(s > 1.0)) throw std::invalid_argument("the dual average exponent must satisfy s > 1");

  DomCtx C{dom, k, b, f, g, s, {}, {}, {}, 0.0};
  C.bfprod.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) C.bfprod[i] = b[i] * f[i];
  C.mask.assign(std::size_t(gr.ncells), 0);
  C.res.s = s;
  C.res.eta_base = 0.5;
  C.res.eta_shifted = 0.5 / std::pow(9.0, gr.dim);
  C.res.chain_ok = true;

  Cube root{-1, 0, {0, 0}};
  C.res.lhs_integral = process_node(C, root);

  GridFn comm = commutator_apply(gr, k, b, f);
  double pair = 0.0;
  for (std::size_t i = 0; i < comm.size(); ++i) pair += comm[i] * g[i];
  C.res.lhs = std::fabs(pair * gr.hvol);

  C.res.node_sum = 0.0;
  C.res.k_empirical = 0.0;
  C.res.k_lifted = 0.0;
  for (const DominationNode& nd : C.res.nodes) {
    C.res.node_sum += nd.a_local * (nd.t1 + nd.t2);
    C.res.k_empirical = std::max(C.res.k_empirical, nd.a_local);
    C.res.k_lifted = std::max(C.res.k_lifted, nd.a_local * nd.rho);
  }

  C.res.base_family.lattice_id = -1;
  C.res.base_family.cubes.clear();
  for (const DominationNode& nd : C.res.nodes) C.res.base_family.cubes.push_back(nd.q);
  C.res.witness_ok = verify_sparse(dom, C.res.base_family, C.res.eta_base);

  std::map<int, std::vector<Cube>> by_lat;
  for (const DominationNode& nd : C.res.nodes) by_lat[nd.r.lat].push_back(nd.r);
  C.res.form_total = 0.0;
  for (auto& [lat, cubes] : by_lat) {
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    SparseFamily fam;
    fam.lattice_id = lat;
    fam.cubes = cubes;
    if (!verify_sparse(dom, fam, C.res.eta_shifted)) C.res.witness_ok = false;
    double t = bilinear_form(dom, fam, b, f, g, 1.0, s, false);
    double ta = bilinear_form(dom, fam, b, f, g, 1.0, s, true);
    C.res.families.push_back(std::move(fam));
    C.res.form.push_back(t);
    C.res.form_adj.push_back(ta);
    C.res.form_total += t + ta;
  }
  C.res.rhs = C.res.k_empirical * C.res.form_total;

  double slack = 1e-13 * C.resid_total + 1e-300;
  if (C.res.lhs > C.res.lhs_integral * (1.0 + 1e-9) + slack) C.res.chain_ok = false;
  if (C.res.lhs_integral > C.res.node_sum * (1.0 + 1e-9) + slack) C.res.chain_ok = false;
  if (C.res.node_sum > C.res.rhs * (1.0 + 1e-9) + slack) C.res.chain_ok = false;
  C.res.ok = C.res.chain_ok && C.res.witness_ok;
  return C.res;
}

double bilinear_form(const Domain& dom, const SparseFamily& fam, const GridFn& b, const GridFn& f,
                     const GridFn& g, double r, double s, bool adjoint) {
  const Grid& gr = dom.g;
  require_size(b, gr);
  require_size(f, gr);
  require_size(g, gr);
  if (!(r >= 1.0) || !(s >= 1.0)) throw std::invalid_argument("form exponents must be >= 1");
  std::int64_t nq = std::int64_t(fam.cubes.size());
  std::vector<double> terms(std::size_t(nq), 0.0);
#pragma omp parallel for schedule(dynamic, 8) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i) {
    CubeGeo geo = make_geo(gr, fam.cubes[std::size_t(i)]);
    double bq = mean_over(gr, b, geo);
    // max-normalized power means (underflow/overflow safe, like local_avg)
    double fmax = 0.0, gmax = 0.0;
    std::int64_t nc = 0;
    auto vals = [&](std::int64_t id, double& df, double& dg) {
      std::size_t ix = std::size_t(id);
      df = adjoint ? std::fabs((b[ix] - bq) * f[ix]) : std::fabs(f[ix]);
      dg = adjoint ? std::fabs(g[ix]) : std::fabs((b[ix] - bq) * g[ix]);
    };
    for_each_cell(gr, geo, [&](std::int64_t id, std::int64_t, std::int64_t) {
      double df, dg;
      vals(id, df, dg);
      fmax = std::max(fmax, df);
      gmax = std::max(gmax, dg);
      ++nc;
    });
    double af = 0.0, ag = 0.0;
    for_each_cell(gr, geo, [&](std::int64_t id, std::int64_t, std::int64_t) {
      double df, dg;
      vals(id, df, dg);
      if (fmax > 0.0) af += r == 1.0 ? df / fmax : std::pow(df / fmax, r);
      if (gmax > 0.0) ag += s == 1.0 ? dg / gmax : std::pow(dg / gmax, s);
    });
    double mf = fmax > 0.0 ? fmax * (r == 1.0 ? af / double(nc)
                                              : std::pow(af / double(nc), 1.0 / r))
                           : 0.0;
    double mg = gmax > 0.0 ? gmax * (s == 1.0 ? ag / double(nc)
                                              : std::pow(ag / double(nc), 1.0 / s))
                           : 0.0;
    terms[std::size_t(i)] = mf * mg * double(nc) * gr.hvol;
  }
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

GridFn sparse_operator(const Domain& dom, const SparseFamily& fam, const GridFn& f,
                       const Young& Psi) {
  const Grid& gr = dom.g;
  require_size(f, gr);
  std::int64_t nq = std::int64_t(fam.cubes.size());
  std::vector<double> norms(std::size_t(nq), 0.0);
  std::vector<CubeGeo> geos;
  geos.reserve(fam.cubes.size());
  for (const Cube& c : fam.cubes) geos.push_back(make_geo(gr, c));
#pragma omp parallel for schedule(dynamic, 8) if (!omp_in_parallel())
  for (std::int64_t i = 0; i < nq; ++i)
    norms[std::size_t(i)] = orlicz_local_norm(gr, f, geos[std::size_t(i)], Psi);
  GridFn out(f.size(), 0.0);
  for (std::int64_t i = 0; i < nq; ++i)
    for_each_cell(gr, geos[std::size_t(i)], [&](std::int64_t id, std::int64_t, std::int64_t) {
      out[std::size_t(id)] += norms[std::size_t(i)];
    });
  return out;
}

Lemma23Report lemma23_verify(const Domain& dom, const SparseFamily& fam, const GridFn& f,
                             const GridFn& w, const Young& Psi, double ainf_w) {
  const Grid& gr = dom.g;
  require_size(f, gr);
  require_size(w, gr);
  if (!(fam.eta > 0.0) || fam.eta > 1.0)
    throw std::invalid_argument("family eta must lie in (0, 1]");
  if (fam.witness.size() != fam.cubes.size())
    throw std::invalid_argument("family has no witness; run verify_sparse first");
  Lemma23Report rep;
  rep.ainf = ainf_w >= 1.0 ? ainf_w : ainf_constant(dom, w).value;
  GridFn bs = sparse_operator(dom, fam, f, Psi);
  GridFn mf = maximal_fn(dom, f, Psi);
  double lhs = 0.0, mint = 0.0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    lhs += bs[i] * w[i];
    mint += mf[i] * w[i];
  }
  rep.lhs = lhs * gr.hvol;
  rep.rhs = (4.0 / fam.eta) * rep.ainf * mint * gr.hvol;
  rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-9) + 1e-300;
  return rep;
}

CarlesonReport carleson_embedding_verify(const Domain& dom, const SparseFamily& fam,
                                         const GridFn& f, double p) {
  const Grid& gr = dom.g;
  require_size(f, gr);
  if (!(p >= 1.0)) throw std::invalid_argument("embedding exponent must be >= 1");
  if (fam.witness.size() != fam.cubes.size())
    throw std::invalid_argument("family has no witness; run verify_sparse first");
  GridFn mf = maximal_fn(dom, f, Young::power(1.0));
  CarlesonReport rep;
  rep.pointwise_ok = true;
  for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
    CubeGeo geo = make_geo(gr, fam.cubes[i]);
    double a = local_avg(gr, f, geo, 1.0);
    double wit = std::numeric_limits<double>::infinity();
    for (std::int64_t id : fam.witness[i]) wit = std::min(wit, mf[std::size_t(id)]);
    if (fam.witness[i].empty()) wit = a; // eta * |Q| < 1 claims nothing
    if (a > wit * (1.0 + 1e-12)) rep.pointwise_ok = false;
    rep.lhs += (p == 1.0 ? a : std::pow(a, p)) * double(geo.ncell) * gr.hvol;
  }
  double mint = 0.0;
  for (double v : mf) mint += p == 1.0 ? v : std::pow(v, p);
  rep.rhs = mint * gr.hvol / fam.eta;
  rep.ok = rep.pointwise_ok && rep.lhs <= rep.rhs * (1.0 + 1e-9) + 1e-300;
  return rep;
}

std::string family_to_string(const SparseFamily& fam, int dim) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", fam.eta);
  os << "family 1\n"
     << "lattice " << fam.lattice_id << "\n"
     << "eta " << buf << "\n"
     << "ncubes " << fam.cubes.size() << "\n";
  for (const Cube& c : fam.cubes) os << cube_to_string(c, dim) << "\n";
  return os.str();
}

SparseFamily family_from_string(const std::string& text, const Grid& g) {
  std::istringstream is(text);
  std::string tag;
  int version = 0;
  SparseFamily fam;
  std::size_t ncubes = 0;
  if (!(is >> tag >> version) || tag != "family" || version != 1)
    throw std::invalid_argument("family text must start with 'family 1'");
  if (!(is >> tag >> fam.lattice_id) || tag != "lattice")
    throw std::invalid_argument("family text: missing lattice line");
  if (!(is >> tag >> fam.eta) || tag != "eta" || !(fam.eta > 0.0) || fam.eta > 1.0)
    throw std::invalid_argument("family text: missing or invalid eta line");
  if (!(is >> tag >> ncubes) || tag != "ncubes")
    throw std::invalid_argument("family text: missing ncubes line");
  for (std::size_t i = 0; i < ncubes; ++i) {
    std::string cs;
    if (!(is >> cs)) throw std::invalid_argument("family text: fewer cubes than declared");
    Cube c = parse_cube(cs, g);
    if (c.lat != fam.lattice_id)
      throw std::invalid_argument("family text: cube lattice does not match the family");
    fam.cubes.push_back(c);
  }
  return fam;
}

} // namespace sdom
