#pragma once
// Local averages, Luxemburg norms for Young functions, maximal functions
// over the cube family, and the weight characteristics (A_p, Fujii-Wilson
// A_infty, the mixed sup constant, reverse Holder exponent).

#include "sdom/lattice.hpp"

#include <string>

namespace sdom {

struct Young {
  enum class Kind { Power, LlogL, ExpL };
  Kind kind = Kind::Power;
  double r = 1.0; // exponent when kind == Power

  double operator()(double t) const;
  std::string name() const;

  static Young power(double r);
  static Young llogl();
  static Young expl();
};

// (mu(Q)^-1 int_Q |h|^alpha dmu)^(1/alpha) over member cells; mu omitted
// means counting measure (Lebesgue after the cell-volume factor cancels).
// alpha must be >= 1. Returns 0 when mu(Q) == 0.
double local_avg(const Grid& g, const GridFn& h, const CubeGeo& q, double alpha,
                 const GridFn* mu = nullptr);

// Luxemburg norm inf{ lambda > 0 : avg_Q Psi(|h|/lambda) dmu <= 1 } by
// bracketing + bisection to 1e-10 relative width; returns the upper bracket
// end, so the feasibility inequality always holds at the returned value.
double orlicz_local_norm(const Grid& g, const GridFn& h, const CubeGeo& q, const Young& Psi,
                         const GridFn* mu = nullptr);

// M_{Psi(L)} h over the whole cube family (pointwise sup of local Luxemburg
// norms over cubes containing the cell)
GridFn maximal_fn(const Domain& dom, const GridFn& h, const Young& Psi);

// M_r w = (M(w^r))^(1/r)
GridFn m_r_weight(const Domain& dom, const GridFn& w, double r);

// (sum |f|^p u h^n)^(1/p); pass u = nullptr for Lebesgue measure
double weighted_lp_norm(const Grid& g, const GridFn& f, const GridFn* u, double p);

double geo_mean(const Grid& g, const GridFn& w, const CubeGeo& q);

// per-cube characteristic ratios
double ap_ratio(const Grid& g, const GridFn& w, const CubeGeo& q, double p);
double mixed_ratio(const Grid& g, const GridFn& w, const CubeGeo& q, double p, double q_exp);

struct ConstantReport {
  double value = 0.0;
  Cube argmax;
};

// sup over the cube family of the A_p ratio; p == 1 uses max_x Mw/w
ConstantReport ap_constant(const Domain& dom, const GridFn& w, double p);

// Fujii-Wilson constant sup_Q (1/w(Q)) int_Q M(w chi_Q)
ConstantReport ainf_constant(const Domain& dom, const GridFn& w);

// sup_Q <w>_Q <w^(1/(1-q))>_Q^((q-1)/p) exp(<log w^-1>_Q)^(1/p'), 1 < q < p
ConstantReport mixed_one_sup_constant(const Domain& dom, const GridFn& w, double p, double q);

double bmo_norm(const Domain& dom, const GridFn& b);

struct ReverseHolderReport {
  double r_w = 1.0;   // 1 + 1/(tau * ainf)
  double ainf = 1.0;
  double worst_ratio = 0.0; // max over cubes of <w^{r_w}>^{1/r_w} / <w>
  Cube argmax;
  std::int64_t violations = 0; // cubes with ratio > 2 beyond FP slack
};

// self-improvement exponent check; tau < 0 selects the default 22 * 2^(dim-1)
ReverseHolderReport reverse_holder_check(const Domain& dom, const GridFn& w, double tau = -1.0);

} // namespace sdom
