#pragma once
// Iteration building an A_1 majorant of a nonnegative function: the weighted
// maximal operator S(f) = M(f u^{1/p}) / u^{1/p} with u = M_r w, and the
// geometric series R(h) = sum_k 2^{-k} S^k h / S_hat^k truncated at max_terms.

#include "sdom/lattice.hpp"
#include "sdom/norms.hpp"

namespace sdom {

struct RdFResult {
  GridFn rh;
  double s_norm_estimate = 0.0;  // S_hat: validated upper bound for ||S|| on the iterates
  int truncation_terms = 0;
  double tail_bound = 0.0;       // 2^{1 - truncation_terms} ||h||_{L^p(u)}
  double a1_of_product = 0.0;    // [Rh u^{1/p}]_{A_1}; 0.0 when Rh vanishes
};

// S(f) = M(f u^{1/p}) / u^{1/p}, u = M_r w; >= |f| pointwise
GridFn rdf_s(const Domain& dom, const GridFn& f, const GridFn& w, double p, double r);

// truncated majorant series; guarantees Rh >= h pointwise (the k = 0 term is
// accumulated first and every later term is nonnegative) and
// ||Rh||_{L^p(u)} <= 2 ||h||_{L^p(u)} + tail_bound
RdFResult rdf_r(const Domain& dom, const GridFn& h, const GridFn& w, double p, double r,
                int max_terms = 16);

} // namespace sdom
