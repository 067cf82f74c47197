#pragma once
// Rough homogeneous singular kernels K(x,y) = Omega((x-y)/|x-y|) / |x-y|^n
// with bounded mean-zero angular part, their dense principal-value
// transforms on the grid (the diagonal cell is omitted), commutators with a
// symbol, and the family of truncated grand maximal operators.

#include "sdom/lattice.hpp"

#include <functional>

namespace sdom {

struct OmegaKernel {
  int dim = 1;
  // dim 1: values[0] = Omega(+1), values[1] = Omega(-1)
  // dim 2: 16 equal angular sectors, values[k] on directions with angle in
  //        [-pi + k*pi/8, -pi + (k+1)*pi/8)
  std::vector<double> values;

  double sup_norm() const;

  static OmegaKernel make_1d(double a); // {+a, -a}
  static OmegaKernel make_2d(std::vector<double> sector_values); // zero-sum, size 16
};

// out(x) = sum_{y != x} Omega((x-y)/|x-y|) |x-y|^-n f(y) h^n over the whole
// grid; adjoint evaluates the kernel at the reversed direction
GridFn apply_t_omega(const Grid& g, const OmegaKernel& k, const GridFn& f, bool adjoint = false);

// same transform with the source restricted to the member cells of `supp`
// and the output restricted to the member cells of `eval` (zero elsewhere)
GridFn apply_t_restricted(const Grid& g, const OmegaKernel& k, const GridFn& f,
                          const CubeGeo& supp, const CubeGeo& eval, bool adjoint = false);

// [b, T] f = T(b f) - b T(f)
GridFn commutator_apply(const Grid& g, const OmegaKernel& k, const GridFn& b, const GridFn& f,
                        bool adjoint = false);

// sup over cubes Q containing the cell of the p-average over Q of
// |T(f off 3Q)|; p must be >= 1, infinity selects the essential sup over Q
GridFn grand_maximal(const Domain& dom, const OmegaKernel& k, const GridFn& f, double p);

// sup over cubes Q containing the cell of the average over Q of
// |T(f off 3Q)| |g|
GridFn bilinear_grand_maximal(const Domain& dom, const OmegaKernel& k, const GridFn& f,
                              const GridFn& g);

// the localized bilinear maximal operator of the domination argument:
// sup over base subcubes Q of q0 containing the cell of the average over Q
// of |T(f on 3q0 minus 3Q)| |g|; zero outside q0
GridFn local_bilinear_maximal(const Domain& dom, const OmegaKernel& k, const GridFn& f,
                              const GridFn& g, const Cube& q0);

// rank-truncation maximal: sup over cubes Q containing the cell of the
// ceil(lambda * #cells)-th largest value (1-indexed) of |T(f off 3Q)| on
// Q's cells; below rank one it degenerates to the plain sup
GridFn rank_maximal(const Domain& dom, const OmegaKernel& k, const GridFn& f, double lambda);

struct WeakTypeReport {
  double value = 0.0;   // sup over probes and thresholds
  int arg_probe = -1;
  double arg_lambda = 0.0;
};

// empirical L^q -> L^{q,infty} lower bound: max over probes f and a log grid
// of thresholds lambda of lambda |{|op(f)| > lambda}|^{1/q} / ||f||_q.
// op must be pure (safe to call from several threads).
WeakTypeReport weak_type_estimate(const Grid& g, const std::vector<GridFn>& probes,
                                  const std::function<GridFn(const GridFn&)>& op, double q_exp);

} // namespace sdom
