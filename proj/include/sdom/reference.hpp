#pragma once
// Plain serial implementations of the hot kernels: independent arithmetic,
// no tables, no prefix sums, no threads. Used as cross-check oracles in the
// tests and as the baseline in the benchmark target.

#include "sdom/lattice.hpp"
#include "sdom/norms.hpp"
#include "sdom/rough.hpp"

namespace sdom::reference {

GridFn apply_t_omega(const Grid& g, const OmegaKernel& k, const GridFn& f, bool adjoint = false);

GridFn maximal_fn(const Domain& dom, const GridFn& h, const Young& Psi);

} // namespace sdom::reference
