#pragma once
// Experiment harness: config parsing, weight/symbol/probe generators,
// probe-maximization operator-norm lower bounds, the two theorem verifiers,
// the weight-family scaling experiment, and the subcommand driver shared by
// the CLI and the tests.

#include "sdom/lattice.hpp"
#include "sdom/norms.hpp"
#include "sdom/rdf.hpp"
#include "sdom/rough.hpp"
#include "sdom/sparse.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sdom {

struct Config {
  int dim = 1;
  double half_width = 4.0;
  int resolution = 8;
  std::uint64_t seed = 1;
  double omega = 1.0;                // 1D odd kernel amplitude
  std::vector<double> omega_sectors; // 2D: 16 zero-sum sector values; empty = alternating +-1
  std::string symbol = "sawtooth";   // constant | sawtooth | log_dist | random_bmo
  double symbol_param = 1.0;
  std::string weight = "one";        // one | power | checkerboard | random_a1
  double weight_param = -0.5;
  double weight_scale = 1.0;
  double p = 2.0;
  double q = 1.5;
  double r = 2.0;
  double s = 2.0;
  int probes_signs = 32;
  int probes_indicators = 16;
  int probes_bumps = 8;
  int rdf_max_terms = 16;
  double tau = -1.0;                 // reverse Holder tau; -1 = 11 * 2^dim
  int triples = 8;                   // dominate: random (b, f, g) triples
  double lambda = 0.125;             // rank-truncation maximal parameter
  std::vector<double> deltas = {-0.2, -0.4, -0.6, -0.8}; // scaling power family
  std::string families_path;         // optional: serialized families to re-verify

  // key = value lines, '#' comments; unknown keys and malformed values throw
  // invalid_argument naming the key
  static Config from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
  void validate() const; // cross-field constraints, throws naming the field
};

OmegaKernel kernel_from_config(const Config& cfg);
GridFn make_weight(const Domain& dom, const std::string& kind, double param, double scale,
                   std::uint64_t seed);
GridFn make_symbol(const Domain& dom, const std::string& kind, double param, std::uint64_t seed);

// 'signs' random sign fields, 'indicators' dyadic cube indicators,
// 'bumps' modulated Gaussian bumps; deterministic in the seed
std::vector<GridFn> make_probes(const Grid& g, int signs, int indicators, int bumps,
                                std::uint64_t seed);

// weak-type corpus: per level two cube indicators and one two-child
// difference, plus 8 random sign fields and one point mass
std::vector<GridFn> make_weak_probes(const Grid& g, std::uint64_t seed);

using Op = std::function<GridFn(const GridFn&)>;

// max over probes f of ||op f||_{L^p(w)} / ||f||_{L^p(src or w)}; when adj is
// given, one extra probe is synthesized from the best probe by duality
// through the adjoint. Every probe is explicit, so the estimate is a true
// lower bound of the operator norm.
double weighted_opnorm_lower(const Grid& g, const Op& op, const Op& adj, double p,
                             const GridFn& w, const GridFn* src,
                             const std::vector<GridFn>& probes);

struct Thm11Report {
  double omega_inf = 0.0, bmo = 0.0, a1 = 0.0, ainf = 0.0;
  double lhs_rtow = 0.0;  // ||[b,T]||_{L^p(M_r w) -> L^p(w)} lower bound
  double rhs_core = 0.0;  // |Omega| bmo (p')^3 p^2 (r')^{1+1/p'}
  double lhs_w = 0.0;     // ||[b,T]||_{L^p(w) -> L^p(w)} lower bound
  double rhs_mix = 0.0;   // |Omega| bmo a1^{1/p} ainf^{1+1/p'}
  double rhs_old = 0.0;   // same with the older exponent 2+1/p (never smaller)
  double ratio_core = 0.0, ratio_mix = 0.0;
};
Thm11Report verify_thm11(const Domain& dom, const OmegaKernel& k, const GridFn& b,
                         const GridFn& w, double p, double r,
                         const std::vector<GridFn>& probes);

struct Thm12Report {
  double omega_inf = 0.0, bmo = 0.0, ainf = 0.0, aq = 0.0, mixed = 0.0;
  double lhs = 0.0;      // ||[b,T]||_{L^p(w) -> L^p(w)} lower bound
  double rhs_core = 0.0; // |Omega| bmo ainf mixed
  double ratio = 0.0;
  bool jensen_ok = false; // per-cube mixed ratio <= A_q ratio, all cubes
};
Thm12Report verify_thm12(const Domain& dom, const OmegaKernel& k, const GridFn& b,
                         const GridFn& w, double p, double q,
                         const std::vector<GridFn>& probes);

struct ScalingRow {
  double delta = 0.0, a1 = 0.0, ap = 0.0, ainf = 0.0, mixed = 0.0, r_w = 0.0, bmo = 0.0;
  double lhs_rtow = 0.0, lhs_w = 0.0, rhs_core = 0.0, rhs_mix = 0.0, rhs_old = 0.0;
  double ratio_core = 0.0, ratio_mix = 0.0;
};
std::vector<ScalingRow> scaling_experiment(const Config& cfg);

// deterministic seeded (b, f, g) triple for the domination batch
void make_triple(const Domain& dom, const Config& cfg, int index, GridFn& b, GridFn& f,
                 GridFn& g);

// shared driver: runs one subcommand (constants, dominate, verify-thm11,
// verify-thm12, lemmas, scaling, rdf), writes its reports under outdir.
// Returns 0 on success, 1 on a violated numeric invariant (named on stderr);
// config errors throw invalid_argument (the CLI maps them to exit 2).
int run_subcommand(const std::string& cmd, const Config& cfg, const std::string& outdir);

} // namespace sdom
