#pragma once
// Sparse domination of the commutator: stopping-time recursion on the base
// lattice with quantile thresholds, Calderon-Zygmund selection of the next
// generation, lift onto the shifted lattices, the sparse bilinear forms, and
// the verification lemmas (sparse operator L^1(w) bound, Carleson embedding).

#include "sdom/lattice.hpp"
#include "sdom/norms.hpp"
#include "sdom/rough.hpp"

namespace sdom {

// maximal base subcubes of q0 whose mask density exceeds `height`
// (depth-first, row-major order); q0 itself if its density already exceeds it
std::vector<Cube> cz_decompose(const Domain& dom, const std::vector<std::uint8_t>& mask,
                               const Cube& q0, double height);

struct DominationNode {
  Cube q;                      // node cube (base lattice)
  Cube r;                      // its shifted parent (the exact tripled cube)
  double a_local = 0.0;        // A = A1 + A2 + A3 + A4
  double t1 = 0.0, t2 = 0.0;   // node form terms
  double rho = 0.0;            // lift factor onto the shifted parent's terms
  double lhs_local = 0.0;      // int over Q of |[b,T](f on 3Q)| |g|
  std::int64_t omega_cells = 0;
  std::int64_t selected_cells = 0; // total cells of the next generation
};

struct DominationResult {
  double lhs = 0.0;          // |sum [b,T]f . g h^n|
  double lhs_integral = 0.0; // int |[b,T]f| |g| (root node lhs_local)
  double node_sum = 0.0;     // sum over nodes of A (t1 + t2)
  double form_total = 0.0;   // sum over lattices of T_j + T*_j
  double rhs = 0.0;          // k_empirical * form_total
  double k_empirical = 0.0;  // max over nodes of the local A
  double k_lifted = 0.0;     // max over nodes of A * rho (never larger)
  double s = 2.0;
  double eta_base = 0.5;
  double eta_shifted = 0.0;  // 1 / (2 * 9^dim)
  std::vector<DominationNode> nodes;
  SparseFamily base_family;           // all node cubes
  std::vector<SparseFamily> families; // shifted parents grouped by lattice
  std::vector<double> form;           // T_j, aligned with families
  std::vector<double> form_adj;       // T*_j, aligned with families
  bool chain_ok = false;    // every link of the domination chain held (with FP slack)
  bool witness_ok = false;  // all sparseness witnesses found
  bool ok = false;          // both
};

// runs the stopping-time recursion from the root cube and certifies
// lhs <= k_empirical * sum_j (T_j + T*_j); s > 1 is the exponent of the
// g-averages (the f-averages use exponent 1)
DominationResult sparse_dominate_commutator(const Domain& dom, const OmegaKernel& k,
                                            const GridFn& b, const GridFn& f, const GridFn& g,
                                            double s);

// sum over family cubes of <|f|>_{r,Q} <|(b - b_Q) g|>_{s,Q} |Q|;
// adjoint = true swaps which argument carries b - b_Q:
// sum of <|(b - b_Q) f|>_{r,Q} <|g|>_{s,Q} |Q|
double bilinear_form(const Domain& dom, const SparseFamily& fam, const GridFn& b, const GridFn& f,
                     const GridFn& g, double r, double s, bool adjoint = false);

// B_S f = sum over family cubes of ||f||_{Psi,Q} chi_Q
GridFn sparse_operator(const Domain& dom, const SparseFamily& fam, const GridFn& f,
                       const Young& Psi);

struct Lemma23Report {
  double lhs = 0.0;   // ||B_S f||_{L^1(w)}
  double rhs = 0.0;   // (4/eta) ainf ||M_Psi f||_{L^1(w)}
  double ainf = 1.0;
  bool ok = false;
};

// pass ainf_w >= 1 to reuse a precomputed A_infty constant (batch runs)
Lemma23Report lemma23_verify(const Domain& dom, const SparseFamily& fam, const GridFn& f,
                             const GridFn& w, const Young& Psi, double ainf_w = -1.0);

struct CarlesonReport {
  double lhs = 0.0; // sum over family cubes of <|f|>_Q^p |Q|
  double rhs = 0.0; // (1/eta) ||Mf||_p^p
  bool pointwise_ok = false; // <|f|>_Q <= min over the witness cells of Mf, every cube
  bool ok = false;
};

// requires a verified family (witness filled); certifies the embedding
// through the witness cells
CarlesonReport carleson_embedding_verify(const Domain& dom, const SparseFamily& fam,
                                         const GridFn& f, double p);

std::string family_to_string(const SparseFamily& fam, int dim);
SparseFamily family_from_string(const std::string& text, const Grid& g);

} // namespace sdom
