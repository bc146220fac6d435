#pragma once

#include <array>
#include <string>
#include <vector>

#include "rwekit/core.hpp"
#include "rwekit/liealg.hpp"

namespace rwekit {

struct ChainLink {
  RepLabel rep;
  int k = 1, kdot = 1;
};

// c-constant for the transition from link `from` (column) to link `to` (row).
// cls is l' - l in {-1, 0, +1}; cstar feeds the dual matrices.
struct ChainConstant {
  int from = 0, to = 0, cls = 0;
  cplx c{1.0, 0.0};
  cplx cstar{1.0, 0.0};
};

struct SpinChain {
  std::vector<ChainLink> links;
  std::vector<ChainConstant> constants;
  bool default_constants = true;  // unit constants on every allowed transition
  cplx kappa{1.0, 0.0};
  HalfInt spin;

  int dim() const;
  int offset(int link) const;
  HalfInt max_l() const;
  HalfInt max_ldot() const;
};

struct InvalidChain : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OracleFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SpinChain dirac_chain();
SpinChain single_link_chain(RepLabel rep, HalfInt spin);

// Constants actually used: explicit ones, or unit constants on every ordered
// link pair with l' - l = ldot' - ldot in {-1, 0, +1}.
std::vector<ChainConstant> effective_constants(const SpinChain& chain);

// Empty when valid.
std::vector<std::string> chain_validate(const SpinChain& chain);

struct LambdaSet {
  std::array<CMatrix, 3> L, Lstar;
};

LambdaSet build_lambda(const SpinChain& chain);
LambdaSet lambda_oracle(const SpinChain& chain);

// Basis (columns, vectorized block in column-major order) of the solutions of
// [L, X3] = [L, Y3] = 0, [[L, X-], X+] = [[L, Y-], Y+] = 2L for one block.
CMatrix lambda3_block_solutions(RepLabel row, RepLabel col);

// Block-diagonal generators over the chain.
struct ChainOperators {
  std::array<CMatrix, 3> A, B, Atilde, Btilde;
  CMatrix Xplus, Xminus, X3, Yplus, Yminus, Y3;
};
ChainOperators chain_operators(const SpinChain& chain);

std::vector<NamedResidual> commutator_suite(const LambdaSet& lambda, const ChainOperators& ops);

struct DEMatrices {
  CMatrix D, E, Dstar, Estar;                  // L1 A2 - L2 A1 and analogues
  CMatrix Dprod, Eprod, Dstar_prod, Estar_prod;  // 2 L3 + A2 L1 - A1 L2 and analogues
  CMatrix Dtable, Etable, Dstar_table, Estar_table;
  double product_vs_table = 0;
  double definition_vs_product = 0;
};
DEMatrices de_matrices(const SpinChain& chain, const LambdaSet& lambda, const ChainOperators& ops);

// Complex rotation R with M J_k M^-1 = sum_j R_jk J_j, embedded as diag(R, conj R).
CMatrix bivector_rotation(const GroupElement& g);
CMatrix bivector_metric();

struct InvarianceResidual {
  double lambda = 0, lambda_star = 0;
};
InvarianceResidual invariance_residual(const LambdaSet& lambda, const SpinChain& chain,
                                       const GroupElement& g);

// Block-diagonal representation matrix of the chain; dual uses (M^dagger)^-1.
CMatrix chain_rep_matrix(const SpinChain& chain, const GroupElement& g, bool dual = false);

// Gamma_1..6; Gamma_{k+3} carries the a*_k derivative (g_{k+3} = i a_k).
std::array<CMatrix, 6> gamma_blocks(const LambdaSet& lambda);

CVector lambda3_eigenvalues(const LambdaSet& lambda);

}  // namespace rwekit
