#pragma once

#include <array>
#include <string>
#include <vector>

#include "rwekit/core.hpp"

namespace rwekit {

// sqrt((l+m)(l-m+1)); defined for -l <= m <= l+1.
double alpha(HalfInt l, HalfInt m);

// Spin-l angular momentum matrices (Jx, Jy, Jz) in the ascending basis.
std::array<CMatrix, 3> spin_matrices(HalfInt l);

struct SpinOperatorSet {
  RepLabel rep;
  std::array<CMatrix, 3> A, B, Atilde, Btilde;
  CMatrix Xplus, Xminus, X3, Yplus, Yminus, Y3;

  // X_i = (i/2)(A_i + i B_i), Y_i = (i/2)(A_i - i B_i)
  std::array<CMatrix, 3> X() const;
  std::array<CMatrix, 3> Y() const;
};

SpinOperatorSet tensor_operators(const RepLabel& rep);

// Generators of the one-factor reps (l,0) and (0,ldot), as printed for
// the spin-1/2 and spin-1 anchors.
std::array<CMatrix, 3> chiral_A(HalfInt l);
std::array<CMatrix, 3> chiral_B(HalfInt l);

double ladder_action_check(const SpinOperatorSet& set);

struct NamedResidual {
  std::string name;
  double residual;
};

std::vector<NamedResidual> commutator_check(const SpinOperatorSet& set);

struct Casimirs {
  CMatrix X2, Y2;
};
Casimirs casimir_matrices(const SpinOperatorSet& set);

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }
double max_abs(const CMatrix& m);

}  // namespace rwekit
