#pragma once

#include <string>

#include "rwekit/core.hpp"

namespace rwekit {

enum class Deriv { None, Theta, Tau, ThetaTheta, ThetaTau, TauTau };

struct SingularPoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hyperspherical function Z^l_{mn}(cos theta_c), theta_c = theta - i tau, and its
// partial derivatives in the real coordinates (theta, tau).
cplx zfun(HalfInt l, HalfInt m, HalfInt n, double theta, double tau);
cplx dz(HalfInt l, HalfInt m, HalfInt n, double theta, double tau, Deriv which);

// Matrix [Z^l_{mn}] (rows m, cols n, ascending) and its derivatives.
CMatrix zmatrix(HalfInt l, double theta, double tau, Deriv which = Deriv::None);

// Generalized matrix element M^{l ldot}_{mn; mdot ndot}(g).
cplx mfun(const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot, HalfInt ndot,
          const GroupElement& g);

// Representation matrix: rows (m, mdot), columns (n, ndot).
CMatrix rep_matrix(const RepLabel& rep, const GroupElement& g);

enum class Param { Phi, EpsPhi, Theta, Tau, Psi, EpsPsi };

// Partial derivative of rep_matrix with respect to one real group parameter.
CMatrix rep_matrix_derivative(const RepLabel& rep, const GroupElement& g, Param p);

struct LegendreResidual {
  double res1, res2;
};

LegendreResidual legendre_residual(HalfInt l, HalfInt ldot, HalfInt m, HalfInt n, HalfInt mdot,
                                   HalfInt ndot, double theta, double tau);

enum class RecurrenceForm { Printed, Corrected };

// kind = 1..8. Printed: the relations exactly as stated. Corrected: the
// variant actually satisfied by zfun (see README).
double recurrence_residual(int kind, HalfInt l, HalfInt ldot, HalfInt m, HalfInt n, HalfInt mdot,
                           HalfInt ndot, double theta, double tau,
                           RecurrenceForm form = RecurrenceForm::Printed);

// |[X^2 + l(l+1)] M| and |[Y^2 + ldot(ldot+1)] M| with the Euler-angle
// Laplace-Beltrami operators evaluated from analytic partials.
LegendreResidual eigen_residual(const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot,
                                HalfInt ndot, const GroupElement& g);

}  // namespace rwekit
