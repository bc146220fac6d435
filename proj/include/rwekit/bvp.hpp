#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rwekit/core.hpp"
#include "rwekit/harmonic.hpp"
#include "rwekit/liealg.hpp"
#include "rwekit/rwe.hpp"

namespace rwekit {

// ---- frames on the complex sphere -------------------------------------------

enum class FrameVar { Phi, Eps, Theta, Tau };

// T dT^-1/dx for T = rep_matrix(g)^T (row index n, column m), psi = eps_psi = 0.
// conjugate = true gives the entrywise conjugate frame.
CMatrix frame_matrix(const RepLabel& rep, double theta, double tau, FrameVar x,
                     bool conjugate = false);

// The same matrix assembled from one-factor generators and the complex angle.
CMatrix frame_generators(const RepLabel& rep, double theta, double tau, FrameVar x,
                         bool conjugate = false);

// Residuals of the eight frame identities (four variables, plain and conjugate).
std::vector<NamedResidual> frame_identities(const RepLabel& rep, const GroupElement& g);

struct SingularFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One derivative expressed in the six coordinate derivatives.
struct FrameRow {
  cplx phi, eps, theta, tau, r, rstar;
};

// d/da_j, d/da*_j on the sphere and d/da~_j, d/da~*_j on the dual sphere.
struct DerivativeFrame {
  std::array<FrameRow, 3> a, astar, adual, adualstar;
};

DerivativeFrame sphere_derivative_frame(const SpherePoint& p);

// Max deviation of the frames from the identity Jacobian on the coordinate
// functions (z_k on the sphere, z*_k on the dual sphere).
double frame_closure_residual(const SpherePoint& p);

// ---- separated basis ----------------------------------------------------------

// Basis used by the separation ansatz:
//   P^{L Ld}_{m n; md nd} = e^{-n(eps + i phi) - nd(eps - i phi)} Z^L_{n m}(theta_c) conj Z^Ld_{nd md}
// together with its derivatives d/dtheta_c (holomorphic factor) and
// d/dtheta_c-dot (antiholomorphic factor).
struct BasisJet {
  cplx value, d_hol, d_antihol;
};
BasisJet separated_basis(HalfInt L, HalfInt Ld, HalfInt m, HalfInt n, HalfInt md, HalfInt nd,
                     const SphereCoord& p);

// ---- radial system ------------------------------------------------------------

struct RadialComponent {
  int link = 0;
  HalfInt m, mdot;
  auto operator<=>(const RadialComponent&) const = default;
};

struct RadialMode {
  HalfInt l0, ldot0, n, ndot;
  auto operator<=>(const RadialMode&) const = default;
  std::string str() const;
};

// C f' + (K / r + kappa) f = 0 and the same for the dual track.
struct RadialSystem {
  RadialMode mode;
  std::vector<RadialComponent> index;
  CMatrix C, K, Cstar, Kstar;
  cplx kappa, kappa_star;
  bool algebraic_only() const;
};

// Coefficient matrices of the separated first-order operator for one track:
//   sum_J [ am (dphi + i deps)/(r s) + 2i m_J cot am / r - bm (dtheta + i dtau) / r
//         - ad (dphi - i deps)/(r s*) + 2i md_J cot* ad / r + bd (dtheta - i dtau) / r
//         + c (1+i) dr + de / r ] psi_J + kappa psi_I
// The dual track uses the entrywise conjugate operator applied to conj(psi).
struct SeparatedOperator {
  CMatrix am, bm, ad, bd, c, de;
  cplx kappa;
};
struct SeparatedOperators {
  SeparatedOperator primal, dual;
};
SeparatedOperators separated_operators(const SpinChain& chain);

// Pre: l0 >= max link l, ldot0 >= max link ldot.
RadialSystem assemble_radial(const SpinChain& chain, HalfInt l0, HalfInt ldot0, HalfInt n,
                             HalfInt ndot);
// Same without the truncation check; used for the lower modes of a series.
RadialSystem assemble_mode(const SpinChain& chain, const RadialMode& mode);

// Independent route: apply the separated operator to single-component ansatz
// functions at sample points and project onto the row basis function.
struct ProjectionOracle {
  CMatrix C, K, Cstar, Kstar;
  double separation_defect = 0;  // max relative non-separable remainder
};
ProjectionOracle project_radial(const SpinChain& chain, const RadialMode& mode,
                                int samples = 24, unsigned seed = 7);

// ---- radial integration -------------------------------------------------------

struct DAEDegeneracy : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& what, double r) : std::runtime_error(what), last_r(r) {}
  double last_r;
};
struct DomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct IntegrationOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
};

// Rank-revealing split of C f' + G(r) f = 0 with G = K/r + kappa.
class RadialDAE {
 public:
  RadialDAE(const CMatrix& C, const CMatrix& K, cplx kappa);
  int size() const { return static_cast<int>(C_.rows()); }
  int differential_rank() const { return rank_; }
  // Consistent state for the given differential coordinates V1^H f.
  CVector complete(double r, const CVector& x) const;
  CVector reduce(const CVector& f) const;
  CVector project(double r, const CVector& f) const;
  CVector derivative(double r, const CVector& f) const;
  CVector reduced_rhs(double r, const CVector& x) const;
  // |U2^H G f|: how far f is from the algebraic constraint.
  double constraint_defect(double r, const CVector& f) const;

 private:
  CMatrix algebraic_solve(double r, const CMatrix& rhs) const;
  CMatrix C_, K_, V1_, V2_, U1_, U2_;
  Eigen::VectorXd s1_;
  cplx kappa_;
  int rank_ = 0;
};

struct RadialProfiles {
  std::vector<double> r;
  std::vector<CVector> f;
  int differential_rank = 0;
  double initial_constraint_defect = 0;
};

// Integrates from r.front() through the sorted output radii.
RadialProfiles integrate_radial(const CMatrix& C, const CMatrix& K, cplx kappa,
                                const CVector& f0, const std::vector<double>& r_out,
                                const IntegrationOptions& opt = {});

struct RadialSolution {
  RadialProfiles primal, dual;
};
RadialSolution integrate_radial(const RadialSystem& sys, const CVector& f0, const CVector& fstar0,
                                const std::vector<double>& r_out,
                                const IntegrationOptions& opt = {});

// ---- boundary data and the series ---------------------------------------------

struct ComponentKey {
  int track = 0;  // 0: psi, 1: dual psi
  int link = 0;
  HalfInt m, mdot;
  auto operator<=>(const ComponentKey&) const = default;
};

struct BoundaryData {
  double R = 1.0;
  SphereGrid grid;
  std::map<ComponentKey, std::vector<cplx>> values;
};

struct ModeCoeff {
  RadialMode mode;
  cplx value;
};

struct BoundaryFit {
  std::map<ComponentKey, std::vector<ModeCoeff>> coeffs;
  double residual = 0;
  double relative_residual = 0;
  double condition = 0;
  std::vector<std::string> warnings;
};

struct BoundaryOptions {
  bool all_columns = false;  // fit every (n, ndot) instead of the sphere column
};

// Sorted modes (L, Ld, n, nd) admissible for one component under l0, ldot0.
std::vector<RadialMode> component_modes(HalfInt m, HalfInt mdot, HalfInt l0, HalfInt ldot0,
                                        bool all_columns);

BoundaryFit boundary_analyze(const SpinChain& chain, const BoundaryData& data, HalfInt l0,
                             HalfInt ldot0, const BoundaryOptions& opt = {});

// Value of one component of the boundary series.
cplx boundary_series(const std::vector<ModeCoeff>& coeffs, const ComponentKey& key,
                     const SphereCoord& p);

struct FieldJet {
  CVector psi, d_phi, d_eps, d_theta, d_tau, d_r;
};
using FieldEvaluator = std::function<FieldJet(int track, double r, const SphereCoord& p)>;

struct SolveOptions {
  double R = 1.0, Rmax = 3.0;
  int n_r = 21;
  BoundaryOptions boundary;
  IntegrationOptions integration;
};

class FieldSolution {
 public:
  struct Mode {
    RadialSystem system;
    CVector f0, fstar0;
    RadialSolution profiles;
  };
  SpinChain chain;
  HalfInt l0, ldot0;
  double R = 1.0, Rmax = 1.0;
  std::vector<double> r_grid;
  BoundaryFit fit;
  std::vector<Mode> modes;
  std::vector<std::string> diagnostics;
  IntegrationOptions integration;

  // Profiles of one mode at arbitrary r in [R, Rmax].
  CVector profile(std::size_t mode, int track, double r) const;
  FieldJet jet(int track, double r, const SphereCoord& p) const;
  FieldEvaluator evaluator() const;
};

FieldSolution solve(const SpinChain& chain, const BoundaryData& data, HalfInt l0, HalfInt ldot0,
                    const SolveOptions& opt = {});

// Component values (chain order) of one track at the given points.
std::vector<CVector> synthesize_field(const FieldSolution& sol, int track, double r,
                                      const std::vector<SphereCoord>& pts);

struct ResidualStats {
  double max = 0, rms = 0;
  double field_norm = 0;  // max |psi| over the used points
  double relative_max = 0, relative_rms = 0;
  int used = 0, skipped = 0;
};

struct SamplePoint {
  double r;
  SphereCoord p;
};

// Residual of the separated first-order system (both tracks) at the samples.
ResidualStats pde_residual(const FieldEvaluator& field, const SpinChain& chain,
                           const std::vector<SamplePoint>& pts);

// Deterministic interior samples with |sin theta_c| >= 0.2.
std::vector<SamplePoint> interior_samples(int count, double R, double Rmax, unsigned seed = 11);

}  // namespace rwekit
