#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "rwekit/core.hpp"

namespace rwekit {

// sin(theta_c) sin(theta_c dot) = |sin(theta - i tau)|^2
double haar_weight(double theta, double tau);

struct SphereCoord {
  double theta = 0, tau = 0, phi = 0, eps = 0;
  GroupElement element() const { return {phi, eps, theta, tau, 0, 0}; }
};

// Tensor grid: Gauss-Legendre in theta on [0, pi] and in tau, eps on [-T, T];
// uniform phi. Flat order is theta slowest, then tau, phi, eps.
struct SphereGrid {
  std::vector<double> theta, theta_w, tau, tau_w, phi, eps, eps_w;
  double phi_w = 0;
  double T = 0;

  static SphereGrid make(int ntheta = 32, int nphi = 64, int ntau = 32, int neps = 32,
                         double T = 5.0);
  std::size_t size() const;
  SphereCoord point(std::size_t i) const;
  // Quadrature weight including the Haar density.
  double weight(std::size_t i) const;
  std::vector<SphereCoord> points() const;
};

struct FieldSamples {
  SphereGrid grid;
  std::vector<cplx> values;
};

// Coefficients alpha^{l ldot}_{m mdot}; keys are doubled (l, ldot, m, mdot).
class CoeffTable {
 public:
  using Key = std::array<int, 4>;

  explicit CoeffTable(int L2 = 0) : L2_(L2) {}
  int bandlimit2() const { return L2_; }
  void set(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot, cplx v);
  cplx get(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot) const;
  const std::map<Key, cplx>& entries() const { return data_; }
  // Every admissible key with l, ldot <= L.
  static std::vector<Key> all_keys(int L2);
  double max_diff(const CoeffTable& o) const;

 private:
  int L2_;
  std::map<Key, cplx> data_;
};

// Column index n used for the sphere functions: 0 for integer l, 1/2 otherwise.
HalfInt sphere_column(HalfInt l);

// e^{-m(eps + i phi)} z^{m mdot}_{l ldot}(theta_c) e^{-mdot(eps - i phi)}
cplx sphere_basis(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot, const SphereCoord& p);

std::vector<cplx> synthesize_sphere(const CoeffTable& coeffs, const std::vector<SphereCoord>& pts);
FieldSamples synthesize_on_grid(const CoeffTable& coeffs, const SphereGrid& grid);

struct InsufficientGrid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AnalysisResult {
  CoeffTable coeffs;
  double residual = 0;           // max |synthesis - samples|
  double relative_residual = 0;  // residual / max |samples|
  double condition = 0;
  std::vector<std::string> warnings;
};

// Least-squares collocation: the phi/eps factor is fitted first on the
// (phi, eps) subgrid, then each (m, mdot) profile on the (theta, tau) subgrid.
AnalysisResult analyze_sphere(const FieldSamples& samples, int L2);

// |sum |alpha|^2 - (2L+1)(2Ldot+1)/(32 pi^4) * int |f|^2 dg| with L, Ldot the
// largest weights carrying a nonzero coefficient.
double parseval_gap(const CoeffTable& coeffs, const FieldSamples& samples);

struct Vec4 {
  double x1 = 0, x2 = 0, x3 = 0, x4 = 0;
};

// Signature (-1, -1, -1, +1).
double minkowski_dot(const Vec4& p, const Vec4& x);

// e^{-i p.x} M^{l ldot}_{mn; mdot ndot}(g)
cplx poincare_basis(const Vec4& p, const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot,
                    HalfInt ndot, const Vec4& x, const GroupElement& g);

// Series over the full group (all six parameters), desk-scale only.
struct GroupCoeff {
  RepLabel rep;
  HalfInt m, n, mdot, ndot;
  cplx value;
};
cplx synthesize_group(const std::vector<GroupCoeff>& coeffs, const GroupElement& g);

}  // namespace rwekit
