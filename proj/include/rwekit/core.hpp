#pragma once

#include <array>
#include <complex>
#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rwekit {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Mat2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised by from_matrix when the Euler factorization is not unique.
struct DegenerateDecomposition : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spin labels and projections are stored doubled so that l = 1/2 is exact.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  static constexpr HalfInt from_twice(int t) { return HalfInt(t); }
  static constexpr HalfInt integer(int v) { return HalfInt(2 * v); }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }
  constexpr bool same_class(HalfInt o) const { return ((twice_ - o.twice_) % 2) == 0; }

  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
  constexpr HalfInt operator-() const { return HalfInt(-twice_); }
  constexpr HalfInt operator+(int v) const { return HalfInt(twice_ + 2 * v); }
  constexpr HalfInt operator-(int v) const { return HalfInt(twice_ - 2 * v); }
  constexpr auto operator<=>(const HalfInt&) const = default;

  // Integer difference (this - o); both must be in the same class.
  int minus_int(HalfInt o) const;

  std::string str() const;

 private:
  constexpr explicit HalfInt(int t) : twice_(t) {}
  int twice_ = 0;
};

constexpr HalfInt operator""_h(unsigned long long twice) {
  return HalfInt::from_twice(static_cast<int>(twice));
}

// -l, -l+1, ..., l
std::vector<HalfInt> projections(HalfInt l);

struct RepLabel {
  HalfInt l;
  HalfInt ldot;

  int dim_l() const { return l.twice() + 1; }
  int dim_ldot() const { return ldot.twice() + 1; }
  int dim() const { return dim_l() * dim_ldot(); }
  // Basis order: m slow, mdot fast, both ascending.
  int index(HalfInt m, HalfInt mdot) const;
  bool contains(HalfInt m, HalfInt mdot) const;
  void validate() const;
  auto operator<=>(const RepLabel&) const = default;
  std::string str() const;
};

struct GroupElement {
  double phi = 0, eps_phi = 0, theta = 0, tau = 0, psi = 0, eps_psi = 0;

  cplx phi_c() const { return {phi, -eps_phi}; }
  cplx theta_c() const { return {theta, -tau}; }
  cplx psi_c() const { return {psi, -eps_psi}; }
  cplx phi_c_dot() const { return std::conj(phi_c()); }
  cplx theta_c_dot() const { return std::conj(theta_c()); }
  cplx psi_c_dot() const { return std::conj(psi_c()); }
};

GroupElement make_group_element(double phi, double eps_phi, double theta, double tau,
                                double psi, double eps_psi);

// Subgroup matrices a_i(t), b_i(t) in the ascending (m = -1/2 first) basis.
Mat2 subgroup_a(int axis, double t);
Mat2 subgroup_b(int axis, double t);

// a3(phi) b3(eps_phi) . a1(theta) b1(tau) . a3(psi) b3(eps_psi)
Mat2 to_matrix(const GroupElement& g);

// Inverse of to_matrix; the result lies in the fundamental domain.
GroupElement from_matrix(const Mat2& m);

GroupElement compose(const GroupElement& a, const GroupElement& b);

struct SpherePoint {
  cplx r, theta_c, phi_c;
  std::array<cplx, 3> z;
  std::array<cplx, 3> zdual;
};

SpherePoint sphere_embed(cplx r, cplx theta_c, cplx phi_c);

CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace rwekit
