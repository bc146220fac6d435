#include "rwekit/core.hpp"

#include <cmath>

namespace rwekit {

int HalfInt::minus_int(HalfInt o) const {
  const int d = twice_ - o.twice_;
  if (d % 2 != 0) throw InvalidArgument("half-integer difference is not an integer");
  return d / 2;
}

std::string HalfInt::str() const {
  if (is_integer()) return std::to_string(twice_ / 2);
  return std::to_string(twice_) + "/2";
}

std::vector<HalfInt> projections(HalfInt l) {
  std::vector<HalfInt> out;
  out.reserve(l.twice() + 1);
  for (int t = -l.twice(); t <= l.twice(); t += 2) out.push_back(HalfInt::from_twice(t));
  return out;
}

int RepLabel::index(HalfInt m, HalfInt mdot) const {
  if (!contains(m, mdot))
    throw InvalidArgument("projection (" + m.str() + ", " + mdot.str() + ") outside rep " + str());
  return ((m.twice() + l.twice()) / 2) * dim_ldot() + (mdot.twice() + ldot.twice()) / 2;
}

bool RepLabel::contains(HalfInt m, HalfInt mdot) const {
  return std::abs(m.twice()) <= l.twice() && m.same_class(l) &&
         std::abs(mdot.twice()) <= ldot.twice() && mdot.same_class(ldot);
}

void RepLabel::validate() const {
  if (l.twice() < 0 || ldot.twice() < 0) throw InvalidArgument("negative weight in rep " + str());
}

std::string RepLabel::str() const { return "(" + l.str() + "," + ldot.str() + ")"; }

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite ") + name);
}

// Reduce x into [lo, lo + period).
double wrap(double x, double lo, double period) {
  double r = std::fmod(x - lo, period);
  if (r < 0) r += period;
  return lo + r;
}

}  // namespace

GroupElement make_group_element(double phi, double eps_phi, double theta, double tau,
                                double psi, double eps_psi) {
  require_finite(phi, "phi");
  require_finite(eps_phi, "eps_phi");
  require_finite(theta, "theta");
  require_finite(tau, "tau");
  require_finite(psi, "psi");
  require_finite(eps_psi, "eps_psi");

  GroupElement g{phi, eps_phi, theta, tau, psi, eps_psi};
  // theta -> theta + 4pi leaves a1 unchanged; theta -> theta + 2pi flips its sign,
  // absorbed by psi -> psi + 2pi.
  if (g.theta < 0 || g.theta > kPi) {
    g.theta = wrap(g.theta, 0.0, 4 * kPi);
    if (g.theta >= 2 * kPi) {
      g.theta -= 2 * kPi;
      g.psi += 2 * kPi;
    }
    if (g.theta > kPi) {
      // a1(theta_c) = -a1(theta_c - 2pi) = -a3(pi) a1(2pi - theta + i tau) a3(-pi)
      g.theta = 2 * kPi - g.theta;
      g.tau = -g.tau;
      g.phi += kPi;
      g.psi += kPi;  // -pi from the reflection, +2pi for the overall sign
    }
  }
  g.phi = wrap(g.phi, 0.0, 2 * kPi);
  g.psi = wrap(g.psi, -2 * kPi, 4 * kPi);
  return g;
}

Mat2 subgroup_a(int axis, double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Mat2 m;
  switch (axis) {
    case 1: m << c, kI * s, kI * s, c; break;
    case 2: m << c, -s, s, c; break;
    case 3: m << std::exp(kI * (t / 2)), 0.0, 0.0, std::exp(-kI * (t / 2)); break;
    default: throw InvalidArgument("subgroup axis must be 1, 2 or 3");
  }
  return m;
}

Mat2 subgroup_b(int axis, double t) {
  const double c = std::cosh(t / 2), s = std::sinh(t / 2);
  Mat2 m;
  switch (axis) {
    case 1: m << c, s, s, c; break;
    case 2: m << c, kI * s, -kI * s, c; break;
    case 3: m << std::exp(t / 2), 0.0, 0.0, std::exp(-t / 2); break;
    default: throw InvalidArgument("subgroup axis must be 1, 2 or 3");
  }
  return m;
}

Mat2 to_matrix(const GroupElement& g) {
  return subgroup_a(3, g.phi) * subgroup_b(3, g.eps_phi) * subgroup_a(1, g.theta) *
         subgroup_b(1, g.tau) * subgroup_a(3, g.psi) * subgroup_b(3, g.eps_psi);
}

GroupElement from_matrix(const Mat2& m) {
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite(m(i).real()) || !std::isfinite(m(i).imag()))
      throw InvalidArgument("matrix has non-finite entries");
  const cplx det = m.determinant();
  if (std::abs(det - 1.0) >= 1e-9)
    throw InvalidArgument("determinant differs from 1 (|det - 1| = " +
                          std::to_string(std::abs(det - 1.0)) + ")");

  // cos^2(theta_c/2) = m00 m11, so cos(theta_c) = 2 m00 m11 - 1.
  const cplx cos_t = 2.0 * m(0, 0) * m(1, 1) - 1.0;
  cplx theta_c = std::acos(cos_t);
  if (theta_c.real() < 0) theta_c = -theta_c;
  if (std::abs(std::sin(theta_c)) < 1e-12)
    throw DegenerateDecomposition(
        "sin(theta_c) vanishes: only phi+psi (theta_c = 0) or phi-psi (theta_c = pi) is determined");

  const cplx c = std::cos(theta_c / 2.0), s = std::sin(theta_c / 2.0);
  const cplx sum = -2.0 * kI * std::log(m(0, 0) / c);        // phi_c + psi_c
  const cplx diff = -2.0 * kI * std::log(m(0, 1) / (kI * s));  // phi_c - psi_c
  const cplx phi_c = 0.5 * (sum + diff);
  const cplx psi_c = 0.5 * (sum - diff);

  GroupElement g;
  g.theta = theta_c.real();
  g.tau = -theta_c.imag();
  g.eps_phi = -phi_c.imag();
  g.eps_psi = -psi_c.imag();
  // Shifting phi by 2k pi flips the sign k times; compensate through psi.
  const double k = std::floor(phi_c.real() / (2 * kPi));
  g.phi = phi_c.real() - 2 * kPi * k;
  g.psi = wrap(psi_c.real() + 2 * kPi * k, -2 * kPi, 4 * kPi);
  return g;
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  return from_matrix(to_matrix(a) * to_matrix(b));
}

SpherePoint sphere_embed(cplx r, cplx theta_c, cplx phi_c) {
  SpherePoint p{r, theta_c, phi_c, {}, {}};
  const cplx st = std::sin(theta_c);
  p.z = {r * st * std::cos(phi_c), r * st * std::sin(phi_c), r * std::cos(theta_c)};
  const cplx rd = std::conj(r), td = std::conj(theta_c), pd = std::conj(phi_c);
  const cplx sd = std::sin(td);
  p.zdual = {rd * sd * std::cos(pd), rd * sd * std::sin(pd), rd * std::cos(td)};
  return p;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace rwekit
