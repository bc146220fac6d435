#include "rwekit/hyperfun.hpp"

#include <cmath>

#include "rwekit/liealg.hpp"

namespace rwekit {

namespace {

// d^k/dx^k of cos(x/2)^a sin(x/2)^p (trig) or cosh(x/2)^a sinh(x/2)^p (hyperbolic).
double half_angle_power(double c, double s, int a, int p, int k, bool hyperbolic) {
  if (k == 0) return std::pow(c, a) * std::pow(s, p);
  double v = 0;
  if (a != 0) v += (hyperbolic ? 0.5 : -0.5) * a * half_angle_power(c, s, a - 1, p + 1, k - 1, hyperbolic);
  if (p != 0) v += 0.5 * p * half_angle_power(c, s, a + 1, p - 1, k - 1, hyperbolic);
  return v;
}

cplx ipow(int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

void check_indices(HalfInt l, HalfInt m, HalfInt n) {
  if (l.twice() < 0) throw InvalidArgument("negative weight l = " + l.str());
  if (std::abs(m.twice()) > l.twice() || !m.same_class(l))
    throw InvalidArgument("index m = " + m.str() + " invalid for l = " + l.str());
  if (std::abs(n.twice()) > l.twice() || !n.same_class(l))
    throw InvalidArgument("index n = " + n.str() + " invalid for l = " + l.str());
}

int theta_order(Deriv d) {
  switch (d) {
    case Deriv::Theta: return 1;
    case Deriv::ThetaTheta: return 2;
    case Deriv::ThetaTau: return 1;
    default: return 0;
  }
}

int tau_order(Deriv d) {
  switch (d) {
    case Deriv::Tau: return 1;
    case Deriv::TauTau: return 2;
    case Deriv::ThetaTau: return 1;
    default: return 0;
  }
}

// Double sum with tan^{m-k} tan^{2j} and cos^{2l} merged into cos^{2l-p} sin^p,
// which removes the apparent singularities at theta = 0, pi.
cplx zsum(HalfInt l, HalfInt m, HalfInt n, double theta, double tau, int kt, int kh) {
  check_indices(l, m, n);
  const int l2 = l.twice();
  const double lv = l.value(), mv = m.value(), nv = n.value();
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const double ch = std::cosh(tau / 2), sh = std::sinh(tau / 2);
  auto lg = [](double x) { return std::lgamma(x); };
  cplx total = 0;
  for (HalfInt k : projections(l)) {
    const double kv = k.value();
    const int mk = m.minus_int(k), nk = n.minus_int(k);
    const double wk = lg(lv - kv + 1) + lg(lv + kv + 1);
    const double wm = 0.5 * (lg(lv - mv + 1) + lg(lv + mv + 1) + wk);
    const double wn = 0.5 * (lg(lv - nv + 1) + lg(lv + nv + 1) + wk);

    double a_sum = 0;
    const int j0 = std::max(0, -mk), j1 = std::min((l2 - m.twice()) / 2, (l2 + k.twice()) / 2);
    for (int j = j0; j <= j1; ++j) {
      const double w = std::exp(wm - lg(j + 1) - lg(lv - mv - j + 1) - lg(lv + kv - j + 1) -
                                lg(mv - kv + j + 1));
      const int p = mk + 2 * j;
      a_sum += ((j % 2) ? -w : w) * half_angle_power(c, s, l2 - p, p, kt, false);
    }
    if (a_sum == 0) continue;

    double b_sum = 0;
    const int s0 = std::max(0, -nk), s1 = std::min((l2 - n.twice()) / 2, (l2 + k.twice()) / 2);
    for (int si = s0; si <= s1; ++si) {
      const double w = std::exp(wn - lg(si + 1) - lg(lv - nv - si + 1) - lg(lv + kv - si + 1) -
                                lg(nv - kv + si + 1));
      const int q = nk + 2 * si;
      b_sum += w * half_angle_power(ch, sh, l2 - q, q, kh, true);
    }
    total += ipow(mk) * (a_sum * b_sum);
  }
  return total;
}

}  // namespace

cplx zfun(HalfInt l, HalfInt m, HalfInt n, double theta, double tau) {
  return zsum(l, m, n, theta, tau, 0, 0);
}

cplx dz(HalfInt l, HalfInt m, HalfInt n, double theta, double tau, Deriv which) {
  return zsum(l, m, n, theta, tau, theta_order(which), tau_order(which));
}

CMatrix zmatrix(HalfInt l, double theta, double tau, Deriv which) {
  const auto ms = projections(l);
  const int d = static_cast<int>(ms.size());
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = dz(l, ms[i], ms[j], theta, tau, which);
  return z;
}

cplx mfun(const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot, HalfInt ndot,
          const GroupElement& g) {
  const cplx pre = std::exp(-kI * (m.value() * g.phi_c() + n.value() * g.psi_c()) +
                            kI * (mdot.value() * g.phi_c_dot() + ndot.value() * g.psi_c_dot()));
  return pre * zfun(rep.l, m, n, g.theta, g.tau) *
         std::conj(zfun(rep.ldot, mdot, ndot, g.theta, g.tau));
}

namespace {

CMatrix phase_diag(HalfInt l, cplx angle) {
  const auto ms = projections(l);
  CMatrix d = CMatrix::Zero(ms.size(), ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) d(i, i) = std::exp(-kI * ms[i].value() * angle);
  return d;
}

CMatrix jz(HalfInt l) {
  const auto ms = projections(l);
  CMatrix d = CMatrix::Zero(ms.size(), ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) d(i, i) = ms[i].value();
  return d;
}

}  // namespace

CMatrix rep_matrix(const RepLabel& rep, const GroupElement& g) {
  rep.validate();
  const CMatrix du = phase_diag(rep.l, g.phi_c()) * zmatrix(rep.l, g.theta, g.tau) *
                     phase_diag(rep.l, g.psi_c());
  const CMatrix dd = phase_diag(rep.ldot, g.phi_c()) * zmatrix(rep.ldot, g.theta, g.tau) *
                     phase_diag(rep.ldot, g.psi_c());
  return kron(du, dd.conjugate());
}

CMatrix rep_matrix_derivative(const RepLabel& rep, const GroupElement& g, Param p) {
  rep.validate();
  const CMatrix eu_phi = phase_diag(rep.l, g.phi_c()), eu_psi = phase_diag(rep.l, g.psi_c());
  const CMatrix ed_phi = phase_diag(rep.ldot, g.phi_c()), ed_psi = phase_diag(rep.ldot, g.psi_c());
  const CMatrix zu = zmatrix(rep.l, g.theta, g.tau), zd = zmatrix(rep.ldot, g.theta, g.tau);
  const CMatrix du = eu_phi * zu * eu_psi;
  const CMatrix dd = (ed_phi * zd * ed_psi).conjugate();
  const CMatrix ju = jz(rep.l), jd = jz(rep.ldot);
  // Holomorphic factor exp(-i m phi_c): d/dphi -> -i m, d/deps -> -m.
  // Antiholomorphic factor exp(+i mdot conj(phi_c)): d/dphi -> +i mdot, d/deps -> -mdot.
  switch (p) {
    case Param::Phi:
      return kron(-kI * ju * du, dd) + kron(du, kI * jd * dd);
    case Param::EpsPhi:
      return kron(-ju * du, dd) + kron(du, -jd * dd);
    case Param::Psi:
      return kron(-kI * du * ju, dd) + kron(du, kI * dd * jd);
    case Param::EpsPsi:
      return kron(-du * ju, dd) + kron(du, -dd * jd);
    case Param::Theta:
    case Param::Tau: {
      const Deriv w = p == Param::Theta ? Deriv::Theta : Deriv::Tau;
      const CMatrix dzu = eu_phi * zmatrix(rep.l, g.theta, g.tau, w) * eu_psi;
      const CMatrix dzd = (ed_phi * zmatrix(rep.ldot, g.theta, g.tau, w) * ed_psi).conjugate();
      return kron(dzu, dd) + kron(du, dzd);
    }
  }
  return {};
}

namespace {

// Value and real partials of the product Z^l_{mn}(w) * conj(Z^ld_{md nd}(w))
// (conj_first = false) or conj(Z^l_{mn}(w)) * Z^ld_{md nd}(w) (conj_first = true).
struct Partials {
  cplx f, t, u, tt, tu, uu;  // u stands for tau
};

Partials product_partials(HalfInt l, HalfInt m, HalfInt n, HalfInt ld, HalfInt md, HalfInt nd,
                          double theta, double tau, bool conj_first) {
  auto get = [&](HalfInt L, HalfInt a, HalfInt b, Deriv d, bool cj) {
    const cplx v = dz(L, a, b, theta, tau, d);
    return cj ? std::conj(v) : v;
  };
  const bool c1 = conj_first, c2 = !conj_first;
  const cplx a0 = get(l, m, n, Deriv::None, c1), at = get(l, m, n, Deriv::Theta, c1),
             au = get(l, m, n, Deriv::Tau, c1), att = get(l, m, n, Deriv::ThetaTheta, c1),
             atu = get(l, m, n, Deriv::ThetaTau, c1), auu = get(l, m, n, Deriv::TauTau, c1);
  const cplx b0 = get(ld, md, nd, Deriv::None, c2), bt = get(ld, md, nd, Deriv::Theta, c2),
             bu = get(ld, md, nd, Deriv::Tau, c2), btt = get(ld, md, nd, Deriv::ThetaTheta, c2),
             btu = get(ld, md, nd, Deriv::ThetaTau, c2), buu = get(ld, md, nd, Deriv::TauTau, c2);
  return {a0 * b0,
          at * b0 + a0 * bt,
          au * b0 + a0 * bu,
          att * b0 + 2.0 * at * bt + a0 * btt,
          atu * b0 + at * bu + au * bt + a0 * btu,
          auu * b0 + 2.0 * au * bu + a0 * buu};
}

// [(1-z^2) d2/dz2 - 2z d/dz - (m^2+n^2-2mnz)/(1-z^2) + l(l+1)] f with z = cos(w),
// given df/dw and d2f/dw2.
cplx legendre_op(double l, double m, double n, cplx w, cplx f, cplx fw, cplx fww) {
  const cplx z = std::cos(w), s = std::sin(w);
  if (std::abs(z - 1.0) < 1e-6 || std::abs(z + 1.0) < 1e-6)
    throw SingularPoint("Legendre operator evaluated at the singular point z = +-1");
  const cplx dfdz = -fw / s;
  const cplx d2fdz2 = fww / (s * s) - fw * z / (s * s * s);
  return (1.0 - z * z) * d2fdz2 - 2.0 * z * dfdz - (m * m + n * n - 2.0 * m * n * z) / (1.0 - z * z) * f +
         l * (l + 1) * f;
}

}  // namespace

LegendreResidual legendre_residual(HalfInt l, HalfInt ldot, HalfInt m, HalfInt n, HalfInt mdot,
                                   HalfInt ndot, double theta, double tau) {
  const Partials p = product_partials(l, m, n, ldot, mdot, ndot, theta, tau, false);
  const cplx w(theta, -tau);
  // Holomorphic derivative d/dw = (d_theta + i d_tau)/2, antiholomorphic (d_theta - i d_tau)/2.
  const cplx fw = 0.5 * (p.t + kI * p.u);
  const cplx fww = 0.25 * (p.tt + 2.0 * kI * p.tu - p.uu);
  const cplx fv = 0.5 * (p.t - kI * p.u);
  const cplx fvv = 0.25 * (p.tt - 2.0 * kI * p.tu - p.uu);
  const cplx r1 = legendre_op(l.value(), m.value(), n.value(), w, p.f, fw, fww);
  const cplx r2 = legendre_op(ldot.value(), mdot.value(), ndot.value(), std::conj(w), p.f, fv, fvv);
  return {std::abs(r1), std::abs(r2)};
}

double recurrence_residual(int kind, HalfInt l, HalfInt ldot, HalfInt m, HalfInt n, HalfInt mdot,
                           HalfInt ndot, double theta, double tau, RecurrenceForm form) {
  if (kind < 1 || kind > 8) throw InvalidArgument("recurrence kind must be 1..8");
  const bool conj_fn = kind >= 5;
  const Partials p = product_partials(l, m, n, ldot, mdot, ndot, theta, tau, conj_fn);
  const cplx w(theta, -tau), wd = std::conj(w);

  auto value = [&](HalfInt mm, HalfInt mmd) -> cplx {
    if (std::abs(mm.twice()) > l.twice() || std::abs(mmd.twice()) > ldot.twice()) return 0.0;
    const cplx a = zfun(l, mm, n, theta, tau), b = zfun(ldot, mmd, ndot, theta, tau);
    return conj_fn ? std::conj(a) * b : a * std::conj(b);
  };
  auto lower = [&](bool dotted) -> cplx {  // 2 alpha_m f_{m-1}
    if (dotted) return mdot > -ldot ? 2.0 * alpha(ldot, mdot) * value(m, mdot - 1) : 0.0;
    return m > -l ? 2.0 * alpha(l, m) * value(m - 1, mdot) : 0.0;
  };
  auto raise = [&](bool dotted) -> cplx {  // 2 alpha_{m+1} f_{m+1}
    if (dotted) return mdot < ldot ? 2.0 * alpha(ldot, mdot + 1) * value(m, mdot + 1) : 0.0;
    return m < l ? 2.0 * alpha(l, m + 1) * value(m + 1, mdot) : 0.0;
  };

  const cplx minus = kI * p.t - p.u;  // i d_theta - d_tau
  const cplx plus = kI * p.t + p.u;   // i d_theta + d_tau
  auto cot_term = [&](double a, double b, cplx angle) {
    return 2.0 * kI * (a - b * std::cos(angle)) / std::sin(angle) * p.f;
  };
  const double mv = m.value(), nv = n.value(), mdv = mdot.value(), ndv = ndot.value();
  const bool fixed = form == RecurrenceForm::Corrected;

  cplx lhs, rhs;
  switch (kind) {
    case 1: lhs = minus - cot_term(nv, mv, w); rhs = fixed ? -lower(false) : lower(false); break;
    case 2: lhs = minus + cot_term(nv, mv, w); rhs = fixed ? -raise(false) : raise(false); break;
    case 3: lhs = plus + cot_term(ndv, mdv, wd); rhs = fixed ? raise(true) : lower(true); break;
    case 4: lhs = plus - cot_term(ndv, mdv, wd); rhs = fixed ? lower(true) : raise(true); break;
    case 5: lhs = plus + cot_term(nv, mv, wd); rhs = fixed ? raise(false) : lower(false); break;
    case 6: lhs = plus - cot_term(nv, mv, wd); rhs = fixed ? lower(false) : raise(false); break;
    case 7: lhs = minus - cot_term(ndv, mdv, w); rhs = fixed ? -lower(true) : lower(true); break;
    case 8: lhs = minus + cot_term(ndv, mdv, w); rhs = fixed ? -raise(true) : raise(true); break;
  }
  return std::abs(lhs - rhs);
}

LegendreResidual eigen_residual(const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot,
                                HalfInt ndot, const GroupElement& g) {
  const Partials p = product_partials(rep.l, m, n, rep.ldot, mdot, ndot, g.theta, g.tau, false);
  const cplx pre = std::exp(-kI * (m.value() * g.phi_c() + n.value() * g.psi_c()) +
                            kI * (mdot.value() * g.phi_c_dot() + ndot.value() * g.psi_c_dot()));
  const cplx w = g.theta_c(), wd = g.theta_c_dot();
  auto op = [&](double lv, double a, double b, cplx angle, cplx fw, cplx fww) {
    // Exponential prefactors give d/dphi_c -> -i a, d/dpsi_c -> -i b (or their conjugates).
    const cplx s = std::sin(angle), c = std::cos(angle);
    const cplx dphi = -kI * a, dpsi = -kI * b;
    const cplx ang = (dphi * dphi - 2.0 * c * dphi * dpsi + dpsi * dpsi) / (s * s);
    return pre * (fww + c / s * fw + ang * p.f + lv * (lv + 1) * p.f);
  };
  const cplx fw = 0.5 * (p.t + kI * p.u), fww = 0.25 * (p.tt + 2.0 * kI * p.tu - p.uu);
  const cplx fv = 0.5 * (p.t - kI * p.u), fvv = 0.25 * (p.tt - 2.0 * kI * p.tu - p.uu);
  // The dotted factor depends on conj(phi_c), conj(psi_c) through exp(+i mdot ...):
  // d/dconj(phi_c) -> +i mdot, which squares to the same angular term as -i mdot.
  const cplx r1 = op(rep.l.value(), m.value(), n.value(), w, fw, fww);
  const cplx r2 = op(rep.ldot.value(), -mdot.value(), -ndot.value(), wd, fv, fvv);
  return {std::abs(r1), std::abs(r2)};
}

}  // namespace rwekit
