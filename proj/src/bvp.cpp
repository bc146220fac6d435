#include "rwekit/bvp.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <set>

#include "rwekit/hyperfun.hpp"

namespace rwekit {

// ---- frames -------------------------------------------------------------------

namespace {

Param frame_param(FrameVar x) {
  switch (x) {
    case FrameVar::Phi: return Param::Phi;
    case FrameVar::Eps: return Param::EpsPhi;
    case FrameVar::Theta: return Param::Theta;
    default: return Param::Tau;
  }
}

CMatrix left(const CMatrix& a, HalfInt ldot) {
  return kron(a, CMatrix::Identity(ldot.twice() + 1, ldot.twice() + 1));
}
CMatrix right(HalfInt l, const CMatrix& a) {
  return kron(CMatrix::Identity(l.twice() + 1, l.twice() + 1), a);
}

}  // namespace

CMatrix frame_matrix(const RepLabel& rep, double theta, double tau, FrameVar x, bool conjugate) {
  const GroupElement g{0, 0, theta, tau, 0, 0};
  const CMatrix R = rep_matrix(rep, g);
  const CMatrix dR = rep_matrix_derivative(rep, g, frame_param(x));
  // T = R^T, so T d(T^-1) = -(dT) T^-1 = -(R^-1 dR)^T.
  CMatrix f = -(R.partialPivLu().solve(dR)).transpose();
  return conjugate ? CMatrix(f.conjugate()) : f;
}

CMatrix frame_generators(const RepLabel& rep, double theta, double tau, FrameVar x,
                         bool conjugate) {
  const HalfInt l = rep.l, ld = rep.ldot;
  const auto A = chiral_A(l), Ad = chiral_A(ld);
  const auto B = chiral_B(l), Bd = chiral_B(ld);
  std::array<CMatrix, 3> Bt, Bdt;  // dual generators of the second kind
  for (int k = 0; k < 3; ++k) {
    Bt[k] = -B[k];
    Bdt[k] = -Bd[k];
  }
  const cplx w(theta, -tau);
  const cplx c = std::cos(w), s = std::sin(w), cd = std::conj(c), sd = std::conj(s);
  if (!conjugate) {
    switch (x) {
      case FrameVar::Phi:
        return -(left(A[2], ld) * c - right(l, Ad[2]) * cd) - (left(A[1], ld) * s + right(l, Ad[1]) * sd);
      case FrameVar::Eps:
        return -(left(B[2], ld) * c - right(l, Bdt[2]) * cd) -
               (left(B[1], ld) * s + right(l, Bdt[1]) * sd);
      case FrameVar::Theta: return left(A[0], ld) - right(l, Ad[0]);
      default: return left(B[0], ld) - right(l, Bdt[0]);
    }
  }
  switch (x) {
    case FrameVar::Phi:
      return (left(A[2], ld) * cd - right(l, Ad[2]) * c) - (left(A[1], ld) * sd + right(l, Ad[1]) * s);
    case FrameVar::Eps:
      return (left(Bt[2], ld) * cd - right(l, Bd[2]) * c) -
             (left(Bt[1], ld) * sd + right(l, Bd[1]) * s);
    case FrameVar::Theta: return -(left(A[0], ld) - right(l, Ad[0]));
    default: return -(left(Bt[0], ld) - right(l, Bd[0]));
  }
}

std::vector<NamedResidual> frame_identities(const RepLabel& rep, const GroupElement& g) {
  rep.validate();
  if (g.psi != 0.0 || g.eps_psi != 0.0)
    throw InvalidArgument("frame identities need psi = eps_psi = 0");
  static const char* names[] = {"phi", "eps", "theta", "tau"};
  std::vector<NamedResidual> out;
  for (int conj = 0; conj < 2; ++conj)
    for (int k = 0; k < 4; ++k) {
      const auto x = static_cast<FrameVar>(k);
      const double r = max_abs(frame_matrix(rep, g.theta, g.tau, x, conj) -
                               frame_generators(rep, g.theta, g.tau, x, conj));
      out.push_back({std::string(conj ? "conj " : "") + "T dT^-1/d" + names[k], r});
    }
  return out;
}

DerivativeFrame sphere_derivative_frame(const SpherePoint& p) {
  const cplx t = p.theta_c, f = p.phi_c;
  const cplx st = std::sin(t), ct = std::cos(t), sf = std::sin(f), cf = std::cos(f);
  if (std::abs(st) < 1e-10) throw SingularFrame("sin(theta_c) vanishes: coordinate singularity");
  if (std::abs(p.r) == 0.0) throw SingularFrame("r = 0: coordinate singularity");
  const cplx r = p.r, rs = std::conj(p.r);
  const cplx std_ = std::conj(st), ctd = std::conj(ct), sfd = std::conj(sf), cfd = std::conj(cf);
  const cplx z{};
  DerivativeFrame d;
  // Holomorphic chain rule in (phi_c, theta_c, r).
  auto hol = [&](cplx rr, bool dual_r) {
    std::array<FrameRow, 3> a;
    a[0] = {-sf / (rr * st), z, cf * ct / rr, z, z, z};
    a[1] = {cf / (rr * st), z, sf * ct / rr, z, z, z};
    a[2] = {z, z, -st / rr, z, z, z};
    const cplx rc[3] = {cf * st, sf * st, ct};
    for (int j = 0; j < 3; ++j) (dual_r ? a[j].rstar : a[j].r) = rc[j];
    return a;
  };
  // Antiholomorphic counterpart through d/deps and d/dtau.
  auto anti = [&](cplx rr, bool dual_r, cplx sign) {
    std::array<FrameRow, 3> a;
    a[0] = {z, sign * (-sfd / (rr * std_)), z, sign * (cfd * ctd / rr), z, z};
    a[1] = {z, sign * (cfd / (rr * std_)), z, sign * (sfd * ctd / rr), z, z};
    a[2] = {z, z, z, sign * (-std_ / rr), z, z};
    const cplx rc[3] = {cfd * std_, sfd * std_, ctd};
    for (int j = 0; j < 3; ++j) (dual_r ? a[j].rstar : a[j].r) = sign * kI * rc[j];
    return a;
  };
  d.a = hol(r, false);
  d.astar = anti(r, false, 1.0);
  d.adual = hol(rs, true);
  d.adualstar = anti(rs, true, -1.0);
  return d;
}

double frame_closure_residual(const SpherePoint& p) {
  const auto d = sphere_derivative_frame(p);
  const cplx r = p.r, t = p.theta_c, f = p.phi_c;
  // Partials of the coordinate functions in (phi_c, theta_c, r).
  auto partials = [](cplx rr, cplx tt, cplx ff) {
    const cplx st = std::sin(tt), ct = std::cos(tt), sf = std::sin(ff), cf = std::cos(ff);
    std::array<std::array<cplx, 3>, 3> j;
    j[0] = {-rr * st * sf, rr * ct * cf, st * cf};
    j[1] = {rr * st * cf, rr * ct * sf, st * sf};
    j[2] = {0.0, -rr * st, ct};
    return j;
  };
  double err = 0;
  const auto jh = partials(r, t, f);
  const auto jhd = partials(std::conj(r), t, f);
  const auto ja = partials(r, std::conj(t), std::conj(f));
  const auto jad = partials(std::conj(r), std::conj(t), std::conj(f));
  for (int row = 0; row < 3; ++row)
    for (int k = 0; k < 3; ++k) {
      const cplx delta = row == k ? 1.0 : 0.0;
      const auto& a = d.a[row];
      err = std::max(err, std::abs(a.phi * jh[k][0] + a.theta * jh[k][1] + a.r * jh[k][2] - delta));
      const auto& ad = d.adual[row];
      err = std::max(err,
                     std::abs(ad.phi * jhd[k][0] + ad.theta * jhd[k][1] + ad.rstar * jhd[k][2] - delta));
      // On antiholomorphic functions d/deps = i d/dphi_c-dot, d/dtau = i d/dtheta_c-dot.
      const auto& as = d.astar[row];
      err = std::max(err, std::abs(as.eps * kI * ja[k][0] + as.tau * kI * ja[k][1] +
                                   as.r * ja[k][2] - kI * delta));
      const auto& ads = d.adualstar[row];
      err = std::max(err, std::abs(ads.eps * kI * jad[k][0] + ads.tau * kI * jad[k][1] +
                                   ads.rstar * jad[k][2] + kI * delta));
    }
  return err;
}

// ---- separated basis ----------------------------------------------------------

BasisJet separated_basis(HalfInt L, HalfInt Ld, HalfInt m, HalfInt n, HalfInt md, HalfInt nd,
                     const SphereCoord& p) {
  const GroupElement g = p.element();
  const cplx pre = std::exp(-kI * (n.value() * g.phi_c()) + kI * (nd.value() * g.phi_c_dot()));
  const cplx z = zfun(L, n, m, p.theta, p.tau);
  const cplx zd = std::conj(zfun(Ld, nd, md, p.theta, p.tau));
  const cplx z1 = dz(L, n, m, p.theta, p.tau, Deriv::Theta);
  const cplx zd1 = std::conj(dz(Ld, nd, md, p.theta, p.tau, Deriv::Theta));
  return {pre * z * zd, pre * z1 * zd, pre * z * zd1};
}

namespace {

// Full jet of one basis function in the real coordinates.
struct PointJet {
  cplx v, phi, eps, theta, tau;
};

PointJet basis_point_jet(const RadialMode& mode, HalfInt m, HalfInt md, const SphereCoord& p) {
  const BasisJet b = separated_basis(mode.l0, mode.ldot0, m, mode.n, md, mode.ndot, p);
  const double n = mode.n.value(), nd = mode.ndot.value();
  return {b.value, kI * (nd - n) * b.value, -(n + nd) * b.value, b.d_hol + b.d_antihol,
          -kI * b.d_hol + kI * b.d_antihol};
}

std::vector<RadialComponent> chain_components(const SpinChain& chain) {
  std::vector<RadialComponent> out;
  for (int k = 0; k < static_cast<int>(chain.links.size()); ++k)
    for (HalfInt m : projections(chain.links[k].rep.l))
      for (HalfInt md : projections(chain.links[k].rep.ldot)) out.push_back({k, m, md});
  return out;
}

int chain_index(const SpinChain& chain, const RadialComponent& c) {
  return chain.offset(c.link) + chain.links[c.link].rep.index(c.m, c.mdot);
}

bool admissible(HalfInt L, HalfInt m) {
  return L.same_class(m) && std::abs(m.twice()) <= L.twice();
}

// Operator applied to a chain-sized jet at radius r.
CVector apply_operator(const SeparatedOperator& op, const std::vector<RadialComponent>& comps,
                       const FieldJet& j, double r, const SphereCoord& p) {
  const cplx w(p.theta, -p.tau);
  const cplx s = std::sin(w), c = std::cos(w), sd = std::conj(s), cd = std::conj(c);
  const int n = static_cast<int>(comps.size());
  CVector mterm(n), mdterm(n);
  for (int J = 0; J < n; ++J) {
    const double mJ = comps[J].m.value(), mdJ = comps[J].mdot.value();
    mterm(J) = (j.d_phi(J) + kI * j.d_eps(J)) / s + 2.0 * kI * mJ * c / s * j.psi(J);
    mdterm(J) = -(j.d_phi(J) - kI * j.d_eps(J)) / sd + 2.0 * kI * mdJ * cd / sd * j.psi(J);
  }
  const CVector hol = j.d_theta + kI * j.d_tau, anti = j.d_theta - kI * j.d_tau;
  CVector out = (op.am * mterm - op.bm * hol + op.ad * mdterm + op.bd * anti + op.de * j.psi) / r;
  out += cplx(1, 1) * (op.c * j.d_r) + op.kappa * j.psi;
  return out;
}

FieldJet zero_jet(int n) {
  const CVector z = CVector::Zero(n);
  return {z, z, z, z, z, z};
}

FieldJet conj_jet(const FieldJet& j) {
  return {j.psi.conjugate(), j.d_phi.conjugate(), j.d_eps.conjugate(),
          j.d_theta.conjugate(), j.d_tau.conjugate(), j.d_r.conjugate()};
}

}  // namespace

std::string RadialMode::str() const {
  return "(" + l0.str() + "," + ldot0.str() + ";" + n.str() + "," + ndot.str() + ")";
}

bool RadialSystem::algebraic_only() const {
  return max_abs(C) == 0.0 && (Cstar.size() == 0 || max_abs(Cstar) == 0.0);
}

SeparatedOperators separated_operators(const SpinChain& chain) {
  const auto problems = chain_validate(chain);
  if (!problems.empty()) throw InvalidChain(problems.front());
  const LambdaSet lam = build_lambda(chain);
  const ChainOperators ops = chain_operators(chain);
  const DEMatrices de = de_matrices(chain, lam, ops);
  const auto comps = chain_components(chain);
  const int n = static_cast<int>(comps.size());

  // Columns of the operator act on psi_J; the printed tables are read transposed.
  auto split = [&](const CMatrix& a, CMatrix& mpart, CMatrix& mdpart) {
    mpart = CMatrix::Zero(n, n);
    mdpart = CMatrix::Zero(n, n);
    for (int I = 0; I < n; ++I)
      for (int J = 0; J < n; ++J) {
        if (a(I, J) == 0.0) continue;
        if (comps[I].mdot == comps[J].mdot) mpart(I, J) = a(I, J);
        else mdpart(I, J) = a(I, J);
      }
  };
  SeparatedOperators s;
  split(lam.L[0].transpose(), s.primal.am, s.primal.ad);
  split(lam.L[1].transpose(), s.primal.bm, s.primal.bd);
  s.primal.c = lam.L[2].transpose();
  s.primal.de = (de.Dtable + de.Etable).transpose();
  s.primal.kappa = chain.kappa;

  // Dual track: conj(op[conj psi]) reproduces the starred equation when the
  // first-order tables enter with opposite sign.
  split(-lam.Lstar[0].transpose().conjugate(), s.dual.am, s.dual.ad);
  split(-lam.Lstar[1].transpose().conjugate(), s.dual.bm, s.dual.bd);
  s.dual.c = lam.Lstar[2].transpose().conjugate();
  s.dual.de = (de.Dstar_table + de.Estar_table).transpose().conjugate();
  s.dual.kappa = std::conj(chain.kappa);
  return s;
}

namespace {

void assemble_track(const SeparatedOperator& op, const SpinChain& chain,
                    const std::vector<RadialComponent>& index, const RadialMode& mode,
                    CMatrix& C, CMatrix& K) {
  const int n = static_cast<int>(index.size());
  C = CMatrix::Zero(n, n);
  K = CMatrix::Zero(n, n);
  const double L = mode.l0.value(), Ld = mode.ldot0.value();
  auto sq = [](double x) { return std::sqrt(std::max(0.0, x)); };
  for (int I = 0; I < n; ++I) {
    const int gi = chain_index(chain, index[I]);
    const double m = index[I].m.value(), md = index[I].mdot.value();
    for (int J = 0; J < n; ++J) {
      const int gj = chain_index(chain, index[J]);
      C(I, J) = cplx(1, 1) * op.c(gi, gj);
      cplx k = op.de(gi, gj);
      const int dm = index[J].m.twice() - index[I].m.twice();
      const int dmd = index[J].mdot.twice() - index[I].mdot.twice();
      // Ladder relations of the hyperspherical functions absorb the angular
      // derivative; the remainder 2(i a -+ b) dP is not separable (see README).
      if (dm == -2) k += 2.0 * op.am(gi, gj) * sq((L + m) * (L - m + 1));
      if (dm == 2) k += -2.0 * op.am(gi, gj) * sq((L + m + 1) * (L - m));
      if (dmd == -2) k += -2.0 * op.ad(gi, gj) * sq((Ld + md) * (Ld - md + 1));
      if (dmd == 2) k += 2.0 * op.ad(gi, gj) * sq((Ld + md + 1) * (Ld - md));
      K(I, J) = k;
    }
  }
}

std::vector<RadialComponent> mode_index(const SpinChain& chain, const RadialMode& mode) {
  std::vector<RadialComponent> out;
  for (const auto& c : chain_components(chain))
    if (admissible(mode.l0, c.m) && admissible(mode.ldot0, c.mdot)) out.push_back(c);
  return out;
}

}  // namespace

RadialSystem assemble_mode(const SpinChain& chain, const RadialMode& mode) {
  if (mode.l0.twice() < 0 || mode.ldot0.twice() < 0) throw InvalidArgument("negative weight");
  if (!admissible(mode.l0, mode.n)) throw InvalidArgument("n not a projection of l0");
  if (!admissible(mode.ldot0, mode.ndot)) throw InvalidArgument("ndot not a projection of ldot0");
  const SeparatedOperators ops = separated_operators(chain);
  RadialSystem sys;
  sys.mode = mode;
  sys.index = mode_index(chain, mode);
  assemble_track(ops.primal, chain, sys.index, mode, sys.C, sys.K);
  CMatrix Cd, Kd;
  assemble_track(ops.dual, chain, sys.index, mode, Cd, Kd);
  sys.Cstar = Cd.conjugate();
  sys.Kstar = Kd.conjugate();
  sys.kappa = ops.primal.kappa;
  sys.kappa_star = std::conj(ops.dual.kappa);
  return sys;
}

RadialSystem assemble_radial(const SpinChain& chain, HalfInt l0, HalfInt ldot0, HalfInt n,
                             HalfInt ndot) {
  const auto problems = chain_validate(chain);
  if (!problems.empty()) throw InvalidChain(problems.front());
  if (l0 < chain.max_l()) throw InvalidArgument("l0 too small");
  if (ldot0 < chain.max_ldot()) throw InvalidArgument("ldot0 too small");
  return assemble_mode(chain, {l0, ldot0, n, ndot});
}

ProjectionOracle project_radial(const SpinChain& chain, const RadialMode& mode, int samples,
                                unsigned seed) {
  const SeparatedOperators ops = separated_operators(chain);
  const auto comps = chain_components(chain);
  const auto index = mode_index(chain, mode);
  const int n = static_cast<int>(index.size()), N = static_cast<int>(comps.size());
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> th(0.4, kPi - 0.4), ta(-0.8, 0.8), ph(0, 2 * kPi),
      ep(-0.8, 0.8);
  std::vector<SphereCoord> pts(samples);
  for (auto& p : pts) p = {th(rng), ta(rng), ph(rng), ep(rng)};

  ProjectionOracle out;
  auto track = [&](const SeparatedOperator& op, CMatrix& Cp, CMatrix& Kp) {
    Cp = CMatrix::Zero(n, n);
    Kp = CMatrix::Zero(n, n);
    for (int J = 0; J < n; ++J) {
      const int gj = chain_index(chain, index[J]);
      // Rows: samples x components of the operator applied to P_J (f = 1) and
      // to a unit radial derivative (f' = 1).
      std::vector<CVector> rk(samples), rc(samples);
      for (int s = 0; s < samples; ++s) {
        const PointJet b = basis_point_jet(mode, index[J].m, index[J].mdot, pts[s]);
        FieldJet j = zero_jet(N);
        j.psi(gj) = b.v;
        j.d_phi(gj) = b.phi;
        j.d_eps(gj) = b.eps;
        j.d_theta(gj) = b.theta;
        j.d_tau(gj) = b.tau;
        SeparatedOperator o = op;
        o.kappa = 0.0;
        rk[s] = apply_operator(o, comps, j, 1.0, pts[s]);
        FieldJet jr = zero_jet(N);
        jr.d_r(gj) = b.v;
        rc[s] = apply_operator(o, comps, jr, 1.0, pts[s]);
      }
      for (int I = 0; I < n; ++I) {
        const int gi = chain_index(chain, index[I]);
        cplx num_k = 0, num_c = 0;
        double den = 0, scale = 0;
        std::vector<cplx> basis(samples);
        for (int s = 0; s < samples; ++s) {
          basis[s] = separated_basis(mode.l0, mode.ldot0, index[I].m, mode.n, index[I].mdot,
                                 mode.ndot, pts[s]).value;
          num_k += std::conj(basis[s]) * rk[s](gi);
          num_c += std::conj(basis[s]) * rc[s](gi);
          den += std::norm(basis[s]);
          scale = std::max({scale, std::abs(rk[s](gi)), std::abs(basis[s])});
        }
        Kp(I, J) = num_k / den;
        Cp(I, J) = num_c / den;
        for (int s = 0; s < samples; ++s) {
          const double d = std::abs(rk[s](gi) - Kp(I, J) * basis[s]) +
                           std::abs(rc[s](gi) - Cp(I, J) * basis[s]);
          out.separation_defect = std::max(out.separation_defect, d / std::max(scale, 1e-300));
        }
      }
    }
  };
  CMatrix Cd, Kd;
  track(ops.primal, out.C, out.K);
  track(ops.dual, Cd, Kd);
  out.Cstar = Cd.conjugate();
  out.Kstar = Kd.conjugate();
  return out;
}

// ---- radial integration -------------------------------------------------------

RadialDAE::RadialDAE(const CMatrix& C, const CMatrix& K, cplx kappa) : C_(C), K_(K), kappa_(kappa) {
  const int n = static_cast<int>(C.rows());
  if (n == 0) return;
  Eigen::JacobiSVD<CMatrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, sv(0));
  rank_ = 0;
  while (rank_ < n && sv(rank_) > tol) ++rank_;
  U1_ = svd.matrixU().leftCols(rank_);
  U2_ = svd.matrixU().rightCols(n - rank_);
  V1_ = svd.matrixV().leftCols(rank_);
  V2_ = svd.matrixV().rightCols(n - rank_);
  s1_ = sv.head(rank_);
}

CMatrix RadialDAE::algebraic_solve(double r, const CMatrix& rhs) const {
  const CMatrix G = K_ / r + kappa_ * CMatrix::Identity(size(), size());
  const CMatrix A = U2_.adjoint() * G * V2_;
  Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() > 0 && !(sv(sv.size() - 1) > 1e-12 * std::max(1.0, sv(0))))
    throw DAEDegeneracy("algebraic block of the radial system is singular at r = " +
                        std::to_string(r));
  return svd.solve(rhs);
}

CVector RadialDAE::complete(double r, const CVector& x) const {
  const int n = size();
  if (n == rank_) return V1_ * x;
  const CMatrix G = K_ / r + kappa_ * CMatrix::Identity(n, n);
  const CVector y = -algebraic_solve(r, U2_.adjoint() * G * (V1_ * x));
  return V1_ * x + V2_ * y;
}

CVector RadialDAE::reduce(const CVector& f) const { return V1_.adjoint() * f; }

CVector RadialDAE::project(double r, const CVector& f) const { return complete(r, reduce(f)); }

CVector RadialDAE::reduced_rhs(double r, const CVector& x) const {
  const int n = size();
  const CMatrix G = K_ / r + kappa_ * CMatrix::Identity(n, n);
  const CVector f = complete(r, x);
  return -(U1_.adjoint() * (G * f)).cwiseQuotient(s1_.cast<cplx>());
}

CVector RadialDAE::derivative(double r, const CVector& f) const {
  const int n = size();
  if (n == 0) return CVector();
  const CVector x = reduce(f);
  const CVector xp = rank_ > 0 ? reduced_rhs(r, x) : CVector();
  CVector out = V1_ * xp;
  if (n > rank_) {
    const CMatrix G = K_ / r + kappa_ * CMatrix::Identity(n, n);
    const CMatrix Gp = -K_ / (r * r);
    const CMatrix Ap = U2_.adjoint() * Gp * V2_;
    const CMatrix B = U2_.adjoint() * G * V1_, Bp = U2_.adjoint() * Gp * V1_;
    const CVector AinvBx = algebraic_solve(r, B * x);
    const CVector yp = -algebraic_solve(r, Bp * x - Ap * AinvBx + B * xp);
    out += V2_ * yp;
  }
  return out;
}

double RadialDAE::constraint_defect(double r, const CVector& f) const {
  const int n = size();
  if (n == rank_ || n == 0) return 0.0;
  const CMatrix G = K_ / r + kappa_ * CMatrix::Identity(n, n);
  return (U2_.adjoint() * (G * f)).norm();
}

namespace {

struct OdeContext {
  const RadialDAE* dae;
  std::exception_ptr error;
};

int ode_rhs(double r, const double y[], double dy[], void* params) {
  auto* ctx = static_cast<OdeContext*>(params);
  const int k = ctx->dae->differential_rank();
  CVector x(k);
  for (int i = 0; i < k; ++i) x(i) = cplx(y[2 * i], y[2 * i + 1]);
  try {
    const CVector xp = ctx->dae->reduced_rhs(r, x);
    for (int i = 0; i < k; ++i) {
      dy[2 * i] = xp(i).real();
      dy[2 * i + 1] = xp(i).imag();
    }
  } catch (...) {
    ctx->error = std::current_exception();
    return GSL_EBADFUNC;
  }
  return GSL_SUCCESS;
}

struct GslErrorsOff {
  GslErrorsOff() { gsl_set_error_handler_off(); }
};

}  // namespace

RadialProfiles integrate_radial(const CMatrix& C, const CMatrix& K, cplx kappa, const CVector& f0,
                                const std::vector<double>& r_out, const IntegrationOptions& opt) {
  static GslErrorsOff off;
  if (r_out.empty()) throw InvalidArgument("no output radii");
  if (!(r_out.front() > 0)) throw InvalidArgument("R must be positive");
  if (!std::is_sorted(r_out.begin(), r_out.end())) throw InvalidArgument("radii must be sorted");
  if (C.rows() != C.cols() || K.rows() != C.rows() || f0.size() != C.rows())
    throw InvalidArgument("radial system size mismatch");
  const RadialDAE dae(C, K, kappa);
  RadialProfiles out;
  out.differential_rank = dae.differential_rank();
  const double R = r_out.front();
  out.initial_constraint_defect = dae.constraint_defect(R, f0);
  const int k = dae.differential_rank();
  CVector x = dae.reduce(f0);
  std::vector<double> y(2 * k);
  for (int i = 0; i < k; ++i) {
    y[2 * i] = x(i).real();
    y[2 * i + 1] = x(i).imag();
  }
  OdeContext ctx{&dae, nullptr};
  gsl_odeiv2_system sys{ode_rhs, nullptr, static_cast<size_t>(2 * k), &ctx};
  gsl_odeiv2_driver* drv = nullptr;
  if (k > 0) {
    const double span = std::max(r_out.back() - R, 1e-3);
    drv = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rkf45, 1e-3 * span, opt.atol,
                                        opt.rtol);
    gsl_odeiv2_driver_set_nmax(drv, 10000000);
  }
  double r = R;
  try {
    for (double target : r_out) {
      if (k > 0 && target > r) {
        const int status = gsl_odeiv2_driver_apply(drv, &r, target, y.data());
        if (ctx.error) std::rethrow_exception(ctx.error);
        if (status != GSL_SUCCESS)
          throw IntegrationError("radial integration failed: " + std::string(gsl_strerror(status)),
                                 r);
      }
      for (int i = 0; i < k; ++i) x(i) = cplx(y[2 * i], y[2 * i + 1]);
      out.r.push_back(target);
      out.f.push_back(dae.complete(target, x));
    }
  } catch (...) {
    if (drv) gsl_odeiv2_driver_free(drv);
    throw;
  }
  if (drv) gsl_odeiv2_driver_free(drv);
  return out;
}

RadialSolution integrate_radial(const RadialSystem& sys, const CVector& f0, const CVector& fstar0,
                                const std::vector<double>& r_out, const IntegrationOptions& opt) {
  // Real radius: r* = conj(r) = r, so both tracks run on the same grid.
  return {integrate_radial(sys.C, sys.K, sys.kappa, f0, r_out, opt),
          integrate_radial(sys.Cstar, sys.Kstar, sys.kappa_star, fstar0, r_out, opt)};
}

// ---- boundary data ------------------------------------------------------------

std::vector<RadialMode> component_modes(HalfInt m, HalfInt mdot, HalfInt l0, HalfInt ldot0,
                                        bool all_columns) {
  std::vector<RadialMode> out;
  for (int L2 = std::abs(m.twice()); L2 <= l0.twice(); L2 += 2)
    for (int Ld2 = std::abs(mdot.twice()); Ld2 <= ldot0.twice(); Ld2 += 2) {
      const HalfInt L = HalfInt::from_twice(L2), Ld = HalfInt::from_twice(Ld2);
      const std::vector<HalfInt> ns = all_columns ? projections(L) : std::vector{sphere_column(L)};
      const std::vector<HalfInt> nds =
          all_columns ? projections(Ld) : std::vector{sphere_column(Ld)};
      for (HalfInt n : ns)
        for (HalfInt nd : nds) out.push_back({L, Ld, n, nd});
    }
  return out;
}

cplx boundary_series(const std::vector<ModeCoeff>& coeffs, const ComponentKey& key,
                     const SphereCoord& p) {
  cplx v = 0;
  for (const auto& c : coeffs) {
    const cplx b =
        separated_basis(c.mode.l0, c.mode.ldot0, key.m, c.mode.n, key.mdot, c.mode.ndot, p).value;
    v += c.value * (key.track == 0 ? b : std::conj(b));
  }
  return v;
}

BoundaryFit boundary_analyze(const SpinChain& chain, const BoundaryData& data, HalfInt l0,
                             HalfInt ldot0, const BoundaryOptions& opt) {
  BoundaryFit fit;
  const auto pts = data.grid.points();
  const int N = static_cast<int>(pts.size());
  double data_max = 0;
  for (const auto& [key, vals] : data.values) {
    if (key.track < 0 || key.track > 1) throw InvalidArgument("track must be 0 or 1");
    if (key.link < 0 || key.link >= static_cast<int>(chain.links.size()))
      throw InvalidArgument("component link out of range");
    if (!chain.links[key.link].rep.contains(key.m, key.mdot))
      throw InvalidArgument("component projection out of range");
    if (static_cast<int>(vals.size()) != N)
      throw InvalidArgument("boundary samples do not match the grid");
    for (const cplx& v : vals)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw InvalidArgument("non-finite boundary sample");
    if (std::abs(key.m.twice()) > l0.twice() || std::abs(key.mdot.twice()) > ldot0.twice())
      throw InvalidArgument("component not representable under the truncation");

    const auto modes = component_modes(key.m, key.mdot, l0, ldot0, opt.all_columns);
    const int k = static_cast<int>(modes.size());
    if (N < k)
      throw InsufficientGrid("fewer samples (" + std::to_string(N) + ") than unknowns (" +
                             std::to_string(k) + ")");
    CMatrix M(N, k);
    CVector b(N);
#pragma omp parallel for
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < k; ++c) {
        const cplx v = separated_basis(modes[c].l0, modes[c].ldot0, key.m, modes[c].n, key.mdot,
                                   modes[c].ndot, pts[i]).value;
        M(i, c) = key.track == 0 ? v : std::conj(v);
      }
      b(i) = vals[i];
    }
    Eigen::VectorXd scale = M.colwise().norm().transpose();
    for (int c = 0; c < k; ++c) {
      if (scale(c) == 0) throw InsufficientGrid("basis column vanishes on the grid");
      M.col(c) /= scale(c);
    }
    Eigen::BDCSVD<CMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (!(cond < 1e12)) throw InsufficientGrid("grid cannot separate the boundary modes");
    fit.condition = std::max(fit.condition, cond);
    const CVector a = svd.solve(b);
    std::vector<ModeCoeff> coeffs;
    for (int c = 0; c < k; ++c) coeffs.push_back({modes[c], a(c) / scale(c)});
    const CVector res = M * a - b;
    fit.residual = std::max(fit.residual, res.cwiseAbs().maxCoeff());
    data_max = std::max(data_max, b.cwiseAbs().maxCoeff());
    fit.coeffs[key] = std::move(coeffs);
  }
  fit.relative_residual = data_max > 0 ? fit.residual / data_max : fit.residual;
  if (fit.relative_residual > 1e-8)
    fit.warnings.push_back("boundary data is not band-limited under the truncation; relative "
                           "collocation residual " + std::to_string(fit.relative_residual));
  return fit;
}

// ---- solution -----------------------------------------------------------------

CVector FieldSolution::profile(std::size_t mode, int track, double r) const {
  if (!(r >= R - 1e-12 && r <= Rmax + 1e-12))
    throw DomainError("r outside the integrated range");
  const Mode& md = modes.at(mode);
  const RadialProfiles& pr = track == 0 ? md.profiles.primal : md.profiles.dual;
  for (std::size_t i = 0; i < pr.r.size(); ++i)
    if (pr.r[i] == r) return pr.f[i];
  const CMatrix& C = track == 0 ? md.system.C : md.system.Cstar;
  const CMatrix& K = track == 0 ? md.system.K : md.system.Kstar;
  const cplx kap = track == 0 ? md.system.kappa : md.system.kappa_star;
  const CVector& f0 = track == 0 ? md.f0 : md.fstar0;
  return integrate_radial(C, K, kap, f0, {R, std::max(r, R)}, integration).f.back();
}

FieldJet FieldSolution::jet(int track, double r, const SphereCoord& p) const {
  const int N = chain.dim();
  FieldJet j = zero_jet(N);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const Mode& md = modes[k];
    const CVector f = profile(k, track, r);
    const RadialDAE dae(track == 0 ? md.system.C : md.system.Cstar,
                        track == 0 ? md.system.K : md.system.Kstar,
                        track == 0 ? md.system.kappa : md.system.kappa_star);
    const CVector fp = dae.derivative(r, f);
    for (std::size_t I = 0; I < md.system.index.size(); ++I) {
      const auto& c = md.system.index[I];
      const int g = chain_index(chain, c);
      PointJet b = basis_point_jet(md.system.mode, c.m, c.mdot, p);
      if (track == 1)
        b = {std::conj(b.v), std::conj(b.phi), std::conj(b.eps), std::conj(b.theta),
             std::conj(b.tau)};
      j.psi(g) += f(I) * b.v;
      j.d_phi(g) += f(I) * b.phi;
      j.d_eps(g) += f(I) * b.eps;
      j.d_theta(g) += f(I) * b.theta;
      j.d_tau(g) += f(I) * b.tau;
      j.d_r(g) += fp(I) * b.v;
    }
  }
  return j;
}

FieldEvaluator FieldSolution::evaluator() const {
  return [this](int track, double r, const SphereCoord& p) { return jet(track, r, p); };
}

FieldSolution solve(const SpinChain& chain, const BoundaryData& data, HalfInt l0, HalfInt ldot0,
                    const SolveOptions& opt) {
  const auto problems = chain_validate(chain);
  if (!problems.empty()) throw InvalidChain(problems.front());
  if (l0 < chain.max_l()) throw InvalidArgument("l0 too small");
  if (ldot0 < chain.max_ldot()) throw InvalidArgument("ldot0 too small");
  if (!(opt.R > 0) || !(opt.Rmax >= opt.R)) throw InvalidArgument("need 0 < R <= Rmax");
  if (opt.n_r < 2) throw InvalidArgument("n_r must be at least 2");

  FieldSolution sol;
  sol.chain = chain;
  sol.l0 = l0;
  sol.ldot0 = ldot0;
  sol.R = opt.R;
  sol.Rmax = opt.Rmax;
  sol.integration = opt.integration;
  for (int i = 0; i < opt.n_r; ++i)
    sol.r_grid.push_back(opt.R + (opt.Rmax - opt.R) * i / (opt.n_r - 1));
  sol.fit = boundary_analyze(chain, data, l0, ldot0, opt.boundary);
  for (const auto& w : sol.fit.warnings) sol.diagnostics.push_back(w);

  std::set<RadialMode> used;
  for (const auto& [key, cs] : sol.fit.coeffs)
    for (const auto& c : cs) used.insert(c.mode);
  sol.modes.resize(used.size());
  std::vector<RadialMode> list(used.begin(), used.end());
  std::vector<std::exception_ptr> errors(list.size());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < static_cast<int>(list.size()); ++k) {
    try {
      auto& md = sol.modes[k];
      md.system = assemble_mode(chain, list[k]);
      const int n = static_cast<int>(md.system.index.size());
      md.f0 = CVector::Zero(n);
      md.fstar0 = CVector::Zero(n);
      for (int I = 0; I < n; ++I) {
        const auto& c = md.system.index[I];
        for (int track = 0; track < 2; ++track) {
          auto it = sol.fit.coeffs.find({track, c.link, c.m, c.mdot});
          if (it == sol.fit.coeffs.end()) continue;
          for (const auto& mc : it->second)
            if (mc.mode == list[k]) (track == 0 ? md.f0 : md.fstar0)(I) = mc.value;
        }
      }
      md.profiles = integrate_radial(md.system, md.f0, md.fstar0, sol.r_grid, opt.integration);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double coeff_scale = 0;
  for (const auto& md : sol.modes)
    coeff_scale = std::max({coeff_scale, md.f0.cwiseAbs().maxCoeff(), md.fstar0.cwiseAbs().maxCoeff()});
  if (coeff_scale == 0) coeff_scale = 1;
  for (const auto& md : sol.modes) {
    const std::string tag = "mode " + md.system.mode.str() + ": ";
    if (md.system.algebraic_only())
      sol.diagnostics.push_back(tag + "algebraic-only system (C = 0); profiles fixed by the "
                                      "algebraic constraint");
    const double d = std::max(md.profiles.primal.initial_constraint_defect,
                              md.profiles.dual.initial_constraint_defect) /
                     coeff_scale;
    if (d > 1e-10)
      sol.diagnostics.push_back(tag + "boundary values violate the algebraic constraint (defect " +
                                std::to_string(d) + "); projected");
  }
  return sol;
}

std::vector<CVector> synthesize_field(const FieldSolution& sol, int track, double r,
                                      const std::vector<SphereCoord>& pts) {
  std::vector<CVector> out(pts.size());
  std::vector<std::exception_ptr> errors(pts.size());
#pragma omp parallel for
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    try {
      out[i] = sol.jet(track, r, pts[i]).psi;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ResidualStats pde_residual(const FieldEvaluator& field, const SpinChain& chain,
                           const std::vector<SamplePoint>& pts) {
  const SeparatedOperators ops = separated_operators(chain);
  const auto comps = chain_components(chain);
  const int n = static_cast<int>(pts.size());
  std::vector<double> res(n, -1.0), norm(n, 0.0);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto& sp = pts[i];
    if (std::abs(std::sin(cplx(sp.p.theta, -sp.p.tau))) < 1e-6) continue;
    try {
      const FieldJet j0 = field(0, sp.r, sp.p);
      const FieldJet j1 = field(1, sp.r, sp.p);
      const CVector r0 = apply_operator(ops.primal, comps, j0, sp.r, sp.p);
      const CVector r1 = apply_operator(ops.dual, comps, conj_jet(j1), sp.r, sp.p).conjugate();
      res[i] = std::sqrt(r0.squaredNorm() + r1.squaredNorm());
      norm[i] = std::sqrt(j0.psi.squaredNorm() + j1.psi.squaredNorm());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  ResidualStats st;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    if (res[i] < 0) {
      ++st.skipped;
      continue;
    }
    ++st.used;
    st.max = std::max(st.max, res[i]);
    sum += res[i] * res[i];
    st.field_norm = std::max(st.field_norm, norm[i]);
  }
  if (st.used > 0) st.rms = std::sqrt(sum / st.used);
  const double fn = st.field_norm > 0 ? st.field_norm : 1.0;
  st.relative_max = st.max / fn;
  st.relative_rms = st.rms / fn;
  return st;
}

std::vector<SamplePoint> interior_samples(int count, double R, double Rmax, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> rr(0, 1), th(0.3, kPi - 0.3), ta(-1, 1),
      ph(0, 2 * kPi), ep(-1, 1);
  std::vector<SamplePoint> out;
  while (static_cast<int>(out.size()) < count) {
    const double u = rr(rng);
    SamplePoint s{R + (Rmax - R) * (0.05 + 0.9 * u), {th(rng), ta(rng), ph(rng), ep(rng)}};
    if (std::abs(std::sin(cplx(s.p.theta, -s.p.tau))) >= 0.2) out.push_back(s);
  }
  return out;
}

}  // namespace rwekit
