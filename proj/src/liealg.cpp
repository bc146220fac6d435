#include "rwekit/liealg.hpp"

#include <cmath>

namespace rwekit {

double alpha(HalfInt l, HalfInt m) {
  if (m.twice() < -l.twice() || m.twice() > l.twice() + 2 || !m.same_class(l))
    throw InvalidArgument("alpha: m = " + m.str() + " outside [-l, l+1] for l = " + l.str());
  const double v = (l.value() + m.value()) * (l.value() - m.value() + 1.0);
  return std::sqrt(std::max(v, 0.0));
}

std::array<CMatrix, 3> spin_matrices(HalfInt l) {
  const int d = l.twice() + 1;
  CMatrix jp = CMatrix::Zero(d, d), jz = CMatrix::Zero(d, d);
  const auto ms = projections(l);
  for (int i = 0; i < d; ++i) {
    jz(i, i) = ms[i].value();
    if (i + 1 < d) jp(i + 1, i) = alpha(l, ms[i + 1]);  // <m+1|J+|m>
  }
  CMatrix jm = jp.adjoint();
  return {0.5 * (jp + jm), (jp - jm) / (2.0 * kI), jz};
}

std::array<CMatrix, 3> chiral_A(HalfInt l) {
  auto j = spin_matrices(l);
  return {-kI * j[0], -kI * j[1], -kI * j[2]};
}

std::array<CMatrix, 3> chiral_B(HalfInt l) {
  auto j = spin_matrices(l);
  return {-j[0], -j[1], -j[2]};
}

std::array<CMatrix, 3> SpinOperatorSet::X() const {
  std::array<CMatrix, 3> x;
  for (int i = 0; i < 3; ++i) x[i] = 0.5 * kI * (A[i] + kI * B[i]);
  return x;
}

std::array<CMatrix, 3> SpinOperatorSet::Y() const {
  std::array<CMatrix, 3> y;
  for (int i = 0; i < 3; ++i) y[i] = 0.5 * kI * (A[i] - kI * B[i]);
  return y;
}

SpinOperatorSet tensor_operators(const RepLabel& rep) {
  rep.validate();
  SpinOperatorSet s;
  s.rep = rep;
  const auto j = spin_matrices(rep.l);
  const auto jd = spin_matrices(rep.ldot);
  const CMatrix il = CMatrix::Identity(rep.dim_l(), rep.dim_l());
  const CMatrix ild = CMatrix::Identity(rep.dim_ldot(), rep.dim_ldot());
  for (int i = 0; i < 3; ++i) {
    const CMatrix ju = kron(j[i], ild);
    const CMatrix jdot = kron(il, jd[i]);
    // Undotted factor as in the spin-1/2 and spin-1 tables; the dotted factor
    // carries the opposite-chirality generators so that X acts on m, Y on mdot.
    s.A[i] = -kI * (ju + jdot);
    s.B[i] = -ju + jdot;
    s.Atilde[i] = s.A[i];
    s.Btilde[i] = -s.B[i];
  }
  const auto x = s.X();
  const auto y = s.Y();
  s.Xplus = x[0] + kI * x[1];
  s.Xminus = x[0] - kI * x[1];
  s.X3 = x[2];
  s.Yplus = y[0] + kI * y[1];
  s.Yminus = y[0] - kI * y[1];
  s.Y3 = y[2];
  return s;
}

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double ladder_action_check(const SpinOperatorSet& set) {
  const RepLabel& rep = set.rep;
  const int d = rep.dim();
  CMatrix xp = CMatrix::Zero(d, d), xm = xp, x3 = xp, yp = xp, ym = xp, y3 = xp;
  for (HalfInt m : projections(rep.l)) {
    for (HalfInt md : projections(rep.ldot)) {
      const int c = rep.index(m, md);
      x3(c, c) = m.value();
      y3(c, c) = md.value();
      if (m > -rep.l) xm(rep.index(m - 1, md), c) = alpha(rep.l, m);
      if (m < rep.l) xp(rep.index(m + 1, md), c) = alpha(rep.l, m + 1);
      if (md > -rep.ldot) ym(rep.index(m, md - 1), c) = alpha(rep.ldot, md);
      if (md < rep.ldot) yp(rep.index(m, md + 1), c) = alpha(rep.ldot, md + 1);
    }
  }
  double r = 0;
  r = std::max(r, max_abs(set.Xplus - xp));
  r = std::max(r, max_abs(set.Xminus - xm));
  r = std::max(r, max_abs(set.X3 - x3));
  r = std::max(r, max_abs(set.Yplus - yp));
  r = std::max(r, max_abs(set.Yminus - ym));
  r = std::max(r, max_abs(set.Y3 - y3));
  return r;
}

namespace {

void com1(std::vector<NamedResidual>& out, const std::string& tag,
          const std::array<CMatrix, 3>& A, const std::array<CMatrix, 3>& B) {
  auto add = [&](const std::string& name, const CMatrix& lhs, const CMatrix& rhs) {
    out.push_back({tag + name, max_abs(lhs - rhs)});
  };
  add("[A1,A2]=A3", commutator(A[0], A[1]), A[2]);
  add("[A2,A3]=A1", commutator(A[1], A[2]), A[0]);
  add("[A3,A1]=A2", commutator(A[2], A[0]), A[1]);
  add("[B1,B2]=-A3", commutator(B[0], B[1]), -A[2]);
  add("[B2,B3]=-A1", commutator(B[1], B[2]), -A[0]);
  add("[B3,B1]=-A2", commutator(B[2], B[0]), -A[1]);
  const CMatrix zero = CMatrix::Zero(A[0].rows(), A[0].cols());
  add("[A1,B1]=0", commutator(A[0], B[0]), zero);
  add("[A2,B2]=0", commutator(A[1], B[1]), zero);
  add("[A3,B3]=0", commutator(A[2], B[2]), zero);
  add("[A1,B2]=B3", commutator(A[0], B[1]), B[2]);
  add("[A1,B3]=-B2", commutator(A[0], B[2]), -B[1]);
  add("[A2,B3]=B1", commutator(A[1], B[2]), B[0]);
  add("[A2,B1]=-B3", commutator(A[1], B[0]), -B[2]);
  add("[A3,B1]=B2", commutator(A[2], B[0]), B[1]);
  add("[A3,B2]=-B1", commutator(A[2], B[1]), -B[0]);
}

void com2(std::vector<NamedResidual>& out, const std::string& tag,
          const std::array<CMatrix, 3>& X, const std::array<CMatrix, 3>& Y) {
  static const char* n[3] = {"1", "2", "3"};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      CMatrix ex = CMatrix::Zero(X[0].rows(), X[0].cols()), ey = ex;
      for (int c = 0; c < 3; ++c) {
        const int eps = ((a - b) * (b - c) * (c - a)) / 2;  // Levi-Civita for 0,1,2
        if (eps != 0) {
          ex += kI * double(eps) * X[c];
          ey += kI * double(eps) * Y[c];
        }
      }
      if (a < b) {
        out.push_back({tag + "[X" + n[a] + ",X" + n[b] + "]", max_abs(commutator(X[a], X[b]) - ex)});
        out.push_back({tag + "[Y" + n[a] + ",Y" + n[b] + "]", max_abs(commutator(Y[a], Y[b]) - ey)});
      }
      out.push_back({tag + "[X" + n[a] + ",Y" + n[b] + "]=0", max_abs(commutator(X[a], Y[b]))});
    }
  }
}

}  // namespace

std::vector<NamedResidual> commutator_check(const SpinOperatorSet& set) {
  std::vector<NamedResidual> out;
  com1(out, "", set.A, set.B);
  com1(out, "~", set.Atilde, set.Btilde);
  com2(out, "", set.X(), set.Y());
  std::array<CMatrix, 3> xt, yt;
  for (int i = 0; i < 3; ++i) {
    xt[i] = 0.5 * kI * (set.Atilde[i] + kI * set.Btilde[i]);
    yt[i] = 0.5 * kI * (set.Atilde[i] - kI * set.Btilde[i]);
  }
  com2(out, "~", xt, yt);
  return out;
}

Casimirs casimir_matrices(const SpinOperatorSet& set) {
  const auto x = set.X();
  const auto y = set.Y();
  return {x[0] * x[0] + x[1] * x[1] + x[2] * x[2], y[0] * y[0] + y[1] * y[1] + y[2] * y[2]};
}

}  // namespace rwekit
