#include "rwekit/rwe.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "rwekit/hyperfun.hpp"

namespace rwekit {

int SpinChain::dim() const {
  int d = 0;
  for (const auto& lk : links) d += lk.rep.dim();
  return d;
}

int SpinChain::offset(int link) const {
  int d = 0;
  for (int i = 0; i < link; ++i) d += links[i].rep.dim();
  return d;
}

HalfInt SpinChain::max_l() const {
  HalfInt m;
  for (const auto& lk : links) m = std::max(m, lk.rep.l);
  return m;
}

HalfInt SpinChain::max_ldot() const {
  HalfInt m;
  for (const auto& lk : links) m = std::max(m, lk.rep.ldot);
  return m;
}

SpinChain dirac_chain() {
  SpinChain c;
  c.links = {{{1_h, 0_h}, 1, 1}, {{0_h, 1_h}, 1, 1}};
  c.spin = 1_h;
  return c;
}

SpinChain single_link_chain(RepLabel rep, HalfInt spin) {
  SpinChain c;
  c.links = {{rep, 1, 1}};
  c.spin = spin;
  return c;
}

namespace {

// Transition class of an ordered pair, or nullopt when l' - l and ldot' - ldot
// are not a common integer step in {-1, 0, 1}.
std::optional<int> pair_class(const RepLabel& to, const RepLabel& from) {
  const int dl = to.l.twice() - from.l.twice();
  const int dld = to.ldot.twice() - from.ldot.twice();
  if (dl != dld || dl % 2 != 0 || std::abs(dl) > 2) return std::nullopt;
  return dl / 2;
}

bool half_step_pair(const RepLabel& to, const RepLabel& from) {
  return std::abs(to.l.twice() - from.l.twice()) == 1 &&
         std::abs(to.ldot.twice() - from.ldot.twice()) == 1;
}

}  // namespace

std::vector<ChainConstant> effective_constants(const SpinChain& chain) {
  if (!chain.default_constants) return chain.constants;
  std::vector<ChainConstant> out;
  const int n = static_cast<int>(chain.links.size());
  for (int to = 0; to < n; ++to)
    for (int from = 0; from < n; ++from)
      if (auto cls = pair_class(chain.links[to].rep, chain.links[from].rep))
        out.push_back({from, to, *cls, {1.0, 0.0}, {1.0, 0.0}});
  return out;
}

std::vector<std::string> chain_validate(const SpinChain& chain) {
  std::vector<std::string> v;
  const int n = static_cast<int>(chain.links.size());
  if (n == 0) v.push_back("chain has no links");
  for (int i = 0; i < n; ++i) {
    const auto& r = chain.links[i].rep;
    if (r.l.twice() < 0 || r.ldot.twice() < 0) {
      v.push_back("link " + std::to_string(i) + ": negative weight");
      continue;
    }
    const int lo = std::abs(r.l.twice() - r.ldot.twice());
    const int hi = r.l.twice() + r.ldot.twice();
    const int s = chain.spin.twice();
    if (s < lo || s > hi) {
      std::ostringstream os;
      os << "link " << i << " " << r.str() << ": spin " << chain.spin.str()
         << " outside window [" << HalfInt::from_twice(lo).str() << ", "
         << HalfInt::from_twice(hi).str() << "]";
      v.push_back(os.str());
    }
  }
  if (chain.default_constants) return v;
  for (std::size_t c = 0; c < chain.constants.size(); ++c) {
    const auto& k = chain.constants[c];
    std::ostringstream os;
    os << "constant " << c << " (" << k.from << "->" << k.to << "): ";
    if (k.from < 0 || k.from >= n || k.to < 0 || k.to >= n) {
      v.push_back(os.str() + "link index out of range");
      continue;
    }
    if (k.cls < -1 || k.cls > 1) {
      v.push_back(os.str() + "class must be -1, 0 or +1");
      continue;
    }
    if (k.c == cplx{} && k.cstar == cplx{}) continue;
    const auto& to = chain.links[k.to].rep;
    const auto& from = chain.links[k.from].rep;
    if (half_step_pair(to, from)) continue;
    const auto cls = pair_class(to, from);
    if (!cls) {
      v.push_back(os.str() + from.str() + " -> " + to.str() + " is not interlocking");
    } else if (*cls != k.cls) {
      v.push_back(os.str() + "declared class " + std::to_string(k.cls) +
                  " but the link pair has class " + std::to_string(*cls));
    }
  }
  return v;
}

namespace {

void require_valid(const SpinChain& chain) {
  const auto v = chain_validate(chain);
  if (v.empty()) return;
  std::string msg = "invalid chain:";
  for (const auto& s : v) msg += "\n  " + s;
  throw InvalidChain(msg);
}

double sq(double x) { return std::sqrt(std::max(0.0, x)); }

// Element tables, evaluated at the column indices (l, ld, m, md).
// Group 0 is the diagonal Lambda_3 table; groups 1..4 shift m-1, m+1, md-1, md+1.
double table_value(int group, int cls, double l, double ld, double m, double md) {
  switch (group) {
    case 0:
      if (cls < 0) return sq((l * l - m * m) * (ld * ld - md * md));
      if (cls == 0) return m * md;
      return sq(((l + 1) * (l + 1) - m * m) * ((ld + 1) * (ld + 1) - md * md));
    case 1:
      if (cls < 0) return sq((l + m) * (l + m - 1) * (ld * ld - md * md));
      if (cls == 0) return md * sq((l + m) * (l - m + 1));
      return sq((l - m + 1) * (l - m + 2) * ((ld + 1) * (ld + 1) - md * md));
    case 2:
      if (cls < 0) return sq((l - m) * (l - m - 1) * (ld * ld - md * md));
      if (cls == 0) return md * sq((l + m + 1) * (l - m));
      return sq((l + m + 1) * (l + m + 2) * ((ld + 1) * (ld + 1) - md * md));
    case 3:
      if (cls < 0) return sq((l * l - m * m) * (ld + md) * (ld + md - 1));
      if (cls == 0) return m * sq((ld + md) * (ld - md + 1));
      return sq(((l + 1) * (l + 1) - m * m) * (ld - md + 1) * (ld - md + 2));
    default:
      if (cls < 0) return sq((l * l - m * m) * (ld - md) * (ld - md - 1));
      if (cls == 0) return m * sq((ld + md + 1) * (ld - md));
      return sq(((l + 1) * (l + 1) - m * m) * (ld + md + 1) * (ld + md + 2));
  }
}

constexpr int kShiftM[5] = {0, -1, 1, 0, 0};
constexpr int kShiftMd[5] = {0, 0, 0, -1, 1};

// Prefactors per group and class (-1, 0, +1) for Lambda_1 and Lambda_2.
constexpr double kPref1[5][3] = {
    {0, 0, 0}, {-0.5, 0.5, 0.5}, {0.5, 0.5, -0.5}, {0.5, -0.5, -0.5}, {-0.5, -0.5, 0.5}};
constexpr double kPref2[5][3] = {
    {0, 0, 0}, {-0.5, 0.5, 0.5}, {-0.5, -0.5, 0.5}, {0.5, -0.5, -0.5}, {0.5, 0.5, -0.5}};

// Adds pref * table(group) for one constant into dst at block (row, col).
void add_group(CMatrix& dst, int row_off, const RepLabel& row, int col_off, const RepLabel& col,
               int group, int cls, cplx pref) {
  const double l = col.l.value(), ld = col.ldot.value();
  for (HalfInt m : projections(col.l))
    for (HalfInt md : projections(col.ldot)) {
      const HalfInt mr = m + kShiftM[group];
      const HalfInt mdr = md + kShiftMd[group];
      if (!row.contains(mr, mdr)) continue;
      const double v = table_value(group, cls, l, ld, m.value(), md.value());
      dst(row_off + row.index(mr, mdr), col_off + col.index(m, md)) += pref * v;
    }
}

CMatrix block_diag(const SpinChain& chain, const std::function<CMatrix(const RepLabel&)>& f) {
  const int n = chain.dim();
  CMatrix out = CMatrix::Zero(n, n);
  int off = 0;
  for (const auto& lk : chain.links) {
    const int d = lk.rep.dim();
    out.block(off, off, d, d) = f(lk.rep);
    off += d;
  }
  return out;
}

}  // namespace

LambdaSet build_lambda(const SpinChain& chain) {
  require_valid(chain);
  const int n = chain.dim();
  LambdaSet out;
  for (auto* arr : {&out.L, &out.Lstar})
    for (auto& m : *arr) m = CMatrix::Zero(n, n);
  for (const auto& k : effective_constants(chain)) {
    const auto& row = chain.links[k.to].rep;
    const auto& col = chain.links[k.from].rep;
    if (!pair_class(row, col)) continue;  // half-step pairs carry no table entries
    const int ro = chain.offset(k.to), co = chain.offset(k.from);
    const int ci = k.cls + 1;
    add_group(out.L[2], ro, row, co, col, 0, k.cls, k.c);
    add_group(out.Lstar[2], ro, row, co, col, 0, k.cls, k.cstar);
    for (int g = 1; g <= 4; ++g) {
      add_group(out.L[0], ro, row, co, col, g, k.cls, k.c * kPref1[g][ci]);
      add_group(out.L[1], ro, row, co, col, g, k.cls, k.c * kI * kPref2[g][ci]);
      add_group(out.Lstar[0], ro, row, co, col, g, k.cls, -k.cstar * kPref1[g][ci]);
      add_group(out.Lstar[1], ro, row, co, col, g, k.cls, -k.cstar * kI * kPref2[g][ci]);
    }
  }
  return out;
}

CMatrix lambda3_block_solutions(RepLabel row, RepLabel col) {
  const auto r = tensor_operators(row);
  const auto c = tensor_operators(col);
  const int dr = row.dim(), dc = col.dim(), nv = dr * dc;
  const CMatrix ir = CMatrix::Identity(dr, dr);
  const CMatrix ic = CMatrix::Identity(dc, dc);
  // vec(L Xc - Xr L) = (Xc^T (x) 1 - 1 (x) Xr) vec(L)
  auto comm = [&](const CMatrix& xr, const CMatrix& xc) -> CMatrix {
    return kron(xc.transpose(), ir) - kron(ic, xr);
  };
  const CMatrix two = 2.0 * CMatrix::Identity(nv, nv);
  CMatrix sys(4 * nv, nv);
  sys.block(0, 0, nv, nv) = comm(r.Xplus, c.Xplus) * comm(r.Xminus, c.Xminus) - two;
  sys.block(nv, 0, nv, nv) = comm(r.Yplus, c.Yplus) * comm(r.Yminus, c.Yminus) - two;
  sys.block(2 * nv, 0, nv, nv) = comm(r.X3, c.X3);
  sys.block(3 * nv, 0, nv, nv) = comm(r.Y3, c.Y3);
  Eigen::JacobiSVD<CMatrix> svd(sys, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, s.size() ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return svd.matrixV().rightCols(nv - rank);
}

LambdaSet lambda_oracle(const SpinChain& chain) {
  require_valid(chain);
  const int n = chain.dim();
  LambdaSet out;
  CMatrix l3 = CMatrix::Zero(n, n), l3s = CMatrix::Zero(n, n);
  for (const auto& k : effective_constants(chain)) {
    const auto& row = chain.links[k.to].rep;
    const auto& col = chain.links[k.from].rep;
    const int ro = chain.offset(k.to), co = chain.offset(k.from);
    const int dr = row.dim(), dc = col.dim();
    CMatrix closed = CMatrix::Zero(dr, dc);
    if (pair_class(row, col)) add_group(closed, 0, row, 0, col, 0, k.cls, 1.0);
    const CMatrix basis = lambda3_block_solutions(row, col);
    if (basis.cols() > 1) {
      throw OracleFailure("solution space of dimension " + std::to_string(basis.cols()) +
                          " for block " + col.str() + " -> " + row.str());
    }
    // Highest weight entry of the closed form fixes the normalization.
    int pick = -1;
    for (int i = dr * dc - 1; i >= 0 && pick < 0; --i)
      if (std::abs(closed(i % dr, i / dr)) > 1e-12) pick = i;
    if (basis.cols() == 0) {
      if (pick >= 0)
        throw OracleFailure("no solution for block " + col.str() + " -> " + row.str() +
                            " but the closed form is nonzero");
      continue;
    }
    if (pick < 0)
      throw OracleFailure("closed form vanishes on block " + col.str() + " -> " + row.str() +
                          " but a solution exists");
    const cplx pivot = basis(pick, 0);
    if (std::abs(pivot) < 1e-12)
      throw OracleFailure("solution vanishes at the normalization entry of block " + col.str() +
                          " -> " + row.str());
    const CVector v = basis.col(0) * (closed(pick % dr, pick / dr) / pivot);
    const CMatrix blk = Eigen::Map<const CMatrix>(v.data(), dr, dc);
    l3.block(ro, co, dr, dc) += k.c * blk;
    l3s.block(ro, co, dr, dc) += k.cstar * blk;
  }
  const auto ops = chain_operators(chain);
  out.L[2] = l3;
  out.L[0] = commutator(ops.A[1], l3);
  out.L[1] = -commutator(ops.A[0], l3);
  out.Lstar[2] = l3s;
  out.Lstar[0] = commutator(ops.Atilde[1], l3s);
  out.Lstar[1] = -commutator(ops.Atilde[0], l3s);
  return out;
}

ChainOperators chain_operators(const SpinChain& chain) {
  std::vector<SpinOperatorSet> sets;
  for (const auto& lk : chain.links) sets.push_back(tensor_operators(lk.rep));
  auto diag = [&](auto getter) {
    const int n = chain.dim();
    CMatrix out = CMatrix::Zero(n, n);
    int off = 0;
    for (const auto& s : sets) {
      const int d = s.rep.dim();
      out.block(off, off, d, d) = getter(s);
      off += d;
    }
    return out;
  };
  ChainOperators o;
  for (int i = 0; i < 3; ++i) {
    o.A[i] = diag([i](const SpinOperatorSet& s) { return s.A[i]; });
    o.B[i] = diag([i](const SpinOperatorSet& s) { return s.B[i]; });
    o.Atilde[i] = diag([i](const SpinOperatorSet& s) { return s.Atilde[i]; });
    o.Btilde[i] = diag([i](const SpinOperatorSet& s) { return s.Btilde[i]; });
  }
  o.Xplus = diag([](const SpinOperatorSet& s) { return s.Xplus; });
  o.Xminus = diag([](const SpinOperatorSet& s) { return s.Xminus; });
  o.X3 = diag([](const SpinOperatorSet& s) { return s.X3; });
  o.Yplus = diag([](const SpinOperatorSet& s) { return s.Yplus; });
  o.Yminus = diag([](const SpinOperatorSet& s) { return s.Yminus; });
  o.Y3 = diag([](const SpinOperatorSet& s) { return s.Y3; });
  return o;
}

namespace {

int levi(int i, int j, int k) {
  return (i - j) * (j - k) * (k - i) / 2;
}

// [G_i, L_j] = f * eps_ijk L_k for all nine (i, j).
void table_suite(std::vector<NamedResidual>& out, const std::string& tag,
                 const std::array<CMatrix, 3>& g, const std::array<CMatrix, 3>& l, cplx f) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CMatrix rhs = CMatrix::Zero(l[0].rows(), l[0].cols());
      for (int k = 0; k < 3; ++k)
        if (int e = levi(i, j, k)) rhs += f * static_cast<double>(e) * l[k];
      out.push_back({tag + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]",
                     max_abs(commutator(g[i], l[j]) - rhs)});
    }
}

void lx_suite(std::vector<NamedResidual>& out, const std::string& tag, const CMatrix& l3,
              const ChainOperators& o) {
  out.push_back({tag + "[[L3,X-],X+]=2L3",
                 max_abs(commutator(commutator(l3, o.Xminus), o.Xplus) - 2.0 * l3)});
  out.push_back({tag + "[[L3,Y-],Y+]=2L3",
                 max_abs(commutator(commutator(l3, o.Yminus), o.Yplus) - 2.0 * l3)});
  out.push_back({tag + "[L3,X3]=0", max_abs(commutator(l3, o.X3))});
  out.push_back({tag + "[L3,Y3]=0", max_abs(commutator(l3, o.Y3))});
}

}  // namespace

std::vector<NamedResidual> commutator_suite(const LambdaSet& lambda, const ChainOperators& ops) {
  std::vector<NamedResidual> out;
  const cplx one{1.0, 0.0};
  table_suite(out, "AL", ops.A, lambda.L, one);
  table_suite(out, "BL", ops.B, lambda.L, -kI);
  table_suite(out, "DAL'", ops.Atilde, lambda.L, one);
  table_suite(out, "DBL'", ops.Btilde, lambda.L, kI);
  table_suite(out, "DAL", ops.Atilde, lambda.Lstar, one);
  table_suite(out, "DBL", ops.Btilde, lambda.Lstar, kI);
  table_suite(out, "AL'", ops.A, lambda.Lstar, one);
  table_suite(out, "BL'", ops.B, lambda.Lstar, -kI);
  lx_suite(out, "LX", lambda.L[2], ops);
  lx_suite(out, "LX*", lambda.Lstar[2], ops);
  return out;
}

DEMatrices de_matrices(const SpinChain& chain, const LambdaSet& lam, const ChainOperators& o) {
  DEMatrices r;
  const auto& L = lam.L;
  const auto& S = lam.Lstar;
  r.D = L[0] * o.A[1] - L[1] * o.A[0];
  r.E = L[0] * o.B[1] - L[1] * o.B[0];
  r.Dstar = S[0] * o.Atilde[1] - S[1] * o.Atilde[0];
  r.Estar = S[0] * o.Btilde[1] - S[1] * o.Btilde[0];
  r.Dprod = 2.0 * L[2] + o.A[1] * L[0] - o.A[0] * L[1];
  r.Eprod = -2.0 * kI * L[2] + o.B[1] * L[0] - o.B[0] * L[1];
  r.Dstar_prod = 2.0 * S[2] + o.Atilde[1] * S[0] - o.Atilde[0] * S[1];
  r.Estar_prod = 2.0 * kI * S[2] + o.Btilde[1] * S[0] - o.Btilde[0] * S[1];

  const int n = chain.dim();
  r.Dtable = r.Etable = r.Dstar_table = r.Estar_table = CMatrix::Zero(n, n);
  for (const auto& k : effective_constants(chain)) {
    const auto& row = chain.links[k.to].rep;
    const auto& col = chain.links[k.from].rep;
    if (!pair_class(row, col)) continue;
    const int ro = chain.offset(k.to), co = chain.offset(k.from);
    const double l = col.l.value(), ld = col.ldot.value();
    cplx d = 0, e = 0, ds = 0, es = 0;
    if (k.cls < 0) {
      d = k.c * (l + ld);
      e = kI * k.c * (ld - l - 2);
      ds = k.cstar * (l + ld);
      es = kI * k.cstar * (ld - l + 2);
    } else if (k.cls == 0) {
      e = -2.0 * kI * k.c;
      es = 2.0 * kI * k.cstar;
    } else {
      d = -k.c * (l + ld + 2);
      e = kI * k.c * (l - ld - 2);
      ds = -k.cstar * (l + ld + 2);
      es = kI * k.cstar * (l - ld + 2);
    }
    add_group(r.Dtable, ro, row, co, col, 0, k.cls, d);
    add_group(r.Etable, ro, row, co, col, 0, k.cls, e);
    add_group(r.Dstar_table, ro, row, co, col, 0, k.cls, ds);
    add_group(r.Estar_table, ro, row, co, col, 0, k.cls, es);
  }
  r.product_vs_table = std::max({max_abs(r.Dprod - r.Dtable), max_abs(r.Eprod - r.Etable),
                                 max_abs(r.Dstar_prod - r.Dstar_table),
                                 max_abs(r.Estar_prod - r.Estar_table)});
  r.definition_vs_product =
      std::max({max_abs(r.D - r.Dprod), max_abs(r.E - r.Eprod), max_abs(r.Dstar - r.Dstar_prod),
                max_abs(r.Estar - r.Estar_prod)});
  return r;
}

CMatrix bivector_rotation(const GroupElement& g) {
  const Mat2 m = to_matrix(g);
  const Mat2 minv = m.inverse();
  const auto j = spin_matrices(1_h);
  CMatrix r(3, 3);
  for (int k = 0; k < 3; ++k) {
    const Mat2 t = m * Mat2(j[k]) * minv;
    for (int i = 0; i < 3; ++i) r(i, k) = 2.0 * (Mat2(j[i]) * t).trace();
  }
  CMatrix out = CMatrix::Zero(6, 6);
  out.topLeftCorner(3, 3) = r;
  out.bottomRightCorner(3, 3) = r.conjugate();
  return out;
}

CMatrix bivector_metric() {
  CMatrix g = CMatrix::Zero(6, 6);
  for (int i = 0; i < 6; ++i) g(i, i) = i < 3 ? -1.0 : 1.0;
  return g;
}

CMatrix chain_rep_matrix(const SpinChain& chain, const GroupElement& g, bool dual) {
  GroupElement h = g;
  if (dual) {
    h.eps_phi = -g.eps_phi;
    h.tau = -g.tau;
    h.eps_psi = -g.eps_psi;
  }
  return block_diag(chain, [&](const RepLabel& rep) { return rep_matrix(rep, h); });
}

InvarianceResidual invariance_residual(const LambdaSet& lambda, const SpinChain& chain,
                                       const GroupElement& g) {
  const CMatrix rot = bivector_rotation(g);
  const CMatrix r = rot.topLeftCorner(3, 3);
  const CMatrix rs = rot.bottomRightCorner(3, 3);
  auto one = [&](const std::array<CMatrix, 3>& l, const CMatrix& t, const CMatrix& coef) {
    const CMatrix tinv = t.inverse();
    std::array<CMatrix, 3> moved;
    for (int k = 0; k < 3; ++k) moved[k] = t * l[k] * tinv;
    double worst = 0;
    for (int i = 0; i < 3; ++i) {
      CMatrix acc = -l[i];
      for (int k = 0; k < 3; ++k) acc += coef(i, k) * moved[k];
      worst = std::max(worst, max_abs(acc));
    }
    return worst;
  };
  InvarianceResidual out;
  out.lambda = one(lambda.L, chain_rep_matrix(chain, g, false), r);
  out.lambda_star = one(lambda.Lstar, chain_rep_matrix(chain, g, true), rs);
  return out;
}

std::array<CMatrix, 6> gamma_blocks(const LambdaSet& lambda) {
  const int n = static_cast<int>(lambda.L[0].rows());
  std::array<CMatrix, 6> out;
  for (int k = 0; k < 6; ++k) {
    const int j = k % 3;
    CMatrix g = CMatrix::Zero(2 * n, 2 * n);
    g.topRightCorner(n, n) = (k < 3 ? 1.0 : -1.0) * lambda.Lstar[j];
    g.bottomLeftCorner(n, n) = lambda.L[j];
    out[k] = g;
  }
  return out;
}

CVector lambda3_eigenvalues(const LambdaSet& lambda) {
  if (lambda.L[2].size() == 0) return CVector();
  Eigen::ComplexEigenSolver<CMatrix> es(lambda.L[2], false);
  return es.eigenvalues();
}

}  // namespace rwekit
