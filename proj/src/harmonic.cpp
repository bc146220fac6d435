#include "rwekit/harmonic.hpp"

#include <cmath>
#include <set>

#include <Eigen/SVD>
#include <gsl/gsl_integration.h>

#include "rwekit/hyperfun.hpp"

namespace rwekit {

double haar_weight(double theta, double tau) {
  const double s = std::sin(theta), c = std::cos(theta);
  const double ch = std::cosh(tau), sh = std::sinh(tau);
  return s * s * ch * ch + c * c * sh * sh;
}

namespace {

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw InvalidArgument("quadrature needs at least one node");
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, i, &x[i], &w[i], t);
  gsl_integration_glfixed_table_free(t);
}

}  // namespace

SphereGrid SphereGrid::make(int ntheta, int nphi, int ntau, int neps, double T) {
  if (nphi < 1 || !(T >= 0) || !std::isfinite(T))
    throw InvalidArgument("invalid sphere grid parameters");
  SphereGrid g;
  g.T = T;
  gauss_legendre(ntheta, 0.0, kPi, g.theta, g.theta_w);
  gauss_legendre(ntau, -T, T, g.tau, g.tau_w);
  gauss_legendre(neps, -T, T, g.eps, g.eps_w);
  g.phi.resize(nphi);
  for (int i = 0; i < nphi; ++i) g.phi[i] = 2.0 * kPi * i / nphi;
  g.phi_w = 2.0 * kPi / nphi;
  return g;
}

std::size_t SphereGrid::size() const {
  return theta.size() * tau.size() * phi.size() * eps.size();
}

SphereCoord SphereGrid::point(std::size_t i) const {
  const std::size_t ne = eps.size(), np = phi.size(), nt = tau.size();
  SphereCoord p;
  p.eps = eps[i % ne];
  i /= ne;
  p.phi = phi[i % np];
  i /= np;
  p.tau = tau[i % nt];
  p.theta = theta[i / nt];
  return p;
}

double SphereGrid::weight(std::size_t i) const {
  const std::size_t ne = eps.size(), np = phi.size(), nt = tau.size();
  const std::size_t ie = i % ne, it = (i / (ne * np)) % nt, ith = i / (ne * np * nt);
  return theta_w[ith] * tau_w[it] * phi_w * eps_w[ie] * haar_weight(theta[ith], tau[it]);
}

std::vector<SphereCoord> SphereGrid::points() const {
  std::vector<SphereCoord> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = point(i);
  return out;
}

void CoeffTable::set(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot, cplx v) {
  const RepLabel r{l, ldot};
  if (l.twice() > L2_ || ldot.twice() > L2_ || l.twice() < 0 || ldot.twice() < 0 ||
      !r.contains(m, mdot))
    throw InvalidArgument("coefficient index outside the band limit: " + r.str() + " m=" +
                          m.str() + " mdot=" + mdot.str());
  data_[{l.twice(), ldot.twice(), m.twice(), mdot.twice()}] = v;
}

cplx CoeffTable::get(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot) const {
  auto it = data_.find({l.twice(), ldot.twice(), m.twice(), mdot.twice()});
  return it == data_.end() ? cplx{} : it->second;
}

std::vector<CoeffTable::Key> CoeffTable::all_keys(int L2) {
  std::vector<Key> out;
  for (int l = 0; l <= L2; ++l)
    for (int ld = 0; ld <= L2; ++ld)
      for (int m = -l; m <= l; m += 2)
        for (int md = -ld; md <= ld; md += 2) out.push_back({l, ld, m, md});
  return out;
}

double CoeffTable::max_diff(const CoeffTable& o) const {
  double worst = 0;
  for (const auto& [k, v] : data_) {
    auto it = o.data_.find(k);
    worst = std::max(worst, std::abs(v - (it == o.data_.end() ? cplx{} : it->second)));
  }
  for (const auto& [k, v] : o.data_)
    if (!data_.count(k)) worst = std::max(worst, std::abs(v));
  return worst;
}

HalfInt sphere_column(HalfInt l) { return HalfInt::from_twice(l.twice() % 2); }

cplx sphere_basis(HalfInt l, HalfInt ldot, HalfInt m, HalfInt mdot, const SphereCoord& p) {
  return mfun({l, ldot}, m, sphere_column(l), mdot, sphere_column(ldot), p.element());
}

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

}  // namespace

std::vector<cplx> synthesize_sphere(const CoeffTable& coeffs, const std::vector<SphereCoord>& pts) {
  std::vector<cplx> out(pts.size());
#pragma omp parallel for
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cplx acc{};
    for (const auto& [k, v] : coeffs.entries())
      if (v != cplx{}) acc += v * sphere_basis(h(k[0]), h(k[1]), h(k[2]), h(k[3]), pts[i]);
    out[i] = acc;
  }
  return out;
}

namespace {

double condition_number(const Eigen::JacobiSVD<CMatrix>& svd) {
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo > 0 ? s(0) / lo : INFINITY;
}

std::vector<std::array<int, 2>> mm_pairs(const std::vector<CoeffTable::Key>& keys) {
  std::set<std::array<int, 2>> s;
  for (const auto& k : keys) s.insert({k[2], k[3]});
  return {s.begin(), s.end()};
}

// Rows: (phi, eps) subgrid; columns: (m, mdot) pairs.
CMatrix phase_factors(const SphereGrid& g, const std::vector<std::array<int, 2>>& pairs) {
  const int np = static_cast<int>(g.phi.size()), ne = static_cast<int>(g.eps.size());
  CMatrix E(np * ne, pairs.size());
  for (int ip = 0; ip < np; ++ip)
    for (int ie = 0; ie < ne; ++ie)
      for (std::size_t c = 0; c < pairs.size(); ++c) {
        const double m = 0.5 * pairs[c][0], md = 0.5 * pairs[c][1];
        E(ip * ne + ie, c) = std::exp(cplx(-(m + md) * g.eps[ie], -(m - md) * g.phi[ip]));
      }
  return E;
}

// Rows: (theta, tau) subgrid; columns: the given keys at phi = eps = 0.
CMatrix profile_matrix(const SphereGrid& g, const std::vector<CoeffTable::Key>& cols) {
  const int nt = static_cast<int>(g.tau.size()), nth = static_cast<int>(g.theta.size());
  CMatrix G(nth * nt, cols.size());
  for (int ith = 0; ith < nth; ++ith)
    for (int it = 0; it < nt; ++it)
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto& k = cols[j];
        G(ith * nt + it, j) =
            sphere_basis(h(k[0]), h(k[1]), h(k[2]), h(k[3]), {g.theta[ith], g.tau[it], 0.0, 0.0});
      }
  return G;
}

// (phi eps) x (theta tau) matrix back to the flat grid order.
std::vector<cplx> flatten(const SphereGrid& g, const CMatrix& F) {
  const std::size_t np = g.phi.size(), ne = g.eps.size();
  std::vector<cplx> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t ie = i % ne, ip = (i / ne) % np, q = i / (ne * np);
    out[i] = F(ip * ne + ie, q);
  }
  return out;
}

}  // namespace

FieldSamples synthesize_on_grid(const CoeffTable& coeffs, const SphereGrid& grid) {
  std::vector<CoeffTable::Key> keys;
  for (const auto& [k, v] : coeffs.entries())
    if (v != cplx{}) keys.push_back(k);
  const auto pairs = mm_pairs(keys);
  const CMatrix E = phase_factors(grid, pairs);
  CMatrix H = CMatrix::Zero(pairs.size(), grid.theta.size() * grid.tau.size());
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    std::vector<CoeffTable::Key> cols;
    CVector a;
    for (const auto& k : keys)
      if (k[2] == pairs[c][0] && k[3] == pairs[c][1]) cols.push_back(k);
    a.resize(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) a(j) = coeffs.entries().at(cols[j]);
    H.row(c) = (profile_matrix(grid, cols) * a).transpose();
  }
  return {grid, flatten(grid, E * H)};
}

AnalysisResult analyze_sphere(const FieldSamples& samples, int L2) {
  const SphereGrid& g = samples.grid;
  if (samples.values.size() != g.size())
    throw InvalidArgument("sample count does not match the grid");
  for (const auto& v : samples.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidArgument("non-finite field sample");
  const auto keys = CoeffTable::all_keys(L2);
  const int need = L2 + 1;
  if (static_cast<int>(g.theta.size()) < need || static_cast<int>(g.phi.size()) < need)
    throw InsufficientGrid("grid needs at least " + std::to_string(need) +
                           " nodes in theta and phi for band limit " + h(L2).str());
  if (g.size() < keys.size())
    throw InsufficientGrid("fewer samples (" + std::to_string(g.size()) + ") than unknowns (" +
                           std::to_string(keys.size()) + ")");

  const auto pairs = mm_pairs(keys);
  const int np = static_cast<int>(g.phi.size()), ne = static_cast<int>(g.eps.size());
  const int nt = static_cast<int>(g.tau.size()), nth = static_cast<int>(g.theta.size());
  const int npe = np * ne, nq = nth * nt;
  const CMatrix E = phase_factors(g, pairs);
  AnalysisResult res;
  res.coeffs = CoeffTable(L2);
  Eigen::JacobiSVD<CMatrix> esvd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (esvd.rank() < static_cast<int>(pairs.size()))
    throw InsufficientGrid("phi/eps subgrid cannot resolve all (m, mdot) factors");
  res.condition = condition_number(esvd);

  // F(phi eps, theta tau) -> H(pair, theta tau)
  CMatrix F(npe, nq);
  for (int ith = 0; ith < nth; ++ith)
    for (int it = 0; it < nt; ++it)
      for (int ip = 0; ip < np; ++ip)
        for (int ie = 0; ie < ne; ++ie)
          F(ip * ne + ie, ith * nt + it) = samples.values[((ith * nt + it) * np + ip) * ne + ie];
  const CMatrix H = esvd.solve(F);

  for (std::size_t c = 0; c < pairs.size(); ++c) {
    std::vector<CoeffTable::Key> cols;
    for (const auto& k : keys)
      if (k[2] == pairs[c][0] && k[3] == pairs[c][1]) cols.push_back(k);
    const CMatrix G = profile_matrix(g, cols);
    Eigen::JacobiSVD<CMatrix> gsvd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (gsvd.rank() < static_cast<int>(cols.size()))
      throw InsufficientGrid("theta/tau subgrid cannot separate the weights of (m, mdot) = (" +
                             h(pairs[c][0]).str() + ", " + h(pairs[c][1]).str() + ")");
    res.condition = std::max(res.condition, condition_number(gsvd));
    const CVector a = gsvd.solve(CVector(H.row(c).transpose()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& k = cols[j];
      res.coeffs.set(h(k[0]), h(k[1]), h(k[2]), h(k[3]), a(j));
    }
  }
  const auto fit = synthesize_on_grid(res.coeffs, g);
  for (std::size_t i = 0; i < fit.values.size(); ++i)
    res.residual = std::max(res.residual, std::abs(fit.values[i] - samples.values[i]));
  double scale = 0;
  for (const auto& v : samples.values) scale = std::max(scale, std::abs(v));
  res.relative_residual = scale > 0 ? res.residual / scale : res.residual;
  if (res.condition > 1e10)
    res.warnings.push_back("ill-conditioned collocation system (condition estimate " +
                           std::to_string(res.condition) + ")");
  return res;
}

double parseval_gap(const CoeffTable& coeffs, const FieldSamples& samples) {
  double sum = 0;
  int L = 0, Ld = 0;
  for (const auto& [k, v] : coeffs.entries()) {
    const double a = std::norm(v);
    if (a == 0) continue;
    sum += a;
    L = std::max(L, k[0]);
    Ld = std::max(Ld, k[1]);
  }
  double integral = 0;
  for (std::size_t i = 0; i < samples.values.size(); ++i)
    integral += samples.grid.weight(i) * std::norm(samples.values[i]);
  const double factor = (L + 1.0) * (Ld + 1.0) / (32.0 * std::pow(kPi, 4));
  return std::abs(sum - factor * integral);
}

double minkowski_dot(const Vec4& p, const Vec4& x) {
  return -p.x1 * x.x1 - p.x2 * x.x2 - p.x3 * x.x3 + p.x4 * x.x4;
}

cplx poincare_basis(const Vec4& p, const RepLabel& rep, HalfInt m, HalfInt n, HalfInt mdot,
                    HalfInt ndot, const Vec4& x, const GroupElement& g) {
  return std::exp(cplx(0.0, -minkowski_dot(p, x))) * mfun(rep, m, n, mdot, ndot, g);
}

cplx synthesize_group(const std::vector<GroupCoeff>& coeffs, const GroupElement& g) {
  cplx acc{};
  for (const auto& c : coeffs) acc += c.value * mfun(c.rep, c.m, c.n, c.mdot, c.ndot, g);
  return acc;
}

}  // namespace rwekit
