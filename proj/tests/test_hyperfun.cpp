#include "doctest.h"

#include <random>

#include "rwekit/hyperfun.hpp"
#include "support/oracles.hpp"
#include "support/printed.hpp"

using namespace rwekit;

namespace {

HalfInt H(int twice) { return HalfInt::from_twice(twice); }

GroupElement random_element(std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> th(0.05, kPi - 0.05), ph(0, 2 * kPi), ps(-2 * kPi, 2 * kPi),
      im(-spread, spread);
  return make_group_element(ph(rng), im(rng), th(rng), im(rng), ps(rng), im(rng));
}

cplx ipow(int e) {
  static const cplx p[4] = {1.0, kI, -1.0, -kI};
  return p[((e % 4) + 4) % 4];
}

}  // namespace

TEST_CASE("zfun closed forms") {
  CHECK(zfun(H(0), H(0), H(0), 1.1, -0.4) == cplx(1.0, 0.0));
  for (double th : {0.0, 0.3, 1.7, kPi})
    for (double tau : {-1.2, 0.0, 0.8}) {
      const cplx w(th, -tau);
      CHECK(std::abs(zfun(H(1), H(-1), H(-1), th, tau) - std::cos(w / 2.0)) < 1e-14);
      CHECK(std::abs(zfun(H(1), H(-1), H(-1), th, tau) -
                     cplx(std::cos(th / 2) * std::cosh(tau / 2), std::sin(th / 2) * std::sinh(tau / 2))) <
            1e-14);
    }
  CHECK_THROWS_AS(zfun(H(1), H(3), H(1), 0.2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(zfun(H(2), H(1), H(0), 0.2, 0.0), InvalidArgument);
}

TEST_CASE("tau = 0 reduces to the Wigner small-d function") {
  for (int l2 = 0; l2 <= 6; ++l2) {
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
      const double th = kPi * (k + 0.5) / 200;
      for (HalfInt m : projections(H(l2)))
        for (HalfInt n : projections(H(l2))) {
          const cplx expect = ipow(m.minus_int(n)) * oracle::wigner_d(H(l2), n, m, th);
          worst = std::max(worst, std::abs(zfun(H(l2), m, n, th, 0.0) - expect));
        }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Z matrix equals exp(i theta_c J_x) at complex angle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> th(0, kPi), tau(-2, 2);
  for (int l2 = 0; l2 <= 6; ++l2)
    for (int k = 0; k < 10; ++k) {
      const double t = th(rng), u = tau(rng);
      const CMatrix ref = oracle::zmatrix_expm(H(l2), t, u);
      CHECK(oracle::max_abs(zmatrix(H(l2), t, u) - ref) < 1e-11 * std::max(1.0, oracle::max_abs(ref)));
    }
}

TEST_CASE("index symmetry and the coordinate endpoints") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> th(0, kPi), tau(-2, 2);
  for (int l2 = 0; l2 <= 6; ++l2) {
    const double t = th(rng), u = tau(rng);
    const CMatrix z = zmatrix(H(l2), t, u);
    CHECK(oracle::max_abs(z - z.transpose()) < 1e-10);
    for (double end : {0.0, kPi}) {
      const CMatrix ze = zmatrix(H(l2), end, u);
      CHECK(ze.allFinite());
      CHECK(oracle::max_abs(ze - oracle::zmatrix_expm(H(l2), end, u)) < 1e-10 * std::cosh(u) * 10);
    }
  }
  // Identity group element.
  CHECK(oracle::max_abs(zmatrix(H(4), 0.0, 0.0) - CMatrix::Identity(5, 5)) < 1e-15);
}

TEST_CASE("analytic derivatives") {
  CHECK(dz(H(0), H(0), H(0), 0.4, 0.3, Deriv::Theta) == cplx(0.0, 0.0));
  for (double th : {0.2, 1.3}) {
    for (double tau : {-0.7, 0.5}) {
      const cplx w(th, -tau);
      // d/dtau cos((theta - i tau)/2) = (i/2) sin(theta_c/2)
      CHECK(std::abs(dz(H(1), H(-1), H(-1), th, tau, Deriv::Tau) - 0.5 * kI * std::sin(w / 2.0)) < 1e-14);
      CHECK(std::abs(dz(H(1), H(-1), H(-1), th, tau, Deriv::Theta) + 0.5 * std::sin(w / 2.0)) < 1e-14);
    }
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.1, kPi - 0.1), tau(-1.5, 1.5);
  for (int l2 = 0; l2 <= 4; ++l2)
    for (int k = 0; k < 6; ++k) {
      const double t = th(rng), u = tau(rng);
      for (HalfInt m : projections(H(l2)))
        for (HalfInt n : projections(H(l2))) {
          const double ht = 1e-6 * std::max(1.0, std::abs(t)), hu = 1e-6 * std::max(1.0, std::abs(u));
          const cplx fdt = (zfun(H(l2), m, n, t + ht, u) - zfun(H(l2), m, n, t - ht, u)) / (2 * ht);
          const cplx fdu = (zfun(H(l2), m, n, t, u + hu) - zfun(H(l2), m, n, t, u - hu)) / (2 * hu);
          const cplx at = dz(H(l2), m, n, t, u, Deriv::Theta), au = dz(H(l2), m, n, t, u, Deriv::Tau);
          const double scale = std::max(1.0, std::abs(zfun(H(l2), m, n, t, u)));
          CHECK(std::abs(at - fdt) < 1e-6 * scale);
          CHECK(std::abs(au - fdu) < 1e-6 * scale);
          const cplx fdtt = (dz(H(l2), m, n, t + ht, u, Deriv::Theta) - dz(H(l2), m, n, t - ht, u, Deriv::Theta)) / (2 * ht);
          const cplx fdtu = (dz(H(l2), m, n, t, u + hu, Deriv::Theta) - dz(H(l2), m, n, t, u - hu, Deriv::Theta)) / (2 * hu);
          const cplx fduu = (dz(H(l2), m, n, t, u + hu, Deriv::Tau) - dz(H(l2), m, n, t, u - hu, Deriv::Tau)) / (2 * hu);
          CHECK(std::abs(dz(H(l2), m, n, t, u, Deriv::ThetaTheta) - fdtt) < 1e-6 * scale);
          CHECK(std::abs(dz(H(l2), m, n, t, u, Deriv::ThetaTau) - fdtu) < 1e-6 * scale);
          CHECK(std::abs(dz(H(l2), m, n, t, u, Deriv::TauTau) - fduu) < 1e-6 * scale);
        }
    }
}

TEST_CASE("generalized matrix elements") {
  std::mt19937_64 rng(4);
  const auto g = random_element(rng);
  CHECK(std::abs(mfun({H(0), H(0)}, H(0), H(0), H(0), H(0), g) - 1.0) < 1e-15);
  const GroupElement id{};
  const RepLabel rep{H(2), H(1)};
  for (HalfInt m : projections(rep.l))
    for (HalfInt n : projections(rep.l))
      for (HalfInt md : projections(rep.ldot))
        for (HalfInt nd : projections(rep.ldot))
          CHECK(std::abs(mfun(rep, m, n, md, nd, id) - ((m == n && md == nd) ? 1.0 : 0.0)) < 1e-15);

  const auto h = make_group_element(0.7, 0.4, 1.1, -0.6, 0, 0);
  const cplx w = h.theta_c();
  const cplx expect = std::exp(0.4) * std::cos(w / 2.0) * std::cos(std::conj(w) / 2.0);
  CHECK(std::abs(mfun({H(1), H(1)}, H(-1), H(-1), H(-1), H(-1), h) - expect) < 1e-14);
}

TEST_CASE("representation matrices") {
  CHECK(oracle::max_abs(rep_matrix({H(1), H(1)}, GroupElement{}) - CMatrix::Identity(4, 4)) < 1e-15);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto g = random_element(rng);
    CHECK(oracle::max_abs(rep_matrix({H(1), H(0)}, g) - CMatrix(to_matrix(g))) < 1e-13 * std::cosh(3.0));
  }
}

TEST_CASE("printed tensor representation matrices") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> th(0, kPi), ph(0, 2 * kPi), im(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const double p = ph(rng), e = im(rng), t = th(rng), u = im(rng);
    const auto g = make_group_element(p, e, t, u, 0, 0);
    const CMatrix a = rep_matrix({H(1), H(1)}, g).transpose();
    const CMatrix b = rep_matrix({H(2), H(1)}, g).transpose();
    CHECK(oracle::max_abs(a - printed::t_half_half(p, e, t, u)) < 1e-10);
    CHECK(oracle::max_abs(b - printed::t_one_half(p, e, t, u)) < 1e-10);
  }
}

TEST_CASE("homomorphism") {
  std::mt19937_64 rng(7);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) {
      const RepLabel rep{H(a), H(b)};
      double worst = 0;
      for (int k = 0; k < 100; ++k) {
        const auto g1 = random_element(rng, 0.7), g2 = random_element(rng, 0.7);
        const CMatrix lhs = rep_matrix(rep, compose(g1, g2));
        const CMatrix rhs = rep_matrix(rep, g1) * rep_matrix(rep, g2);
        worst = std::max(worst, oracle::max_abs(lhs - rhs) / std::max(1.0, oracle::max_abs(rhs)));
      }
      CHECK(worst < 1e-9);
    }
}

TEST_CASE("rep_matrix_derivative against finite differences") {
  std::mt19937_64 rng(8);
  const RepLabel rep{H(3), H(2)};
  const auto g = random_element(rng);
  const double h = 1e-6;
  const Param params[] = {Param::Phi, Param::EpsPhi, Param::Theta, Param::Tau, Param::Psi, Param::EpsPsi};
  for (int p = 0; p < 6; ++p) {
    auto shifted = [&](double d) {
      GroupElement s = g;
      double* f[] = {&s.phi, &s.eps_phi, &s.theta, &s.tau, &s.psi, &s.eps_psi};
      *f[p] += d;
      return rep_matrix(rep, s);
    };
    const CMatrix fd = (shifted(h) - shifted(-h)) / (2 * h);
    const CMatrix an = rep_matrix_derivative(rep, g, params[p]);
    CHECK(oracle::max_abs(fd - an) < 1e-6 * std::max(1.0, oracle::max_abs(an)));
  }
}

TEST_CASE("complex Legendre equations") {
  const auto r0 = legendre_residual(H(0), H(0), H(0), H(0), H(0), H(0), 0.7, 0.2);
  CHECK(r0.res1 == 0.0);
  CHECK(r0.res2 == 0.0);
  double worst = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double t = 0.1 + (kPi - 0.2) * i / 19, u = -1.5 + 3.0 * j / 19;
      for (int m : {-1, 1})
        for (int n : {-1, 1})
          for (int md : {-1, 1})
            for (int nd : {-1, 1}) {
              const auto r = legendre_residual(H(1), H(1), H(m), H(n), H(md), H(nd), t, u);
              worst = std::max({worst, r.res1, r.res2});
            }
    }
  CHECK(worst < 1e-8);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> th(0.2, kPi - 0.2), tau(-1, 1);
  for (int k = 0; k < 20; ++k) {
    const auto r = legendre_residual(H(4), H(2), H(2 * (k % 5) - 4), H(0), H(k % 2 ? 2 : 0), H(-2),
                                     th(rng), tau(rng));
    CHECK(r.res1 < 1e-7);
    CHECK(r.res2 < 1e-7);
  }
  CHECK_THROWS_AS(legendre_residual(H(1), H(1), H(1), H(1), H(1), H(1), 0.0, 0.0), SingularPoint);
}

TEST_CASE("recurrences: lowest-weight annihilation in the printed form") {
  for (double t : {0.4, 1.9})
    for (double u : {-0.8, 0.6})
      CHECK(recurrence_residual(1, H(2), H(1), H(-2), H(0), H(1), H(-1), t, u) < 1e-8);
  CHECK_THROWS_AS(recurrence_residual(9, H(1), H(1), H(1), H(1), H(1), H(1), 0.3, 0.1), InvalidArgument);
}

TEST_CASE("recurrences: corrected forms hold for all indices") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> th(0.2, kPi - 0.2), tau(-1.2, 1.2);
  for (int kind = 1; kind <= 8; ++kind) {
    double worst = 0;
    for (int l2 = 0; l2 <= 4; ++l2)
      for (int ld2 = 0; ld2 <= 4; ++ld2)
        for (int s = 0; s < 3; ++s) {
          const double t = th(rng), u = tau(rng);
          for (HalfInt m : projections(H(l2)))
            for (HalfInt n : projections(H(l2)))
              for (HalfInt md : projections(H(ld2)))
                for (HalfInt nd : projections(H(ld2)))
                  worst = std::max(worst, recurrence_residual(kind, H(l2), H(ld2), m, n, md, nd, t, u,
                                                              RecurrenceForm::Corrected));
        }
    CHECK_MESSAGE(worst < 1e-8, "kind " << kind << " residual " << worst);
  }
}

TEST_CASE("Laplace-Beltrami eigen-relation") {
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int l2 = 0; l2 <= 4; ++l2)
    for (int ld2 = 0; ld2 <= 4; ++ld2) {
      const RepLabel rep{H(l2), H(ld2)};
      for (int k = 0; k < 3; ++k) {
        const auto g = random_element(rng);
        for (HalfInt m : projections(rep.l))
          for (HalfInt n : projections(rep.l))
            for (HalfInt md : projections(rep.ldot))
              for (HalfInt nd : projections(rep.ldot)) {
                const auto r = eigen_residual(rep, m, n, md, nd, g);
                const double scale = std::max(1.0, std::abs(mfun(rep, m, n, md, nd, g)));
                worst = std::max({worst, r.res1 / scale, r.res2 / scale});
              }
      }
    }
  CHECK(worst < 1e-7);
}
