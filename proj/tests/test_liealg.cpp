#include "doctest.h"

#include "rwekit/liealg.hpp"
#include "support/oracles.hpp"

using namespace rwekit;

namespace {

CMatrix mat2(cplx a, cplx b, cplx c, cplx d) { return (CMatrix(2, 2) << a, b, c, d).finished(); }

CMatrix mat3(std::initializer_list<cplx> v) {
  CMatrix m(3, 3);
  auto it = v.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

}  // namespace

TEST_CASE("alpha") {
  CHECK(alpha(1_h, 1_h) == 1.0);
  CHECK(alpha(3_h, HalfInt::from_twice(-3)) == 0.0);
  CHECK(alpha(HalfInt::integer(1), HalfInt::integer(0)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(alpha(HalfInt::integer(1), HalfInt::integer(2)) == 0.0);
  CHECK_THROWS_AS(alpha(1_h, 5_h), InvalidArgument);
  CHECK_THROWS_AS(alpha(HalfInt::integer(1), 1_h), InvalidArgument);
}

TEST_CASE("printed spin-1/2 and spin-1 generators") {
  const SpinOperatorSet h = tensor_operators({1_h, 0_h});
  const double q = 0.5;
  CHECK(max_abs(h.A[0] - (-kI * q) * mat2(0, 1, 1, 0)) < 1e-15);
  CHECK(max_abs(h.A[1] - q * mat2(0, 1, -1, 0)) < 1e-15);
  CHECK(max_abs(h.A[2] - q * mat2(kI, 0, 0, -kI)) < 1e-15);
  CHECK(max_abs(h.B[0] - (-q) * mat2(0, 1, 1, 0)) < 1e-15);
  CHECK(max_abs(h.B[1] - q * mat2(0, -kI, kI, 0)) < 1e-15);
  CHECK(max_abs(h.B[2] - q * mat2(1, 0, 0, -1)) < 1e-15);

  // Dotted partner (0,1/2) carries the tilde table.
  const SpinOperatorSet hd = tensor_operators({0_h, 1_h});
  CHECK(max_abs(hd.A[0] - (-kI * q) * mat2(0, 1, 1, 0)) < 1e-15);
  CHECK(max_abs(hd.B[0] - q * mat2(0, 1, 1, 0)) < 1e-15);
  CHECK(max_abs(hd.B[1] - q * mat2(0, kI, -kI, 0)) < 1e-15);
  CHECK(max_abs(hd.B[2] - q * mat2(-1, 0, 0, 1)) < 1e-15);

  const SpinOperatorSet one = tensor_operators({2_h, 0_h});
  const double r = 1 / std::sqrt(2.0);
  CHECK(max_abs(one.A[0] - (-kI * r) * mat3({0, 1, 0, 1, 0, 1, 0, 1, 0})) < 1e-15);
  CHECK(max_abs(one.A[1] - r * mat3({0, 1, 0, -1, 0, 1, 0, -1, 0})) < 1e-15);
  CHECK(max_abs(one.A[2] - mat3({kI, 0, 0, 0, 0, 0, 0, 0, -kI})) < 1e-15);
  CHECK(max_abs(one.B[0] - (-r) * mat3({0, 1, 0, 1, 0, 1, 0, 1, 0})) < 1e-15);
  CHECK(max_abs(one.B[1] - r * mat3({0, -kI, 0, kI, 0, -kI, 0, kI, 0})) < 1e-15);
  CHECK(max_abs(one.B[2] - mat3({1, 0, 0, 0, 0, 0, 0, 0, -1})) < 1e-15);

  CHECK(max_abs(chiral_A(1_h)[2] - h.A[2]) == 0.0);
  CHECK(max_abs(chiral_B(2_h)[1] - one.B[1]) == 0.0);
}

TEST_CASE("chirality relations") {
  for (int t = 1; t <= 4; ++t) {
    const auto u = tensor_operators({HalfInt::from_twice(t), 0_h});
    const auto d = tensor_operators({0_h, HalfInt::from_twice(t)});
    for (int i = 0; i < 3; ++i) {
      CHECK(max_abs(u.B[i] + kI * u.A[i]) < 1e-15);
      CHECK(max_abs(d.B[i] - kI * d.A[i]) < 1e-15);
    }
  }
}

TEST_CASE("A3 is diagonal with -i(m + mdot)") {
  const RepLabel rep{3_h, 2_h};
  const auto s = tensor_operators(rep);
  for (HalfInt m : projections(rep.l))
    for (HalfInt md : projections(rep.ldot)) {
      const int c = rep.index(m, md);
      CHECK(std::abs(s.A[2](c, c) - (-kI) * (m.value() + md.value())) < 1e-15);
    }
}

TEST_CASE("ladder actions") {
  CHECK(ladder_action_check(tensor_operators({1_h, 1_h})) < 1e-14);
  CHECK(ladder_action_check(tensor_operators({3_h, 2_h})) < 1e-13);
  const auto s = tensor_operators({0_h, 0_h});
  CHECK(max_abs(s.X3) == 0.0);
}

TEST_CASE("commutation relations for all small reps") {
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b) {
      const auto s = tensor_operators({HalfInt::from_twice(a), HalfInt::from_twice(b)});
      double worst = 0;
      for (const auto& r : commutator_check(s)) worst = std::max(worst, r.residual);
      CHECK(worst < 1e-12);
    }
  double cross = 0;
  for (const auto& r : commutator_check(tensor_operators({2_h, 1_h})))
    if (r.name.find(",Y") != std::string::npos) cross = std::max(cross, r.residual);
  CHECK(cross < 1e-14);
}

TEST_CASE("spin matrices agree with an exponential oracle") {
  // exp(i pi J_z) is diagonal with phases exp(i pi m).
  const auto j = spin_matrices(3_h);
  const CMatrix e = oracle::expm(kI * kPi * j[2]);
  const auto ms = projections(3_h);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(e(i, i) - std::exp(kI * kPi * ms[i].value())) < 1e-13);
  // [Jx, Jy] = i Jz
  CHECK(max_abs(commutator(j[0], j[1]) - kI * j[2]) < 1e-14);
}

TEST_CASE("Casimir matrices") {
  auto id = [](int d) { return CMatrix::Identity(d, d); };
  const auto c1 = casimir_matrices(tensor_operators({1_h, 0_h}));
  CHECK(max_abs(c1.X2 - 0.75 * id(2)) < 1e-15);
  const auto c2 = casimir_matrices(tensor_operators({0_h, 3_h}));
  CHECK(max_abs(c2.X2) < 1e-15);
  const auto c3 = casimir_matrices(tensor_operators({2_h, 1_h}));
  CHECK(max_abs(c3.X2 - 2.0 * id(6)) < 1e-14);
  CHECK(max_abs(c3.Y2 - 0.75 * id(6)) < 1e-14);
}
