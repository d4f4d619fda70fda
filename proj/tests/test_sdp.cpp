#include <cmath>

#include "catdec/sdp.hpp"
#include "doctest.h"

using namespace catdec;
using namespace catdec::sdp;

TEST_CASE("minimize trace above a fixed state") {
  auto rho = sample_density(3, 2, 5);
  Model m;
  Expr x = m.hermitian(3);
  m.psd(x - rho.matrix());
  m.minimize(trace(x));
  auto s = m.solve();
  REQUIRE(s.optimal());
  CHECK(s.primal_value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(s.primal_value - s.dual_value) <= 1e-7);
  CHECK((s.value(x) - rho.matrix()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("largest lambda below a state is its minimum eigenvalue") {
  auto rho = sample_density(4, 4, 6);
  Model m;
  Expr l = m.real_scalar();
  m.psd(rho.matrix() - kron(Matrix::Identity(4, 4), l));
  m.maximize(l);
  auto s = m.solve();
  REQUIRE(s.optimal());
  CHECK(s.primal_value ==
        doctest::Approx(clamped_spectrum(rho.matrix()).minCoeff()).epsilon(1e-6));
}

TEST_CASE("max-relative entropy feasibility program") {
  // minimize t with t * tau >= |0><0|; the optimum is t = 2.
  Model m;
  Expr t = m.real_scalar();
  Matrix tau = Matrix::Identity(2, 2) / 2.0;
  Matrix zero = Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  m.psd(kron(tau, t) - zero);
  m.minimize(t);
  auto s = m.solve();
  REQUIRE(s.optimal());
  CHECK(s.primal_value == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(std::log2(s.primal_value) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equality constraints and complex variables") {
  // Fidelity of two states as max Re Tr Y with [[rho, Y], [Y^dagger, sigma]] >= 0.
  auto rho = sample_density(3, 3, 10).matrix();
  auto sigma = sample_density(3, 3, 11).matrix();
  Model m;
  Expr y = m.complex_matrix(3, 3);
  m.psd(blocks({{Expr::constant(rho), y}, {adjoint(y), Expr::constant(sigma)}}));
  m.maximize(0.5 * (trace(y) + trace(adjoint(y))));
  auto s = m.solve();
  REQUIRE(s.optimal());
  Eigen::BDCSVD<Matrix> svd(psd_sqrt(rho) * psd_sqrt(sigma));
  CHECK(s.primal_value ==
        doctest::Approx(svd.singularValues().sum()).epsilon(1e-6));

  // Minimize <H, X> over density matrices: minimum eigenvalue of H.
  Matrix h = sample_density(3, 3, 12).matrix() - 0.2 * Matrix::Identity(3, 3);
  Model m2;
  Expr x = m2.hermitian(3);
  m2.psd(x);
  m2.equal(trace(x), 1.0);
  m2.minimize(inner(h, x));
  auto s2 = m2.solve();
  REQUIRE(s2.optimal());
  CHECK(s2.primal_value ==
        doctest::Approx(clamped_spectrum(h).minCoeff()).epsilon(1e-6));
}

TEST_CASE("grid oracle on 2x2 single-variable problems") {
  // minimize t subject to [[t + a, b], [b, 1 - t]] >= 0 with t in [−a, 1].
  for (int k = 0; k < 5; ++k) {
    const double a = 0.1 * k, b = 0.2 + 0.05 * k;
    Model m;
    Expr t = m.real_scalar();
    Matrix c(2, 2);
    c << a, b, b, 1.0;
    Matrix g(2, 2);
    g << 1, 0, 0, -1;
    m.psd(Expr::constant(c) + kron(g, t));
    m.minimize(t);
    auto s = m.solve();
    REQUIRE(s.optimal());
    double best = 1e9;
    for (int i = 0; i <= 2000000; ++i) {
      const double tv = -a + i * (1.0 + a) / 2000000.0;
      if ((tv + a) * (1 - tv) - b * b >= 0 && tv + a >= 0) {
        best = tv;
        break;
      }
    }
    CHECK(std::abs(s.primal_value - best) <= 1e-4);
  }
}

TEST_CASE("infeasible problems are reported") {
  Model m;
  Expr x = m.hermitian(2);
  m.psd(x);
  m.equal(trace(x), -1.0);
  m.minimize(trace(x));
  auto s = m.solve();
  CHECK(s.status == Status::infeasible);
}

TEST_CASE("solutions are reproducible and capacity is enforced") {
  auto rho = sample_density(3, 3, 7).matrix();
  auto run = [&] {
    Model m;
    Expr x = m.hermitian(3);
    m.psd(x - rho);
    m.minimize(trace(x));
    return m.solve();
  };
  auto a = run(), b = run();
  CHECK(a.y == b.y);
  Model big;
  big.hermitian(300);
  CHECK_THROWS_AS(big.hermitian(300), CapacityError);
}

TEST_CASE("problems without a strictly feasible point still return accurate values") {
  // A singular constant block leaves no interior; the best iterate is kept.
  auto rho = sample_density(3, 3, 10).matrix();
  auto sigma = sample_density(3, 2, 11).matrix();
  Model m;
  Expr y = m.complex_matrix(3, 3);
  m.psd(blocks({{Expr::constant(rho), y}, {adjoint(y), Expr::constant(sigma)}}));
  m.maximize(0.5 * (trace(y) + trace(adjoint(y))));
  auto s = m.solve();
  Eigen::BDCSVD<Matrix> svd(psd_sqrt(rho) * psd_sqrt(sigma));
  CHECK(std::abs(s.primal_value - svd.singularValues().sum()) < 1e-6);
  CHECK(s.status != Status::infeasible);
}
