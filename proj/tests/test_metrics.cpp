#include <cmath>

#include "catdec/metrics.hpp"
#include "doctest.h"

using namespace catdec;

namespace {

// Fidelity as the largest purification overlap ||X^dagger Y||_1 with
// rho = X X^dagger and sigma = Y Y^dagger.
double oracle_fidelity(const Matrix& rho, const Matrix& sigma) {
  auto factor = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (es.eigenvalues()(i) > 1e-12) keep.push_back(i);
    Matrix x(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      x.col(k) = es.eigenvectors().col(keep[k]) *
                 std::sqrt(es.eigenvalues()(keep[k]));
    return x;
  };
  Eigen::JacobiSVD<Matrix> svd(factor(rho).adjoint() * factor(sigma));
  return svd.singularValues().sum() +
         std::sqrt(std::max(0.0, (1 - rho.trace().real()) *
                                     (1 - sigma.trace().real())));
}

Matrix bloch(double x, double y, double z) {
  Matrix m(2, 2);
  m << 1 + z, Complex(x, -y), Complex(x, y), 1 - z;
  return m / 2.0;
}

// Grid search over pairs of Bloch vectors, refined around the best point
// until the step reaches 1e-3.
double grid_min_product_pd(const Matrix& rho) {
  std::array<double, 6> best{};
  double best_f = -1;
  auto eval = [&](const std::array<double, 6>& p) {
    for (int k = 0; k < 2; ++k) {
      const double n = p[3 * k] * p[3 * k] + p[3 * k + 1] * p[3 * k + 1] +
                       p[3 * k + 2] * p[3 * k + 2];
      if (n > 1.0 + 1e-12) return -1.0;
    }
    return oracle_fidelity(rho, kron(bloch(p[0], p[1], p[2]),
                                     bloch(p[3], p[4], p[5])));
  };
  std::vector<double> g;
  for (int i = -4; i <= 4; ++i) g.push_back(i * 0.25);
  std::array<double, 6> p{};
  for (double a : g) for (double b : g) for (double cc : g) {
    if (a * a + b * b + cc * cc > 1.0 + 1e-12) continue;
    for (double d : g) for (double e : g) for (double f : g) {
      p = {a, b, cc, d, e, f};
      const double v = eval(p);
      if (v > best_f) { best_f = v; best = p; }
    }
  }
  for (double step = 0.125; step >= 1e-3; step /= 2) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int k = 0; k < 6; ++k)
        for (double s : {-step, step}) {
          auto q = best;
          q[k] += s;
          const double v = eval(q);
          if (v > best_f + 1e-15) { best_f = v; best = q; moved = true; }
        }
    }
  }
  return std::sqrt(std::max(0.0, 1 - best_f * best_f));
}

}  // namespace

TEST_CASE("fidelity examples") {
  auto rho = sample_density(4, 3, 1);
  CHECK(generalized_fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-12));
  auto psi = sample_pure(SystemPartition{{"A", 3}}, 2);
  auto phi = sample_pure(SystemPartition{{"A", 3}}, 3);
  CHECK(generalized_fidelity(psi.density(), phi.density()) ==
        doctest::Approx(std::abs(psi.vector().dot(phi.vector()))).epsilon(1e-9));
  auto bell = maximally_entangled(2, "A", "B").density();
  auto mixed = tensor(maximally_mixed(2, "A"), maximally_mixed(2, "B"));
  CHECK(generalized_fidelity(bell, mixed) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(purified_distance(bell, mixed) ==
        doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  CHECK(purified_distance(rho, rho) < 1e-6);
  CHECK(purified_distance(basis_state(2, 0, "A"), basis_state(2, 1, "A")) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(purified_distance(rho, maximally_mixed(3, "A")),
                  DimensionError);
}

TEST_CASE("fidelity matches the SVD oracle on subnormalized pairs") {
  for (int s = 0; s < 20; ++s) {
    Matrix a = sample_density(4, 1 + s % 4, 100 + s).matrix() * 0.8;
    Matrix b = sample_density(4, 1 + (s + 1) % 4, 200 + s).matrix() * 0.9;
    CHECK(generalized_fidelity(a, b) ==
          doctest::Approx(oracle_fidelity(a, b)).epsilon(1e-9));
    CHECK(generalized_fidelity(a, b) ==
          doctest::Approx(generalized_fidelity(b, a)).epsilon(1e-9));
  }
}

TEST_CASE("trace distance") {
  auto rho = sample_density(4, 4, 8);
  CHECK(trace_distance(rho, rho) < 1e-14);
  CHECK(trace_distance(basis_state(3, 0, "A"), basis_state(3, 2, "A")) ==
        doctest::Approx(1.0));
  for (int s = 0; s < 20; ++s) {
    auto a = sample_density(4, 4, 300 + s);
    auto b = sample_density(4, 2, 400 + s);
    Matrix da = clamped_spectrum(a.matrix()).cast<Complex>().asDiagonal();
    Matrix db = clamped_spectrum(b.matrix()).cast<Complex>().asDiagonal();
    CHECK(trace_distance(a, b) >= trace_distance(da, db) - 1e-12);
  }
}

TEST_CASE("distance equivalence and properties") {
  for (int s = 0; s < 50; ++s) {
    const std::size_t d = 2 + s % 5;
    auto a = sample_density(d, 1 + s % d, 500 + s);
    auto b = sample_density(d, 1 + (s * 7) % d, 600 + s);
    auto r = distance_report(a, b);
    CHECK(r.trace_dist <= r.purified + 1e-9);
    CHECK(r.purified <= std::sqrt(2 * r.trace_dist) + 1e-9);
  }
  // Small unitary perturbation.
  for (int s = 0; s < 10; ++s) {
    auto rho = sample_density(3, 3, 700 + s);
    Matrix h = sample_density(3, 3, 800 + s).matrix();
    const double eps = 1e-3 * (s + 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Vector ph(3);
    for (int i = 0; i < 3; ++i)
      ph(i) = std::exp(Complex(0, eps * es.eigenvalues()(i)));
    Matrix u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    Matrix rotated = u * rho.matrix() * u.adjoint();
    Eigen::JacobiSVD<Matrix> svd(u - Matrix::Identity(3, 3));
    CHECK(purified_distance(rotated, rho.matrix()) <=
          std::sqrt(2 * svd.singularValues()(0)) + 1e-12);
  }
  // Projecting onto the support of the second argument.
  for (int s = 0; s < 10; ++s) {
    auto rho = sample_density(4, 4, 900 + s);
    auto rp = sample_density(4, 2, 1000 + s);
    Matrix basis = support_basis(rp.matrix());
    Matrix proj = basis * basis.adjoint();
    Matrix pr = proj * rho.matrix() * proj;
    pr /= pr.trace().real();
    CHECK(purified_distance(rho.matrix(), pr) <=
          purified_distance(rho, rp) + 1e-9);
  }
  // Monotonicity under partial trace.
  for (int s = 0; s < 10; ++s) {
    auto a = tensor(sample_density(2, 2, 1100 + s, "A"),
                    sample_density(3, 3, 1200 + s, "B"));
    auto b = sample_pure(SystemPartition{{"A", 2}, {"B", 3}}, 1300 + s).density();
    Matrix mixed = 0.5 * (a.matrix() + b.matrix());
    DensityOperator c(mixed, a.partition());
    auto ra = partial_trace(a, {"B"});
    auto rc = partial_trace(c, {"B"});
    CHECK(purified_distance(ra, rc) <= purified_distance(a, c) + 1e-9);
    CHECK(trace_distance(ra, rc) <= trace_distance(a, c) + 1e-9);
    CHECK(generalized_fidelity(ra, rc) >= generalized_fidelity(a, c) - 1e-9);
  }
}

TEST_CASE("Uhlmann isometry") {
  auto rho = sample_density(3, 2, 42, "A");
  auto sigma = sample_density(3, 2, 43, "A");
  auto psi = purify(rho, "R");
  auto phi = purify(sigma, "S");
  auto w = uhlmann_isometry(psi, phi, {"A"});
  std::vector<std::string> on{"R"};
  auto moved = apply_unitary(w, psi, on);
  CHECK(moved.partition().labels() == std::vector<std::string>{"A", "S"});
  const double overlap = std::abs(phi.vector().dot(moved.vector()));
  CHECK(overlap == doctest::Approx(oracle_fidelity(rho.matrix(), sigma.matrix()))
                       .epsilon(1e-9));

  auto self = uhlmann_isometry(psi, psi, {"A"});
  CHECK(std::abs(std::abs(psi.vector().dot(apply_unitary(self, psi, on).vector())) -
                 1.0) < 1e-9);

  // Same marginal, reference rotated.
  Matrix v = haar_unitary_matrix(2, 5);
  auto rotated = apply_unitary(UnitaryOperator(v, SystemPartition{{"R", 2}}), psi,
                               on);
  auto back = uhlmann_isometry(psi, rotated, {"A"});
  CHECK(std::abs(std::abs(
            rotated.vector().dot(apply_unitary(back, psi, on).vector())) -
                 1.0) < 1e-9);

  auto big = purify(sample_density(3, 3, 44, "A"), "R");
  CHECK_THROWS_AS(uhlmann_isometry(big, phi, {"A"}), DimensionError);
}

TEST_CASE("min product distance") {
  auto prod = tensor(sample_density(2, 2, 1, "A"), sample_density(3, 2, 2, "B"));
  CHECK(min_product_distance(prod, {"A"}).distance < 1e-6);

  auto bell = maximally_entangled(2, "A", "B").density();
  auto res = min_product_distance(bell, {"A"});
  const double grid = grid_min_product_pd(bell.matrix());
  CHECK(res.distance <= grid + 1e-3);
  CHECK(res.distance >= grid - 1e-3);
  CHECK(res.distance <=
        purified_distance(bell, product_of_marginals(bell, {"A"})) + 1e-15);

  Matrix cc = Matrix::Zero(4, 4);
  cc(0, 0) = cc(3, 3) = 0.5;
  DensityOperator corr(cc, SystemPartition{{"A", 2}, {"B", 2}});
  auto rc = min_product_distance(corr, {"A"});
  CHECK(std::abs(rc.distance - grid_min_product_pd(cc)) <= 1e-3);

  auto rnd = sample_density(4, 2, 77);
  DensityOperator r2(rnd.matrix(), SystemPartition{{"A", 2}, {"B", 2}});
  auto rr = min_product_distance(r2, {"A"});
  CHECK(rr.distance <= grid_min_product_pd(r2.matrix()) + 1e-3);
  CHECK(rr.distance <=
        purified_distance(r2, product_of_marginals(r2, {"A"})) + 1e-15);
}

TEST_CASE("decoupling error of the maximally entangled state") {
  auto bell = maximally_entangled(2, "A", "E").density();
  CHECK(decoupling_error(bell, {"A"}) ==
        doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  auto prod = tensor(maximally_mixed(2, "A"), sample_density(3, 2, 1, "E"));
  CHECK(decoupling_error(prod, {"A"}) < 1e-6);
}
