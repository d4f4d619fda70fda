#include <algorithm>
#include <cmath>
#include <numeric>

#include "catdec/protocols.hpp"
#include "doctest.h"

using namespace catdec;

namespace {

DensityOperator two_qubit(std::uint64_t seed, std::size_t rank = 4) {
  return DensityOperator(sample_density(4, rank, seed).matrix(),
                         SystemPartition{{"A", 2}, {"E", 2}});
}

DensityOperator classically_correlated(double p) {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = p;
  m(3, 3) = 1 - p;
  return DensityOperator(m, SystemPartition{{"A", 2}, {"E", 2}});
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix swap2() {
  Matrix s = Matrix::Zero(4, 4);
  s(0, 0) = s(3, 3) = s(1, 2) = s(2, 1) = 1;
  return s;
}

}  // namespace

TEST_CASE("convex split state") {
  const auto rho = two_qubit(3);
  const auto sigma = sample_density(2, 2, 4, "E");

  SUBCASE("n = 1 is the input") {
    const auto t = convex_split_state(rho, "E", sigma, 1);
    CHECK(max_abs(t.matrix() - rho.matrix()) < 1e-15);
  }
  SUBCASE("n = 2 against the explicit swap construction") {
    const Matrix base = kron(rho.matrix(), sigma.matrix());
    const Matrix p = kron(Matrix::Identity(2, 2), swap2());
    const Matrix expect = 0.5 * (base + p * base * p);
    CHECK(max_abs(convex_split_state(rho, "E", sigma, 2).matrix() - expect) < 1e-15);
  }
  SUBCASE("marginal on the untouched factor is exact") {
    for (std::size_t n : {1, 2, 3, 5}) {
      const auto t = convex_split_state(rho, "E", sigma, n);
      CHECK(max_abs(marginal(t, {"A"}).matrix() - marginal(rho, {"A"}).matrix()) < 1e-12);
    }
  }
  SUBCASE("Phi_2 with a maximally mixed catalyst") {
    const auto phi = maximally_entangled(2, "A", "E").density();
    const auto tau = maximally_mixed(2, "E");
    CHECK(convex_split_error(phi, "E", tau, 1) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
    double prev = 1.0;
    for (std::size_t n : {1, 2, 4, 8}) {
      const double e = convex_split_error(phi, "E", tau, n);
      CHECK(e < prev);
      prev = e;
    }
  }
  SUBCASE("capacity") {
    CHECK_THROWS_AS(convex_split_state(rho, "E", sigma, 12), CapacityError);
  }
}

TEST_CASE("block evaluation agrees with the dense state") {
  const auto phi = maximally_entangled(2, "A", "E").density();
  const auto tau = maximally_mixed(2, "E");
  for (std::size_t n = 1; n <= 7; ++n)
    CHECK(convex_split_error_blocks(phi, "E", tau, n) ==
          doctest::Approx(convex_split_error_dense(phi, "E", tau, n)).epsilon(1e-9));
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto rho = two_qubit(100 + s, 3);
    const auto sigma = sample_density(2, 2, 200 + s, "E");
    const auto pure = basis_state(2, 1, "E");
    for (std::size_t n : {1, 2, 3, 6}) {
      CHECK(std::abs(convex_split_error_blocks(rho, "E", sigma, n) -
                     convex_split_error_dense(rho, "E", sigma, n)) < 1e-9);
      CHECK(std::abs(convex_split_error_blocks(rho, "E", pure, n) -
                     convex_split_error_dense(rho, "E", pure, n)) < 1e-9);
    }
  }
  CHECK_THROWS_AS(convex_split_error_blocks(DensityOperator(sample_density(6, 6, 1).matrix(),
                                                            SystemPartition{{"A", 2}, {"E", 3}}),
                                            "E", maximally_mixed(3, "E"), 2),
                  DimensionError);
}

TEST_CASE("convex split parameters") {
  CHECK(convex_split_params(0.1, 0.05) == 1.0);
  const double expect = std::ceil(8.0 * 2.0 * std::log2(10.0) / 1e-3);
  CHECK(expect == 53151.0);
  CHECK(convex_split_params(1.0, 0.1) == expect);
  double prev_k = 0;
  for (double k = 0.0; k <= 4.0; k += 0.25) {
    const double n = convex_split_params(k, 0.1);
    CHECK(n >= prev_k);
    prev_k = n;
    double prev_d = INFINITY;
    for (double d = 0.02; d < 1.0 / 6.0; d += 0.02) {
      const double nd = convex_split_params(k, d);
      CHECK(nd <= prev_d);
      prev_d = nd;
    }
  }
  CHECK_THROWS(convex_split_params(1.0, 0.2));
  CHECK_THROWS(convex_split_params(1.0, 0.0));
}

TEST_CASE("catalytic decoupling by convex split") {
  SUBCASE("product input needs no catalyst") {
    const auto rho = tensor(sample_density(2, 2, 5, "A"), sample_density(2, 2, 6, "E"));
    const auto t = catalytic_decouple_cs(rho, "A", "E", 0.0, 0.1);
    CHECK(t.used_n == 1);
    CHECK(t.remainder_bits == 0.0);
    CHECK(t.achieved_error <= 0.1);
  }
  SUBCASE("Phi_2 at n = 4 matches the convex split state") {
    const auto phi = maximally_entangled(2, "A", "E").density();
    CatalyticOptions o;
    o.n_override = 4;
    const auto t = catalytic_decouple_cs(phi, "A", "E", 0.0, 0.1, o);
    CHECK(t.remainder_bits == 1.0);
    REQUIRE(t.catalyst);
    CHECK(t.catalyst->m == 2);
    CHECK(max_abs(t.catalyst->sigma.matrix() - Matrix::Identity(2, 2) / 2.0) < 1e-6);
    CHECK(t.metrics.count("simulated_pd") == 1);
    CHECK(std::abs(t.achieved_error -
                   convex_split_error(phi, "A", t.catalyst->sigma, 4)) < 1e-9);
    CHECK(t.has_flag("prescribed_n_infeasible"));
  }
  SUBCASE("classically correlated sweep") {
    const auto rho = classically_correlated(0.5);
    double prev = 1.0;
    for (std::size_t n : {1, 2, 4, 8, 16}) {
      CatalyticOptions o;
      o.n_override = n;
      const auto t = catalytic_decouple_cs(rho, "A", "E", 0.0, 0.1, o);
      CHECK(t.achieved_error < prev);
      prev = t.achieved_error;
      if (t.metrics.count("a1_marginal_deviation")) {
        CHECK(t.metrics.at("a1_marginal_deviation") < 1e-9);
        CHECK(t.metrics.at("e_marginal_deviation") < 1e-9);
      }
    }
  }
  SUBCASE("lemma orientation puts the copies on E") {
    const auto rho = two_qubit(8);
    CatalyticOptions o;
    o.n_override = 3;
    o.side = CatalystSide::e;
    const auto t = catalytic_decouple_cs(rho, "A", "E", 0.0, 0.1, o);
    CHECK(t.has_flag("lemma_orientation"));
    CHECK(t.achieved_error ==
          doctest::Approx(convex_split_error(rho, "E", t.catalyst->sigma, 3)).epsilon(1e-12));
  }
  SUBCASE("infeasible prescribed n without override") {
    const auto phi = maximally_entangled(2, "A", "E").density();
    CHECK_THROWS_AS(catalytic_decouple_cs(phi, "A", "E", 0.0, 0.1), CapacityError);
  }
}

TEST_CASE("standard decoupling") {
  const Matrix id2 = Matrix::Identity(2, 2);
  SUBCASE("product input with trivial remainder") {
    const auto rho = tensor(sample_density(2, 2, 1, "A"), sample_density(2, 2, 2, "E"));
    StandardDecoupleOptions o;
    o.unitary = UnitaryOperator(id2, SystemPartition{{"A", 2}});
    const auto t = standard_decouple(rho, {"A"}, {}, o);
    CHECK(t.achieved_error < 1e-7);
    CHECK(t.remainder_bits == 0.0);
  }
  SUBCASE("Phi_2") {
    const auto phi = maximally_entangled(2, "A", "E").density();
    StandardDecoupleOptions o;
    o.unitary = UnitaryOperator(id2, SystemPartition{{"A", 2}});
    const auto all = standard_decouple(phi, {}, {"A"}, o);
    CHECK(all.achieved_error == 0.0);
    CHECK(all.remainder_bits == 1.0);
    const auto none = standard_decouple(phi, {"A"}, {}, o);
    CHECK(none.metrics.at("marginal_product_pd") == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    CHECK(none.metrics.at("randomized_pd") == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    // Best product state overlap with Phi_2 is 1/2.
    CHECK(none.achieved_error == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  }
  SUBCASE("two maximally entangled qubits, one traced") {
    const auto psi = maximally_entangled(4, "A", "E").density();
    const DensityOperator rho(psi.matrix(), SystemPartition{{"A1", 2}, {"A2", 2}, {"E", 4}});
    StandardDecoupleOptions o;
    o.trials = 200;
    o.seed = 11;
    o.product.restarts = 4;
    const auto t = standard_decouple(rho, {"A1"}, {"A2"}, o);
    CHECK(t.metrics.at("mean_pd") > 0.2);
    CHECK(t.achieved_error <= t.metrics.at("mean_pd") + 1e-12);
  }
  SUBCASE("invalid split") {
    const auto rho = two_qubit(1);
    CHECK_THROWS_AS(standard_decouple(rho, {"A"}, {"A"}), LabelError);
    CHECK_THROWS_AS(standard_decouple(rho, {"Z"}, {}), LabelError);
  }
}

TEST_CASE("Pauli erasure") {
  CHECK(pauli_erasure_channel(1).kraus().size() == 4);
  CHECK(pauli_erasure_channel(2).kraus().size() == 16);
  CHECK_THROWS(pauli_erasure_channel(0));
  const Matrix tau = Matrix::Identity(2, 2) / 2.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto q = sample_density(2, 1 + s % 2, s, "A");
    const auto out = apply_channel(pauli_erasure_channel(1), q, std::vector<std::string>{"A"});
    CHECK(max_abs(out.matrix() - tau) < 1e-15);
    const auto rho = two_qubit(40 + s);
    const auto er = apply_channel(pauli_erasure_channel(1), rho, std::vector<std::string>{"A"});
    const Matrix expect = kron(tau, marginal(rho, {"E"}).matrix());
    CHECK(max_abs(er.matrix() - expect) < 1e-15);
  }
}

TEST_CASE("erasure and decoupling conversions") {
  const auto phi = maximally_entangled(2, "A", "E").density();
  StandardDecoupleOptions o;
  o.unitary = UnitaryOperator(Matrix::Identity(2, 2), SystemPartition{{"A", 2}});

  SUBCASE("trivial remainder") {
    const auto t = standard_decouple(phi, {"A"}, {}, o);
    const auto e = erasure_from_decoupling(t);
    CHECK(e.N == 1);
    const auto back = decoupling_from_erasure(phi, {"A"}, e.unitaries);
    CHECK(back.remainder_bits == 0.0);
  }
  SUBCASE("Phi_2 with the whole system as remainder") {
    const auto t = standard_decouple(phi, {}, {"A"}, o);
    const auto e = erasure_from_decoupling(t);
    CHECK(e.N == 4);
    CHECK(e.error < 1e-12);
    const auto back = decoupling_from_erasure(phi, {"A"}, e.unitaries);
    CHECK(back.remainder_bits == 1.0);
    CHECK(back.achieved_error < 1e-7);
    CHECK(std::abs(back.achieved_error - back.metrics.at("erasure_channel_pd")) < 1e-6);
  }
  SUBCASE("random inputs") {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const DensityOperator rho(sample_density(8, 8, 60 + s).matrix(),
                                SystemPartition{{"A1", 2}, {"A2", 2}, {"E", 2}});
      StandardDecoupleOptions h;
      h.trials = 4;
      h.seed = s;
      const auto t = standard_decouple(rho, {"A1"}, {"A2"}, h);
      const auto e = erasure_from_decoupling(t);
      CHECK(e.N == 4);
      CHECK(e.error <= t.achieved_error + 1e-9);
      const auto back = decoupling_from_erasure(rho, {"A1", "A2"}, e.unitaries);
      CHECK(back.remainder_bits == t.remainder_bits);
      CHECK(std::abs(back.achieved_error - back.metrics.at("erasure_channel_pd")) < 1e-6);
    }
  }
  SUBCASE("non-qubit remainder and bad counts") {
    const DensityOperator rho(sample_density(6, 6, 3).matrix(),
                              SystemPartition{{"A1", 2}, {"A2", 3}});
    StandardDecoupleOptions h;
    h.trials = 1;
    const auto t = standard_decouple(rho, {"A1"}, {"A2"}, h);
    CHECK_THROWS_AS(erasure_from_decoupling(t), DimensionError);
    std::vector<Matrix> three(3, Matrix::Identity(2, 2));
    CHECK_THROWS_AS(decoupling_from_erasure(phi, {"A"}, three), DimensionError);
  }
}

TEST_CASE("embezzling states") {
  const auto mu = embezzling_state(16);
  CHECK(mu.schmidt.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index i = 1; i < mu.schmidt.size(); ++i) CHECK(mu.schmidt(i) <= mu.schmidt(i - 1));
  REQUIRE(mu.vector);
  CHECK(mu.vector->vector().norm() == doctest::Approx(1.0).epsilon(1e-12));

  RealVector prod(1);
  prod << 1.0;
  CHECK(embezzle(mu, prod).purified_distance < 1e-12);

  RealVector phi(2);
  phi << 0.5, 0.5;
  double prev = 1.0;
  for (std::size_t n : {16, 64, 256, 1024}) {
    const double p = embezzle(embezzling_state(n), phi).purified_distance;
    CHECK(p <= prev);
    prev = p;
  }
  CHECK_THROWS_AS(embezzle(embezzling_state(1), phi), DimensionError);

  SUBCASE("sorted pairing is optimal over all pairings") {
    const auto small = embezzling_state(3);
    RealVector psi(2);
    psi << 0.7, 0.3;
    std::vector<double> src{small.schmidt(0), small.schmidt(1), small.schmidt(2), 0, 0, 0};
    std::vector<double> tgt;
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 2; ++l) tgt.push_back(small.schmidt(j) * psi(l));
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0;
    do {
      double f = 0;
      for (int i = 0; i < 6; ++i) f += std::sqrt(src[std::size_t(i)] * tgt[std::size_t(perm[std::size_t(i)])]);
      best = std::max(best, f);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(embezzle(small, psi).purified_distance ==
          doctest::Approx(std::sqrt(1 - best * best)).epsilon(1e-12));
  }
  SUBCASE("Schmidt coefficients") {
    const auto s = schmidt_coefficients(maximally_entangled(3, "A", "B"), {"A"});
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(s(i) == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("flat decomposition") {
  SUBCASE("tau_2 lands in bin 1") {
    const auto fd = flat_decomposition(Matrix::Identity(2, 2) / 2.0, 0.1);
    CHECK(fd.projectors[1].trace().real() == doctest::Approx(2.0));
    CHECK(fd.weights[1] == doctest::Approx(1.0));
  }
  SUBCASE("dyadic spectrum") {
    Matrix d = Matrix::Zero(4, 4);
    d.diagonal() << 0.5, 0.25, 0.125, 0.125;
    const auto fd = flat_decomposition(d, 0.1);
    CHECK(fd.Q == int(std::ceil(2.0 + 2.0 * std::log2(10.0) - 1.0)));
    CHECK(fd.projectors[1](0, 0).real() == doctest::Approx(1.0));
    CHECK(fd.projectors[2](1, 1).real() == doctest::Approx(1.0));
    CHECK(fd.projectors[3].trace().real() == doctest::Approx(2.0));
    CHECK(fd.weights[3] == doctest::Approx(0.25));
  }
  SUBCASE("mass accounting") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix r = sample_density(8, 8, 70 + s).matrix();
      const auto fd = flat_decomposition(r, 0.1);
      const double total = std::accumulate(fd.weights.begin(), fd.weights.end(), 0.0);
      CHECK(std::abs(total - 1.0) < 1e-12);
      CHECK(fd.tail_weight() <= 0.01);
      Matrix sum = Matrix::Zero(8, 8);
      for (std::size_t i = 0; i < fd.projectors.size(); ++i) {
        sum += fd.projectors[i];
        for (std::size_t j = i + 1; j < fd.projectors.size(); ++j)
          CHECK(max_abs(fd.projectors[i] * fd.projectors[j]) < 1e-10);
      }
      CHECK(max_abs(sum - Matrix::Identity(8, 8)) < 1e-10);
    }
  }
}

TEST_CASE("catalytic decoupling from embezzling") {
  SUBCASE("product input keeps only the block index") {
    const auto rho = tensor(basis_state(2, 0, "A"), sample_density(2, 2, 3, "E"));
    const auto t = catalytic_decouple_embezzle(rho, "A", "E", 0.1, 16);
    CHECK(t.achieved_error <= 0.1);
    CHECK(t.remainder_bits == doctest::Approx(std::log2(t.metrics.at("Q") + 2)));
  }
  SUBCASE("single flat block reduces to standard decoupling") {
    const auto phi = maximally_entangled(2, "A", "E").density();
    const Matrix m = 0.05 * phi.matrix() + 0.95 * Matrix::Identity(4, 4) / 4.0;
    const DensityOperator rho(m, SystemPartition{{"A", 2}, {"E", 2}});
    const auto t = catalytic_decouple_embezzle(rho, "A", "E", 0.1, 16);
    CHECK(t.has_flag("single_block"));
    StandardDecoupleOptions o;
    o.unitary = UnitaryOperator(Matrix::Identity(2, 2), SystemPartition{{"A", 2}});
    const auto s = standard_decouple(rho, {"A"}, {}, o);
    CHECK(std::abs(t.achieved_error - s.metrics.at("randomized_pd")) < 1e-6);
  }
  SUBCASE("error shrinks with the embezzling resource") {
    Matrix d = Matrix::Zero(4, 4);
    d.diagonal() << 0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6;
    const auto rho = tensor(DensityOperator::from_matrix(d, "A"), sample_density(2, 2, 3, "E"));
    const double e16 = catalytic_decouple_embezzle(rho, "A", "E", 0.1, 16).achieved_error;
    const double e64 = catalytic_decouple_embezzle(rho, "A", "E", 0.1, 64).achieved_error;
    CHECK(e64 < e16);
    const auto r2 = two_qubit(5);
    CHECK(catalytic_decouple_embezzle(r2, "A", "E", 0.1, 256).achieved_error <=
          catalytic_decouple_embezzle(r2, "A", "E", 0.1, 16).achieved_error + 1e-12);
  }
  SUBCASE("capacity") {
    const DensityOperator big(sample_density(16, 16, 1).matrix(),
                              SystemPartition{{"A", 16}, {"E", 1}});
    CHECK_THROWS_AS(catalytic_decouple_embezzle(big, "A", "E", 0.1, 16), CapacityError);
  }
}

TEST_CASE("state merging") {
  SUBCASE("uncorrelated A needs no communication") {
    const auto psi = tensor(PureState(Vector::Unit(2, 0), SystemPartition{{"A", 2}}),
                            maximally_entangled(2, "B", "R"));
    const auto t = merge(psi, "A", "B", "R", 0.1, 0.1, std::nullopt);
    CHECK(t.comm_qubits == 0.0);
    CHECK(t.achieved_error <= 0.1);
  }
  SUBCASE("Bell pair") {
    const auto t = merge(maximally_entangled(2, "A", "R"), "A", "", "R", 0.1, 0.1, 4);
    CHECK(t.comm_qubits == 1.0);
    CHECK(std::abs(t.achieved_error - t.metrics.at("decoupling_pd")) < 1e-6);
  }
  SUBCASE("GHZ") {
    Vector g = Vector::Zero(8);
    g(0) = g(7) = 1 / std::sqrt(2.0);
    const PureState ghz(g, SystemPartition{{"A", 2}, {"B", 2}, {"R", 2}});
    const auto t = merge(ghz, "A", "B", "R", 0.1, 0.1, 4);
    const double f = t.metrics.at("fidelity");
    const double d = t.metrics.at("decoupling_pd");
    CHECK(1 - f * f <= (d + 1e-6) * (d + 1e-6));
    CHECK(t.comm_qubits == 1.0);
  }
}

TEST_CASE("state redistribution") {
  const QsrWitness none{maximally_mixed(1, "App"), Matrix::Identity(2, 2), std::nullopt};
  SUBCASE("trivial C") {
    const auto psi = tensor(tensor(PureState(Vector::Unit(2, 0), SystemPartition{{"A", 2}}),
                                   PureState(Vector::Unit(1, 0), SystemPartition{{"C", 1}})),
                            maximally_entangled(2, "B", "R"));
    const auto t = qsr_evaluate(psi, "A", "B", "C", "R", none, 0.1, std::nullopt);
    CHECK(t.comm_qubits == 0.0);
    CHECK(t.achieved_error <= 0.1);
  }
  SUBCASE("trivial A reduces to merging") {
    const auto psi = sample_pure(SystemPartition{{"A", 1}, {"B", 2}, {"C", 2}, {"R", 2}}, 5);
    const auto q = qsr_evaluate(psi, "A", "B", "C", "R", none, 0.1, 4);
    const auto re = reorder(psi, std::vector<std::string>{"C", "B", "R", "A"});
    const PureState p3(re.vector(), SystemPartition{{"C", 2}, {"B", 2}, {"R", 2}});
    const auto m = merge(p3, "C", "B", "R", 0.1, 0.1, 4);
    CHECK(q.comm_qubits == m.comm_qubits);
    CHECK(std::abs(q.achieved_error - m.achieved_error) < 1e-6);
  }
  SUBCASE("Bell pair between C and R") {
    const auto psi = tensor(
        tensor(PureState(Vector::Unit(2, 0), SystemPartition{{"A", 2}}),
               PureState(Vector::Unit(2, 1), SystemPartition{{"B", 2}})),
        maximally_entangled(2, "C", "R"));
    const QsrWitness w{maximally_mixed(1, "App"), Matrix::Identity(4, 4), std::nullopt};
    const auto q = qsr_evaluate(psi, "A", "B", "C", "R", w, 0.2, 4);
    CHECK(q.comm_qubits == 1.0);
    CHECK(q.achieved_error <= 0.6);
    CHECK_FALSE(q.has_flag("error_exceeds_3eps"));
    CHECK_FALSE(q.has_flag("witness_marginal_violation"));
  }
}

TEST_CASE("inequality checks") {
  SUBCASE("non-locking") {
    const auto rho = two_qubit(9);
    const auto trivial = check_nonlocking(rho, {"E"}, {"A"}, {});
    CHECK(std::abs(trivial.slack) < 1e-5);
    const auto phi = maximally_entangled(2, "A", "E").density();
    const auto r = check_nonlocking(phi, {"E"}, {}, {"A"});
    CHECK(r.lhs == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(r.rhs == doctest::Approx(2.0));
    CHECK(r.pass);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const DensityOperator st(sample_density(8, 1 + s % 8, 80 + s).matrix(),
                               SystemPartition{{"A", 2}, {"B", 2}, {"E", 2}});
      CHECK(check_nonlocking(st, {"E"}, {"A"}, {"B"}).pass);
      CHECK(check_nonlocking(st, {"E"}, {"B"}, {"A"}).pass);
    }
  }
  SUBCASE("converse rejects upper bounds") {
    ProtocolTranscript t;
    t.remainder_bits = 1.0;
    EntropyValue up;
    up.value = 1.5;
    up.bound_kind = BoundKind::upper;
    CHECK_THROWS(check_converse_eq7(t, up));
    up.lower_bound = 1.2;
    const auto r = check_converse_eq7(t, up);
    CHECK(r.rhs == doctest::Approx(0.6));
    CHECK(r.pass);
    const auto phi = maximally_entangled(2, "A", "E").density();
    const auto exact = imax(phi, {"E"}, {"A"});
    CHECK(check_converse_eq7(t, exact).pass);
    t.remainder_bits = 0.5;
    CHECK_FALSE(check_converse_eq7(t, exact).pass);
  }
  SUBCASE("converse for CPTP maps") {
    const auto rho = tensor(basis_state(2, 0, "A"), sample_density(2, 2, 4, "E"));
    const QuantumChannel id({Matrix::Identity(2, 2)}, SystemPartition{{"A", 2}},
                            SystemPartition{{"B", 2}});
    const auto r = check_cptp_converse(rho, {"A"}, id, 0.1);
    CHECK(r.details.at("premise_holds") == 0.0);
    CHECK(std::find(r.flags.begin(), r.flags.end(), "premise_failed") != r.flags.end());
    CHECK(r.pass);
  }
}
