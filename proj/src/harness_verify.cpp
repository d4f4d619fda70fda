#include <array>
#include <cmath>

#include "harness_internal.hpp"

namespace catdec::harness::detail {

namespace {

struct Suite {
  RunRecord& rec;
  void add(const std::string& check, const std::string& instance, const std::string& anchor,
           double lhs, double rhs, double slack, bool pass) {
    add_row(rec, Row{{"check", check},
                     {"instance", instance},
                     {"anchor", anchor},
                     {"lhs", lhs},
                     {"rhs", rhs},
                     {"slack", slack},
                     {"check_pass", pass}});
  }
  // lhs <= rhs + tol
  void leq(const std::string& check, const std::string& instance, const std::string& anchor,
           double lhs, double rhs, double tol = 0.0) {
    add(check, instance, anchor, lhs, rhs, rhs - lhs, lhs <= rhs + tol);
  }
  void close(const std::string& check, const std::string& instance, const std::string& anchor,
             double lhs, double rhs, double tol) {
    add(check, instance, anchor, lhs, rhs, tol - std::abs(lhs - rhs), std::abs(lhs - rhs) <= tol);
  }
  void report(const std::string& check, const std::string& instance, const CheckReport& r) {
    add(check, instance, r.anchor, r.lhs, r.rhs, r.slack, r.pass);
  }
};

std::string tag(const std::string& name, std::uint64_t i) { return name + "#" + std::to_string(i); }

DensityOperator on(const Matrix& m, std::vector<Factor> f) {
  return DensityOperator(m, SystemPartition(std::move(f)));
}

DensityOperator unit_sigma(const DensityOperator& rho) {
  const Matrix s = imax(rho, {"E"}, {"A"}).witness_sigma->matrix();
  return DensityOperator(s / s.trace().real(), SystemPartition{{"A", rho.partition().dim_of("A")}});
}

void distance_lemma(Suite& s, std::uint64_t seed) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t d = 2 + derive_seed(seed, 3 * i) % 7;
    const auto r1 = 1 + derive_seed(seed, 3 * i + 1) % d, r2 = 1 + derive_seed(seed, 3 * i + 2) % d;
    const Matrix a = sample_density(d, r1, derive_seed(seed, 1000 + i)).matrix();
    const Matrix b = sample_density(d, r2, derive_seed(seed, 2000 + i)).matrix();
    const double td = trace_distance(a, b), pd = purified_distance(a, b);
    s.leq("trace_le_purified", tag("pair", i), "lemma_trace_purified", td, pd, 1e-9);
    s.leq("purified_le_sqrt_2trace", tag("pair", i), "lemma_trace_purified", pd,
          std::sqrt(2 * td), 1e-9);
  }
}

void nonlocking(Suite& s, std::uint64_t seed) {
  const std::vector<std::array<const char*, 3>> roles{{"A", "B", "C"}, {"A", "C", "B"},
                                                      {"B", "A", "C"}, {"B", "C", "A"},
                                                      {"C", "A", "B"}, {"C", "B", "A"}};
  for (std::uint64_t i = 0; i < 6; ++i) {
    const std::size_t rank = 1 + derive_seed(seed, i) % 8;
    const auto rho = on(sample_density(8, rank, derive_seed(seed, 100 + i)).matrix(),
                        {{"A", 2}, {"B", 2}, {"C", 2}});
    for (const auto& [e, a1, a2] : roles)
      s.report("nonlocking", tag("state", i) + ":" + e + "|" + a1 + a2,
               check_nonlocking(rho, {e}, {a1}, {a2}));
  }
}

void convex_split(Suite& s, std::uint64_t seed) {
  const auto phi = maximally_entangled(2, "A", "E").density();
  s.close("convex_split_phi2_n1", "phi2", "lemma_convex_split",
          convex_split_error(phi, "A", maximally_mixed(2, "A"), 1), std::sqrt(3.0) / 2, 1e-9);
  std::vector<std::pair<std::string, DensityOperator>> states{{"phi2", phi}};
  for (std::uint64_t i = 0; i < 2; ++i)
    states.emplace_back(tag("random", i),
                        on(sample_density(4, 4, derive_seed(seed, 200 + i)).matrix(),
                           {{"A", 2}, {"E", 2}}));
  for (const auto& [name, rho] : states) {
    const auto sigma = unit_sigma(rho);
    const double k = imax(rho, {"E"}, {"A"}).value;
    const double prescribed = convex_split_params(k, 0.1);
    s.add("prescribed_n_infeasible", name, "lemma_convex_split", prescribed, 256.0,
          prescribed - 256.0, !convex_split_feasible(rho, "A", prescribed));
    double first = 0.0, prev = 0.0;
    for (std::size_t n : {1, 2, 4, 8, 16}) {
      const double e = convex_split_error(rho, "A", sigma, n);
      if (n == 1)
        first = e;
      else
        s.add("convex_split_decreasing", name + ":n=" + std::to_string(n), "lemma_convex_split",
              e, prev, prev - e, e < prev);
      prev = e;
    }
    s.leq("convex_split_ratio", name, "lemma_convex_split", prev, 0.55 * first);
  }
}

void catalytic(Suite& s, std::uint64_t seed) {
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto rho = on(sample_density(4, 1 + i % 4, derive_seed(seed, 300 + i)).matrix(),
                        {{"A", 2}, {"E", 2}});
    CatalyticOptions o;
    o.n_override = 1 + 2 * i;
    const auto t = catalytic_decouple_cs(rho, "A", "E", 0.0, 0.1, o);
    s.close("bell_compression_exact", tag("state", i), "thm1_bell_compression", t.achieved_error,
            convex_split_error(rho, "A", t.catalyst->sigma, *o.n_override), 1e-9);
    const auto lb = imax_lower(rho, {"E"}, {"A"}, t.achieved_error);
    s.report("converse", tag("state", i), check_converse_eq7(t, lb));
  }
}

void erasure(Suite& s, std::uint64_t seed) {
  const Matrix tau = Matrix::Identity(2, 2) / 2.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto rho = on(sample_density(4, 1 + i % 4, derive_seed(seed, 400 + i)).matrix(),
                        {{"A", 2}, {"E", 2}});
    const auto out = apply_channel(pauli_erasure_channel(1, "A"), rho, Labels{"A"});
    const Matrix target = kron(tau, marginal(rho, {"E"}).matrix());
    s.leq("pauli_twirl_exact", tag("state", i), "prop1_erasure",
          trace_distance(out.matrix(), target), 1e-12);
  }
  const auto rho = on(sample_density(8, 8, derive_seed(seed, 450)).matrix(),
                      {{"A1", 2}, {"A2", 2}, {"E", 2}});
  for (int k = 0; k <= 2; ++k) {
    Labels a1, a2;
    (k >= 1 ? a2 : a1).push_back("A2");
    (k >= 2 ? a2 : a1).push_back("A1");
    StandardDecoupleOptions o;
    o.trials = 2;
    o.seed = derive_seed(seed, 460 + std::uint64_t(k));
    const auto t = standard_decouple(rho, a1, a2, o);
    const auto e = erasure_from_decoupling(t);
    s.close("remainder_to_unitary_count", "k=" + std::to_string(k), "prop1_erasure", double(e.N),
            std::pow(4.0, k), 0.0);
    const auto back = decoupling_from_erasure(rho, {"A1", "A2"}, e.unitaries);
    s.close("unitary_count_to_remainder", "k=" + std::to_string(k), "prop1_erasure",
            back.remainder_bits, double(k), 0.0);
  }
}

void merging(Suite& s) {
  Vector g = Vector::Zero(8);
  g(0) = g(7) = 1 / std::sqrt(2.0);
  const std::vector<std::pair<std::string, PureState>> cases{
      {"bell", maximally_entangled(2, "A", "R")},
      {"ghz", PureState(g, SystemPartition{{"A", 2}, {"B", 2}, {"R", 2}})}};
  for (const auto& [name, psi] : cases) {
    const std::string b = psi.partition().contains("B") ? "B" : "";
    const auto t = merge(psi, "A", b, "R", 0.1, 0.1, 4);
    const double f = t.metrics.at("fidelity"), d = t.metrics.at("decoupling_pd");
    s.leq("merge_fidelity", name, "merge_composition", 1 - f * f, (d + 1e-6) * (d + 1e-6));
    s.close("merge_comm", name, "merge_composition", t.comm_qubits, 1.0, 0.0);
  }
}

void cptp_sanity(Suite& s) {
  const auto rho = tensor(basis_state(2, 0, "A"), basis_state(2, 0, "B"));
  s.close("cptp_hmin_pure_product", "identity", "prop4_cptp_converse",
          hmin(rho, {"A"}, {"B"}).value, 0.0, 1e-5);
  const auto choi = choi_state(QuantumChannel::identity(SystemPartition{{"A", 2}}), "B");
  s.close("cptp_hmax_identity_choi", "identity", "prop4_cptp_converse", hmax(choi, {"A"}, {"B"}).value,
          -1.0, 1e-5);
}

void embezzling(Suite& s) {
  RealVector phi(2);
  phi << 0.5, 0.5;
  double prev = 1.0;
  for (std::size_t n : {16, 64, 256, 1024}) {
    const double p = embezzle(embezzling_state(n), phi).purified_distance;
    s.leq("embezzle_nonincreasing", "n=" + std::to_string(n), "embezzling_state", p, prev);
    prev = p;
  }
}

void duality(Suite& s, std::uint64_t seed) {
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto psi = sample_pure(SystemPartition{{"A", 2}, {"B", 2}, {"C", 2}},
                                 derive_seed(seed, 500 + i))
                         .density();
    s.close("entropy_duality", tag("state", i), "entropy_duality",
            hmax(psi, {"A"}, {"B"}).value, -hmin(psi, {"A"}, {"C"}).value, 1e-5);
  }
}

void second_order(Suite& s) {
  const auto phi = maximally_entangled(2, "A", "E").density();
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto p = tensor_power(phi, n);
    Labels a, e;
    for (std::size_t j = 1; j <= n; ++j) {
      a.push_back("A" + std::to_string(j));
      e.push_back("E" + std::to_string(j));
    }
    s.close("imax_phi2_power", "n=" + std::to_string(n), "second_order_calibration",
            imax(p, e, a).value, 2.0 * double(n), 1e-4);
  }
}

}  // namespace

RunRecord task_verify(const ExperimentConfig& c) {
  RunRecord rec;
  Suite s{rec};
  const std::uint64_t seed = *c.seed;
  distance_lemma(s, derive_seed(seed, 1));
  nonlocking(s, derive_seed(seed, 2));
  convex_split(s, derive_seed(seed, 3));
  catalytic(s, derive_seed(seed, 4));
  erasure(s, derive_seed(seed, 5));
  merging(s);
  cptp_sanity(s);
  embezzling(s);
  duality(s, derive_seed(seed, 6));
  second_order(s);
  return rec;
}

}  // namespace catdec::harness::detail
