#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "catdec/harness.hpp"

using namespace catdec;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;
};

DensityOperator on(const Matrix& m, std::vector<Factor> f) {
  return DensityOperator(m, SystemPartition(std::move(f)));
}

DensityOperator two_qubit(std::uint64_t seed, std::size_t rank) {
  return on(sample_density(4, rank, seed).matrix(), {{"A", 2}, {"E", 2}});
}

DensityOperator normalized_witness(const DensityOperator& rho) {
  const Matrix s = imax(rho, {"E"}, {"A"}).witness_sigma->matrix();
  return DensityOperator(s / s.trace().real(), SystemPartition{{"A", 2}});
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome distance_lemma() {
  double worst = 1e9;
  int bad = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::uint64_t s = derive_seed(kSeed, 100000 + i);
    const std::size_t d = 2 + derive_seed(s, 0) % 7;
    const Matrix a = sample_density(d, 1 + derive_seed(s, 1) % d, derive_seed(s, 2)).matrix();
    const Matrix b = sample_density(d, 1 + derive_seed(s, 3) % d, derive_seed(s, 4)).matrix();
    const double td = trace_distance(a, b), pd = purified_distance(a, b);
    const double slack = std::min(pd - td, std::sqrt(2 * td) - pd);
    worst = std::min(worst, slack);
    bad += slack < -1e-9;
  }
  return {bad == 0, fmt("200 pairs, min slack %.3g", worst)};
}

Outcome duality() {
  double worst = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::size_t dc = i < 50 ? 2 : 4;
    const auto psi = sample_pure(SystemPartition{{"A", 2}, {"B", 2}, {"C", dc}},
                                 derive_seed(kSeed, 200000 + i))
                         .density();
    worst = std::max(worst,
                     std::abs(hmax(psi, {"A"}, {"B"}).value + hmin(psi, {"A"}, {"C"}).value));
  }
  return {worst <= 1e-5, fmt("100 states, max |Hmax(A|B)+Hmin(A|C)| = %.3g", worst)};
}

Outcome smooth_hmin_bound() {
  int cases = 0;
  double worst = 1e9;
  for (std::size_t d : {2, 3})
    for (double q : {0.5, 0.75})
      for (double eps : {0.05, 0.1}) {
        if (eps * eps >= 1 - std::sqrt(1 - q)) continue;
        const auto phi = maximally_entangled(d, "A", "B").density();
        const DensityOperator qphi(q * phi.matrix(), phi.partition(), TraceMode::subnormalized);
        const double v = hmin_smooth(qphi, {"A"}, {"B"}, eps).value;
        const double bound =
            -std::log2(double(d)) + std::log2(1 / (1 - eps * eps - std::sqrt(1 - q)));
        worst = std::min(worst, bound + 1e-5 - v);
        ++cases;
      }
  return {cases == 8 && worst >= 0, fmt("%.0f parameter points, min slack %.3g", cases, worst)};
}

Outcome example_distribution() {
  const double eps = 1.0 / 20;
  RealVector p(17);
  p(0) = 0.5;
  for (int i = 1; i < 17; ++i) p(i) = 0.5 / 16;
  double best = 1.0;
  for (std::uint32_t mask = 1; mask < (1u << 17); ++mask) {
    double mass = 0, lo_in = 1, hi_out = 0;
    for (int i = 0; i < 17; ++i) {
      if (mask >> i & 1u) {
        mass += p(i);
        lo_in = std::min(lo_in, p(i));
      } else {
        hi_out = std::max(hi_out, p(i));
      }
    }
    const double level = (mass - eps) / std::popcount(mask);
    if (level >= hi_out && level <= lo_in) best = std::min(best, level);
  }
  const double hmin_tr = hmin_smooth_trace_classical(p, eps);
  const double closed = -std::log2(0.45);
  const double hmax_e = hmax_smooth_classical(p, eps);
  const double gap_rhs = std::log2(16.0) - std::log2(10 / (1 - 15 * eps));
  const bool pass = std::abs(hmin_tr - closed) <= 1e-6 && std::abs(hmin_tr + std::log2(best)) <= 1e-6 &&
                    hmax_e - hmin_tr >= gap_rhs;
  return {pass, fmt("Hmin_tr %.9f, oracle %.9f, -log2(0.45) %.9f", hmin_tr, -std::log2(best),
                    closed) +
                    fmt("; Hmax - Hmin_tr %.4f >= %.4f", hmax_e - hmin_tr, gap_rhs)};
}

Outcome nonlocking() {
  const std::array<std::array<const char*, 3>, 6> roles{{{"A", "B", "C"}, {"A", "C", "B"},
                                                         {"B", "A", "C"}, {"B", "C", "A"},
                                                         {"C", "A", "B"}, {"C", "B", "A"}}};
  int violations = 0, checks = 0;
  double worst = 1e9;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto rho = on(sample_density(8, 1 + i % 8, derive_seed(kSeed, 300000 + i)).matrix(),
                        {{"A", 2}, {"B", 2}, {"C", 2}});
    for (const auto& [e, a1, a2] : roles) {
      const auto r = check_nonlocking(rho, {e}, {a1}, {a2});
      worst = std::min(worst, r.slack);
      violations += !r.pass;
      ++checks;
    }
  }
  return {violations == 0, fmt("%.0f checks, %.0f violations, min slack %.3g", checks,
                               violations, worst)};
}

Outcome convex_split() {
  std::vector<std::pair<std::string, DensityOperator>> states{
      {"phi2", maximally_entangled(2, "A", "E").density()},
      {"random0", two_qubit(derive_seed(kSeed, 400000), 4)},
      {"random1", two_qubit(derive_seed(kSeed, 400001), 3)}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, rho] : states) {
    const auto sigma = normalized_witness(rho);
    std::vector<double> errs;
    for (std::size_t n : {1, 2, 4, 8, 16}) errs.push_back(convex_split_error(rho, "A", sigma, n));
    for (std::size_t j = 1; j < errs.size(); ++j) pass &= errs[j] < errs[j - 1];
    pass &= errs.back() <= 0.55 * errs.front();
    if (name == "phi2") pass &= std::abs(errs.front() - std::sqrt(3.0) / 2) <= 1e-9;
    const double prescribed = convex_split_params(imax(rho, {"E"}, {"A"}).value, 0.1);
    pass &= !convex_split_feasible(rho, "A", prescribed);
    detail += name + fmt(" %.4f->%.4f (prescribed n %.3g, infeasible); ", errs.front(),
                         errs.back(), prescribed);
  }
  return {pass, detail};
}

Outcome catalytic_equivalence() {
  double worst = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto rho = two_qubit(derive_seed(kSeed, 500000 + i), 1 + i % 4);
    CatalyticOptions o;
    o.n_override = 1 + i % 8;
    const auto t = catalytic_decouple_cs(rho, "A", "E", 0.0, 0.1, o);
    const auto tau = convex_split_state(rho, "A", t.catalyst->sigma, *o.n_override);
    const auto rest = marginal(tau, Labels{"E"});
    Labels xs;
    for (std::size_t j = 1; j <= *o.n_override; ++j) xs.push_back("A" + std::to_string(j));
    const auto prod = tensor(marginal(tau, xs), rest);
    const double direct = purified_distance(reorder(tau, prod.partition().labels()), prod);
    worst = std::max(worst, std::abs(t.achieved_error - direct));
  }
  return {worst <= 1e-9, fmt("20 instances, max |difference| %.3g", worst)};
}

Outcome erasure() {
  const Matrix tau = Matrix::Identity(2, 2) / 2.0;
  double worst = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto rho = two_qubit(derive_seed(kSeed, 600000 + i), 1 + i % 4);
    const auto out = apply_channel(pauli_erasure_channel(1, "A"), rho, Labels{"A"});
    worst = std::max(worst,
                     trace_distance(out.matrix(), kron(tau, marginal(rho, {"E"}).matrix())));
  }
  bool books = true;
  const auto rho = on(sample_density(8, 8, derive_seed(kSeed, 650000)).matrix(),
                      {{"A1", 2}, {"A2", 2}, {"E", 2}});
  for (int k = 0; k <= 2; ++k) {
    Labels a1, a2;
    (k >= 1 ? a2 : a1).push_back("A2");
    (k >= 2 ? a2 : a1).push_back("A1");
    StandardDecoupleOptions o;
    o.trials = 2;
    o.seed = derive_seed(kSeed, 660000 + std::uint64_t(k));
    const auto t = standard_decouple(rho, a1, a2, o);
    const auto e = erasure_from_decoupling(t);
    books &= e.N == (std::size_t(1) << (2 * k)) && e.unitaries.size() == e.N;
    books &= decoupling_from_erasure(rho, {"A1", "A2"}, e.unitaries).remainder_bits == double(k);
  }
  return {worst <= 1e-12 && books,
          fmt("twirl max distance %.3g, round trip k=0..2 ", worst) + (books ? "exact" : "WRONG")};
}

Outcome merging() {
  Vector g = Vector::Zero(8);
  g(0) = g(7) = 1 / std::sqrt(2.0);
  const std::vector<std::pair<std::string, PureState>> cases{
      {"bell", maximally_entangled(2, "A", "R")},
      {"ghz", PureState(g, SystemPartition{{"A", 2}, {"B", 2}, {"R", 2}})}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, psi] : cases) {
    const std::string b = psi.partition().contains("B") ? "B" : "";
    const auto t = merge(psi, "A", b, "R", 0.1, 0.1, 4);
    const double f = t.metrics.at("fidelity"), d = t.metrics.at("decoupling_pd");
    pass &= 1 - f * f <= (d + 1e-6) * (d + 1e-6) && t.comm_qubits == 1.0;
    detail += name + fmt(": 1-F^2 %.6f, (err)^2 %.6f, comm %.0f; ", 1 - f * f, d * d, t.comm_qubits);
  }
  return {pass, detail};
}

QuantumChannel depolarizing_mix(double p, std::uint64_t seed) {
  Matrix x = Matrix::Zero(2, 2), y = Matrix::Zero(2, 2), z = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1;
  y(0, 1) = Complex(0, -1);
  y(1, 0) = Complex(0, 1);
  z(0, 0) = 1;
  z(1, 1) = -1;
  const double w = std::sqrt(p / 4);
  std::vector<Matrix> kraus{w * Matrix::Identity(2, 2), w * x, w * y, w * z,
                            std::sqrt(1 - p) * haar_unitary_matrix(2, seed)};
  return QuantumChannel(kraus, SystemPartition{{"A", 2}}, SystemPartition{{"B", 2}});
}

Outcome cptp_converse() {
  const auto rho = tensor(basis_state(2, 0, "A"), basis_state(2, 0, "B"));
  const double h0 = hmin(rho, {"A"}, {"B"}).value;
  const auto choi = choi_state(QuantumChannel::identity(SystemPartition{{"A", 2}}), "B");
  const double hm = hmax(choi, {"A"}, {"B"}).value;
  bool pass = std::abs(h0) <= 1e-5 && std::abs(hm + 1.0) <= 1e-5;

  int held = 0, drawn = 0, failed = 0;
  double worst = 1e9;
  while (held < 10 && drawn < 200) {
    const std::uint64_t s = derive_seed(kSeed, 700000 + std::uint64_t(drawn++));
    const double p = 0.9 + 0.1 * double(derive_seed(s, 0) % 1000) / 1000.0;
    const auto state = two_qubit(derive_seed(s, 1), 1 + derive_seed(s, 2) % 4);
    CptpConverseOptions o;
    o.seed = derive_seed(s, 3);
    const auto r = check_cptp_converse(state, {"A"}, depolarizing_mix(p, derive_seed(s, 4)), 0.1, o);
    if (r.details.at("premise_holds") != 1.0) continue;
    ++held;
    failed += !r.pass;
    worst = std::min(worst, r.slack);
  }
  pass &= held == 10 && failed == 0;
  return {pass, fmt("Hmin %.2g, Hmax(identity Choi) %.6f; ", h0, hm) +
                    fmt("%.0f premise-holding triples of %.0f drawn, min slack %.3g", held, drawn,
                        worst)};
}

Outcome second_order() {
  const auto phi = maximally_entangled(2, "A", "E").density();
  bool pass = true;
  double worst = 0;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = harness::tensor_power(phi, n);
    Labels a, e;
    for (std::size_t j = 1; j <= n; ++j) {
      a.push_back("A" + std::to_string(j));
      e.push_back("E" + std::to_string(j));
    }
    worst = std::max(worst, std::abs(imax(p, e, a).value - 2.0 * double(n)));
    const auto est = second_order_rate(phi, {"A"}, {"E"}, int(n), 0.25);
    pass &= std::abs(est.variance) <= 1e-9;
  }
  pass &= worst <= 1e-4;

  const auto psi = sample_pure(SystemPartition{{"A", 2}, {"E", 2}}, 11);
  const RealVector sc = schmidt_coefficients(psi, {"A"});
  pass &= std::abs(sc(0) - sc(1)) > 1e-3 && sc.minCoeff() > 1e-3;
  const auto rec = harness::second_order_experiment(psi.density(), "A", "E", 3, 0.25, {false});
  const auto col = std::find(rec.columns.begin(), rec.columns.end(), "half_upper_per_copy_bits") -
                   rec.columns.begin();
  std::string per_copy;
  std::vector<double> v;
  for (const auto& row : rec.rows) {
    v.push_back(std::get<double>(row[std::size_t(col)]));
    per_copy += fmt("%.4f ", v.back());
  }
  for (std::size_t j = 1; j < v.size(); ++j) pass &= v[j] <= v[j - 1] + 1e-3;
  pass &= v.size() == 3;
  return {pass, fmt("Phi2 max |Imax-2n| %.3g, V=0; ", worst) + "seeded state per-copy upper " +
                    per_copy};
}

Outcome determinism() {
  harness::ExperimentConfig c;
  c.task = harness::Task::verify;
  c.seed = harness::kDefaultSeed;
  const auto r1 = harness::run(c);
  const auto r2 = harness::run(c);
  const bool same = harness::to_csv(r1) == harness::to_csv(r2) &&
                    harness::to_json(r1) == harness::to_json(r2);
  return {same && r1.all_pass(),
          fmt("%.0f checks, %.0f failed, reports ", double(r1.checks_run),
              double(r1.failed_checks.size())) +
              (same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"distance lemma", 5, distance_lemma},
      {"entropy duality", 60, duality},
      {"smooth Hmin vs maximally entangled bound", 30, smooth_hmin_bound},
      {"example distribution", 30, example_distribution},
      {"non-locking", 600, nonlocking},
      {"convex split", 120, convex_split},
      {"catalytic equals convex split", 600, catalytic_equivalence},
      {"erasure", 600, erasure},
      {"merging", 30, merging},
      {"CPTP converse", 600, cptp_converse},
      {"second-order calibration", 600, second_order},
      {"determinism", 600, determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("%s  %2zu %s: %s [%.1f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", i + 1, c.name,
                o.detail.c_str(), secs, c.limit_s);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
