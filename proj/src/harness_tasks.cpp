#include <algorithm>
#include <cmath>

#include "harness_internal.hpp"

namespace catdec::harness {

namespace detail {

namespace {

Value opt_value(const std::map<std::string, double>& m, const std::string& k) {
  const auto it = m.find(k);
  return it == m.end() ? Value{} : Value{it->second};
}



DensityOperator normalized_sigma(const DensityOperator& rho) {
  const auto w = imax(rho, {"E"}, {"A"});
  const Matrix s = w.witness_sigma->matrix();
  return DensityOperator(s / s.trace().real(), SystemPartition{{"A", rho.partition().dim_of("A")}});
}

}  // namespace

std::vector<Row> second_order_rows(const DensityOperator& rho, const std::string& a,
                                   const std::string& e, std::size_t n_max, double eps,
                                   const SecondOrderOptions& opt) {
  if (n_max == 0) throw Error("n_max must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("eps must lie in (0, 1)");
  const DensityOperator base = reorder(marginal(rho, Labels{a, e}), Labels{a, e});
  std::size_t total = 1;
  for (std::size_t n = 1; n <= n_max; ++n) {
    total *= base.dim();
    check_capacity(total);
  }
  std::vector<Row> rows;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const DensityOperator p = tensor_power(base, n);
    Labels a_n, e_n;
    for (std::size_t j = 1; j <= n; ++j) {
      a_n.push_back(a + std::to_string(j));
      e_n.push_back(e + std::to_string(j));
    }
    const double nn = double(n);
    const auto so = second_order_rate(base, {a}, {e}, int(n), eps);
    const double ex = imax(p, e_n, a_n).value;
    const double up = imax_smooth(p, e_n, a_n, eps, ImaxMode::fixed_marginal_upper).value;
    Value lo, half_lo, pass;
    if (opt.lower_anchor) {
      const double l = imax_lower(p, e_n, a_n, eps).value;
      lo = l;
      half_lo = l / (2 * nn);
      pass = l <= up + 1e-6;
    }
    rows.push_back(Row{{"n", std::int64_t(n)},
                       {"epsilon", eps},
                       {"mutual_info_bits", so.mutual_info},
                       {"mutual_info_variance", so.variance},
                       {"rate_per_copy_bits", so.rate},
                       {"imax_bits", ex},
                       {"half_imax_per_copy_bits", ex / (2 * nn)},
                       {"imax_smooth_upper_bits", up},
                       {"half_upper_per_copy_bits", up / (2 * nn)},
                       {"imax_lower_anchor_bits", lo},
                       {"half_lower_per_copy_bits", half_lo},
                       {"anchor", std::string("imax_bracket")},
                       {"check_pass", pass}});
  }
  return rows;
}

RunRecord task_entropy(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2}, {"A", "E"});
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto rho = src.mixed(ss);
    const auto mi = mutual_info(rho, {"A"}, {"E"});
    const auto hmax_v = hmax(rho, {"A"}, {"E"});
    const auto psi = purify(rho, "R").density();
    const double gap = hmax_v.value + hmin(psi, {"A"}, {"R"}).value;
    const auto up = imax_smooth(rho, {"E"}, {"A"}, c.eps, ImaxMode::fixed_marginal_upper);
    return std::vector<Row>{Row{{"trial", std::int64_t(t)},
                                {"state_seed", ss},
                                {"epsilon", c.eps},
                                {"hmin_bits", hmin(rho, {"A"}, {"E"}).value},
                                {"hmax_bits", hmax_v.value},
                                {"hmin_smooth_bits", hmin_smooth(rho, {"A"}, {"E"}, c.eps).value},
                                {"hmax_smooth_bits", hmax_smooth(rho, {"A"}, {"E"}, c.eps).value},
                                {"imax_bits", imax(rho, {"E"}, {"A"}).value},
                                {"imax_alt_bits", imax_alt(rho, {"A"}, {"E"}).value},
                                {"imax_smooth_upper_bits", up.value},
                                {"imax_lower_bits", imax_lower(rho, {"E"}, {"A"}, c.eps).value},
                                {"mutual_info_bits", mi.I},
                                {"mutual_info_variance", mi.V},
                                {"duality_gap_bits", gap},
                                {"anchor", std::string("entropy_duality")},
                                {"check_pass", std::abs(gap) <= 1e-5}}};
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

RunRecord task_decouple(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2}, {"A", "E"});
  const std::size_t n = c.n.value_or(4);
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto rho = src.mixed(ss);
    CatalyticOptions o;
    o.n_override = n;
    const auto tr = catalytic_decouple_cs(rho, "A", "E", c.eps, c.delta, o);
    const auto lb = imax_lower(rho, {"E"}, {"A"}, tr.achieved_error);
    const auto conv = check_converse_eq7(tr, lb);
    Value emb_rem, emb_pd;
    if (rho.partition().dim_of("A") <= 8 && rho.partition().dim_of("E") <= 4) {
      EmbezzleDecoupleOptions eo;
      eo.seed = protocol_seed(*c.seed, t);
      const auto em = catalytic_decouple_embezzle(rho, "A", "E", c.eps, 256, eo);
      emb_rem = em.remainder_bits;
      emb_pd = em.achieved_error;
    }
    return std::vector<Row>{Row{{"trial", std::int64_t(t)},
                                {"state_seed", ss},
                                {"n", std::int64_t(tr.used_n)},
                                {"m", opt_value(tr.metrics, "m")},
                                {"k_bits", opt_value(tr.metrics, "k_bits")},
                                {"prescribed_n", tr.prescribed_n},
                                {"prescribed_n_feasible", !tr.has_flag("prescribed_n_infeasible")},
                                {"remainder_bits", tr.remainder_bits},
                                {"achieved_pd", tr.achieved_error},
                                {"convex_split_pd", opt_value(tr.metrics, "convex_split_pd")},
                                {"simulated_pd", opt_value(tr.metrics, "simulated_pd")},
                                {"embezzle_remainder_bits", emb_rem},
                                {"embezzle_achieved_pd", emb_pd},
                                {"imax_lower_bits", conv.details.at("imax_lower_bits")},
                                {"converse_slack_bits", conv.slack},
                                {"anchor", conv.anchor},
                                {"check_pass", conv.pass}}};
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

RunRecord task_convex_split(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2}, {"A", "E"});
  const std::vector<std::size_t> ns =
      c.n ? std::vector<std::size_t>{*c.n} : std::vector<std::size_t>{1, 2, 4, 8, 16};
  RunRecord rec;
  int monotone = 1;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto rho = src.mixed(ss);
    const auto sigma = normalized_sigma(rho);
    const double k = imax(rho, {"E"}, {"A"}).value;
    const double prescribed = convex_split_params(k, c.delta);
    std::vector<Row> out;
    double first = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double err = convex_split_error(rho, "A", sigma, ns[i]);
      if (i == 0) first = err;
      out.push_back(Row{{"trial", std::int64_t(t)},
                        {"state_seed", ss},
                        {"n", std::int64_t(ns[i])},
                        {"k_bits", k},
                        {"prescribed_n", prescribed},
                        {"prescribed_n_feasible", convex_split_feasible(rho, "A", prescribed)},
                        {"convex_split_pd", err},
                        {"ratio_to_first", first > 0 ? Value{err / first} : Value{}},
                        {"decreased", i == 0 ? Value{} : Value{err < prev}}});
      prev = err;
    }
    return out;
  });
  for (const auto& t : rows)
    for (const auto& r : t) {
      add_row(rec, r);
      if (const auto* d = std::get_if<bool>(&r.back().second); d && !*d) monotone = 0;
    }
  rec.summary["strictly_decreasing"] = monotone;
  return rec;
}

RunRecord task_erase(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2}, {"A", "E"});
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto rho = src.mixed(ss);
    const std::size_t da = rho.partition().dim_of("A");
    int k = 0;
    while ((std::size_t(1) << k) < da) ++k;
    if ((std::size_t(1) << k) != da) throw DimensionError("erasure needs a qubit register A");
    const auto twirled = apply_channel(pauli_erasure_channel(k, "A"), rho, Labels{"A"});
    const Matrix target =
        kron(Matrix::Identity(Eigen::Index(da), Eigen::Index(da)) / double(da),
             marginal(rho, {"E"}).matrix());
    const double dev = trace_distance(twirled.matrix(), target);
    StandardDecoupleOptions so;
    so.unitary = UnitaryOperator(Matrix::Identity(Eigen::Index(da), Eigen::Index(da)),
                                 SystemPartition{{"A", da}});
    const auto forward = erasure_from_decoupling(standard_decouple(rho, {}, {"A"}, so));
    const auto back = decoupling_from_erasure(rho, {"A"}, forward.unitaries);
    const std::size_t expect_n = std::size_t(1) << (2 * k);
    const bool ok = dev <= 1e-12 && forward.N == expect_n && back.remainder_bits == double(k);
    return std::vector<Row>{Row{{"trial", std::int64_t(t)},
                                {"state_seed", ss},
                                {"k_bits", double(k)},
                                {"twirl_pd", purified_distance(twirled.matrix(), target)},
                                {"twirl_trace_distance", dev},
                                {"forward_n_unitaries", std::int64_t(forward.N)},
                                {"forward_erasure_pd", forward.error},
                                {"back_remainder_bits", back.remainder_bits},
                                {"back_achieved_pd", back.achieved_error},
                                {"anchor", std::string("prop1_erasure")},
                                {"check_pass", ok}}};
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

RunRecord task_merge(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2, 2}, {"A", "B", "R"});
  const std::size_t n = c.n.value_or(4);
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto psi = src.pure(ss);
    const auto tr = merge(psi, "A", "B", "R", c.eps, c.delta, n);
    const double f = tr.metrics.at("fidelity"), d = tr.metrics.at("decoupling_pd");
    return std::vector<Row>{Row{{"trial", std::int64_t(t)},
                                {"state_seed", ss},
                                {"n", std::int64_t(n)},
                                {"comm_qubits", tr.comm_qubits},
                                {"achieved_pd", tr.achieved_error},
                                {"decoupling_pd", d},
                                {"fidelity", f},
                                {"anchor", std::string("merge_composition")},
                                {"check_pass", 1 - f * f <= (d + 1e-6) * (d + 1e-6)}}};
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

RunRecord task_qsr(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2, 2, 2}, {"A", "B", "C", "R"});
  const std::size_t n = c.n.value_or(4);
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    const auto psi = src.pure(ss);
    const auto dac = Eigen::Index(psi.partition().dim_of("A") * psi.partition().dim_of("C"));
    const QsrWitness w{maximally_mixed(1, "App"), Matrix::Identity(dac, dac), std::nullopt};
    const auto tr = qsr_evaluate(psi, "A", "B", "C", "R", w, c.eps, n);
    return std::vector<Row>{Row{{"trial", std::int64_t(t)},
                                {"state_seed", ss},
                                {"n", std::int64_t(n)},
                                {"comm_qubits", tr.comm_qubits},
                                {"achieved_pd", tr.achieved_error},
                                {"witness_marginal_pd", opt_value(tr.metrics, "witness_marginal_pd")},
                                {"error_exceeds_3eps", tr.has_flag("error_exceeds_3eps")}}};
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

RunRecord task_sweep(const ExperimentConfig& c) {
  const StateSource src(c, {2, 2}, {"A", "E"});
  const std::size_t n_max = c.n.value_or(2);
  RunRecord rec;
  const auto rows = for_trials(c.trials, c.threads, [&](int t) {
    const auto ss = state_seed(*c.seed, t);
    auto rows = second_order_rows(src.mixed(ss), "A", "E", n_max, c.eps, {});
    for (auto& r : rows) {
      r.insert(r.begin(), {"state_seed", ss});
      r.insert(r.begin(), {"trial", std::int64_t(t)});
    }
    return rows;
  });
  for (const auto& t : rows)
    for (const auto& r : t) add_row(rec, r);
  return rec;
}

}  // namespace detail

RunRecord second_order_experiment(const DensityOperator& rho, const std::string& a,
                                  const std::string& e, std::size_t n_max, double eps,
                                  const SecondOrderOptions& opt) {
  RunRecord rec;
  rec.task = Task::sweep;
  double prev = INFINITY;
  int nonincreasing = 1;
  for (const auto& r : detail::second_order_rows(rho, a, e, n_max, eps, opt)) {
    detail::add_row(rec, r);
    const auto it = std::find_if(r.begin(), r.end(), [](const auto& kv) {
      return kv.first == "half_upper_per_copy_bits";
    });
    const double up = std::get<double>(it->second);
    if (up > prev + 1e-3) nonincreasing = 0;
    prev = up;
  }
  rec.summary["upper_per_copy_nonincreasing"] = nonincreasing;
  detail::tally_checks(rec);
  return rec;
}

}  // namespace catdec::harness
