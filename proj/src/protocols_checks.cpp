#include <algorithm>
#include <cmath>

#include "catdec/protocols.hpp"
#include "protocols_internal.hpp"

namespace catdec {

CheckReport check_nonlocking(const DensityOperator& rho, const Labels& e,
                             const Labels& a1, const Labels& a2, double tolerance) {
  Labels a = a1;
  a.insert(a.end(), a2.begin(), a2.end());
  CheckReport r;
  r.anchor = "eq5_nonlocking";
  r.lhs = imax(rho, e, a).value;
  const double i1 = a1.empty() ? 0.0 : imax(rho, e, a1).value;
  const double d2 = a2.empty() ? 1.0 : double(rho.partition().dim_of(a2));
  r.rhs = i1 + 2.0 * std::log2(d2);
  r.slack = r.rhs - r.lhs;
  r.pass = r.slack >= -tolerance;
  r.details["imax_a1_bits"] = i1;
  return r;
}

CheckReport check_converse_eq7(const ProtocolTranscript& t, const EntropyValue& imax_lb,
                               double tolerance) {
  CheckReport r;
  r.anchor = "eq7_converse";
  double lb = 0.0;
  if (imax_lb.bound_kind == BoundKind::upper) {
    if (!imax_lb.lower_bound)
      throw Error("converse check needs a lower bound on the max-information");
    lb = *imax_lb.lower_bound;
    r.flags.push_back("certified_lower_bound");
  } else {
    lb = imax_lb.value;
    if (imax_lb.bound_kind == BoundKind::lower) r.flags.push_back("lower_estimator");
  }
  r.lhs = t.remainder_bits;
  r.rhs = 0.5 * lb;
  r.slack = r.lhs - r.rhs;
  r.pass = r.slack >= -tolerance;
  r.details["imax_lower_bits"] = lb;
  r.details["epsilon"] = imax_lb.epsilon;
  return r;
}

CheckReport check_cptp_converse(const DensityOperator& rho, const Labels& a,
                                const QuantumChannel& ch, double eps,
                                const CptpConverseOptions& opt) {
  if (opt.samples < 2) throw Error("premise estimate needs at least two samples");
  Labels e;
  for (const auto& l : rho.partition().labels())
    if (std::find(a.begin(), a.end(), l) == a.end()) e.push_back(l);
  std::vector<std::string> order = a;
  order.insert(order.end(), e.begin(), e.end());
  const DensityOperator ro = reorder(rho, order);
  const std::size_t da = rho.partition().dim_of(a);
  if (ch.in_partition().total_dim() != da)
    throw DimensionError("channel input does not match A");
  const std::string in_label = "A_in";
  std::vector<Factor> f{{in_label, da}};
  std::size_t de = 1;
  for (const auto& l : e) {
    f.push_back({l, rho.partition().dim_of(l)});
    de *= rho.partition().dim_of(l);
  }
  const SystemPartition work(f);
  const QuantumChannel chw(ch.kraus(), SystemPartition{{in_label, da}}, ch.out_partition());
  const auto dae = static_cast<Eigen::Index>(da);
  const auto dee = static_cast<Eigen::Index>(de);
  const std::vector<std::size_t> dims{da, de};
  const Matrix rho_e = partial_trace_raw(ro.matrix(), dims, {true, false});
  const DensityOperator tau_a(Matrix::Identity(dae, dae) / double(da),
                              SystemPartition{{in_label, da}});
  const Matrix t_tau = apply_channel(chw, tau_a, std::vector<std::string>{in_label}).matrix();
  const Matrix target = kron(t_tau, rho_e);

  // Monte-Carlo estimate of the Haar-averaged premise.
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < opt.samples; ++s) {
    const Matrix u = haar_unitary_matrix(da, derive_seed(opt.seed, std::uint64_t(s)));
    const Matrix big = kron(u, Matrix::Identity(dee, dee));
    const DensityOperator rot(big * ro.matrix() * big.adjoint(), work);
    const DensityOperator out = apply_channel(chw, rot, std::vector<std::string>{in_label});
    Labels out_order = ch.out_partition().labels();
    out_order.insert(out_order.end(), e.begin(), e.end());
    const double p = detail::pd_normalized(reorder(out, out_order).matrix(), target);
    sum += p;
    sum2 += p * p;
  }
  const double n = double(opt.samples);
  const double mean = sum / n;
  const double stderr_ = std::sqrt(std::max(0.0, (sum2 / n - mean * mean) / (n - 1.0)));
  const double eps_hat = std::max(mean, 1e-12);

  CheckReport r;
  r.anchor = "prop4_cptp_converse";
  r.details["premise_pd"] = mean;
  r.details["premise_stderr"] = stderr_;
  r.details["premise_holds"] = mean <= eps ? 1.0 : 0.0;
  if (mean > eps) r.flags.push_back("premise_failed");

  double smin = 15.0 * std::sqrt(eps_hat);
  if (smin >= 1.0) {
    smin = 0.999;
    r.flags.push_back("smoothing_capped");
  }
  const double smax = std::min(eps_hat, 0.999);
  const DensityOperator choi = choi_state(chw, "Rchoi");
  const EntropyValue hmin_v = hmin_smooth(rho, a, e, smin);
  const EntropyValue hmax_v = hmax_smooth(choi, {"Rchoi"}, ch.out_partition().labels(), smax);
  r.details["hmin_bits"] = hmin_v.value;
  r.details["hmax_bits"] = hmax_v.value;
  r.details["hmin_smoothing"] = smin;
  r.details["hmax_smoothing"] = smax;
  r.lhs = hmin_v.value + hmax_v.value;
  r.rhs = -10.0 * std::log2(1.0 / eps_hat) - 7.0;
  r.slack = r.lhs - r.rhs;
  r.pass = r.slack >= -1e-6;
  return r;
}

}  // namespace catdec
