#include <algorithm>
#include <cmath>
#include <numeric>

#include "entropies_internal.hpp"

namespace catdec {

using namespace detail;

namespace {

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw Error("smoothing parameter must lie in [0, 1)");
}

}  // namespace

namespace detail {

sdp::Expr ball_variable(sdp::Model& model, const Matrix& m, double eps) {
  const auto d = m.rows();
  // Sub-normalization is carried by one extra dimension holding 1 - Tr.
  Matrix wr = psd_factor(m);
  const double missing = 1.0 - m.trace().real();
  Matrix w = Matrix::Zero(d + 1, wr.cols() + (missing > tol::psd ? 1 : 0));
  w.topLeftCorner(d, wr.cols()) = wr;
  if (missing > tol::psd) w(d, wr.cols()) = std::sqrt(missing);
  const auto r = w.cols();

  auto bar = model.hermitian(d);
  auto y = model.complex_matrix(d + 1, r);
  sdp::Expr one = sdp::Expr::constant(Matrix::Ones(1, 1));
  auto ext = sdp::direct_sum(bar, one - trace(bar));
  model.psd(sdp::blocks({{sdp::Expr::constant(Matrix::Identity(r, r)), sdp::adjoint(y)},
                         {y, ext}}));
  const auto overlap = inner(w, y);
  model.geq(0.5 * (overlap + sdp::adjoint(overlap)), std::sqrt(1.0 - eps * eps));
  return bar;
}

}  // namespace detail

EntropyValue hmin_smooth(const DensityOperator& rho, const Labels& a,
                         const Labels& b, double eps) {
  check_eps(eps);
  if (eps == 0.0) return hmin(rho, a, b);
  const Matrix m = ordered_matrix(rho, a, b);
  const auto p = ordered_partition(rho, a, b);
  const auto da = static_cast<Eigen::Index>(p.dim_of(a));
  const auto db = static_cast<Eigen::Index>(p.dim_of(b));

  sdp::Model model;
  auto bar = ball_variable(model, m, eps);
  auto s = model.hermitian(db);
  model.psd(kron(Matrix::Identity(da, da), s) - bar);
  model.minimize(trace(s));
  const auto sol = model.solve();

  EntropyValue v;
  v.epsilon = eps;
  attach_solution(v, sol, BoundKind::lower);
  v.value = -std::log2(sol.primal_value);
  v.witness_state = as_state(sol.value(bar), p);
  Matrix sv = sol.value(s);
  sv /= sv.trace().real();
  v.witness_sigma = as_state(sv, p.restrict_to(b));
  return v;
}

EntropyValue hmax_smooth(const DensityOperator& rho, const Labels& a,
                         const Labels& b, double eps) {
  check_eps(eps);
  if (eps == 0.0) return hmax(rho, a, b);
  Labels keep = a;
  keep.insert(keep.end(), b.begin(), b.end());
  const auto rab = marginal(rho, keep);
  const std::string c = fresh_label(rab.partition(), "C");
  const auto psi = purify(rab, c);
  EntropyValue v = hmin_smooth(psi.density(), a, {c}, eps);
  v.value = -v.value;
  if (v.bound_kind == BoundKind::lower) v.bound_kind = BoundKind::upper;
  v.witness_state.reset();
  v.witness_sigma.reset();
  return v;
}

double hmin_smooth_trace_classical(const RealVector& p, double eps) {
  check_eps(eps);
  std::vector<double> q(p.begin(), p.end());
  std::sort(q.begin(), q.end(), std::greater<>());
  // Water level lambda with sum (q_i - lambda)_+ = eps.
  double cum = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    cum += q[k];
    const double next = k + 1 < q.size() ? q[k + 1] : 0.0;
    const double level = (cum - eps) / double(k + 1);
    if (level >= next) return -std::log2(level);
  }
  throw Error("smoothing removes the whole distribution");
}

double hmax_smooth_classical(const RealVector& p, double eps) {
  check_eps(eps);
  if (p.size() == 0 || p.minCoeff() < -tol::psd || std::abs(p.sum() - 1.0) > tol::trace)
    throw StateError("expected a probability vector");
  const RealVector a = p.cwiseMax(0.0).cwiseSqrt();
  const double c = std::sqrt(1.0 - eps * eps);
  const double top = a.maxCoeff();
  if (c <= top) return 2.0 * std::log2(c / top);
  // Both constraints active: x is proportional to (a - theta)_+.
  auto cut = [&](double theta) { return (a.array() - theta).cwiseMax(0.0).matrix().eval(); };
  double lo = 0.0, hi = top;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const RealVector x = cut(mid);
    (a.dot(x) / x.norm() >= c ? lo : hi) = mid;
  }
  const RealVector x = cut(lo);
  return 2.0 * std::log2(x.sum() / x.norm());
}

EntropyValue h0(const DensityOperator& rho) {
  EntropyValue v;
  const RealVector ev = eigh(rho.matrix()).values;
  const auto rank = (ev.array() > tol::psd).count();
  v.value = std::log2(double(std::max<Eigen::Index>(rank, 1)));
  return v;
}

EntropyValue h0_smooth(const DensityOperator& rho, double eps, SmoothingBall ball) {
  check_eps(eps);
  require_normalized(rho);
  Eigh e = eigh(rho.matrix());
  const RealVector ev = e.values.cwiseMax(0.0);
  // Removing mass m costs m in the trace ball; renormalizing the rest costs
  // sqrt(m) in purified distance.
  const double budget = ball == SmoothingBall::trace ? eps : eps * eps;
  Eigen::Index cut = 0;
  double removed = 0.0;
  while (cut < ev.size() - 1 && removed + ev(cut) <= budget + 1e-12) removed += ev(cut++);
  const Eigen::Index kept = (ev.tail(ev.size() - cut).array() > tol::psd).count();

  RealVector nv = ev;
  nv.head(cut).setZero();
  if (ball == SmoothingBall::purified) nv /= nv.sum();
  Matrix bar = e.vectors * nv.cast<Complex>().asDiagonal() * e.vectors.adjoint();

  EntropyValue v;
  v.epsilon = eps;
  v.value = std::log2(double(std::max<Eigen::Index>(kept, 1)));
  v.witness_state = as_state(bar, rho.partition());
  return v;
}

}  // namespace catdec
