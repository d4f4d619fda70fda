#include <algorithm>
#include <cmath>
#include <limits>

#include "entropies_internal.hpp"

namespace catdec {

namespace detail {

SystemPartition ordered_partition(const DensityOperator& rho, const Labels& a,
                                  const Labels& b) {
  const auto& p = rho.partition();
  return p.restrict_to(a).concat(p.restrict_to(b));
}

Matrix ordered_matrix(const DensityOperator& rho, const Labels& a, const Labels& b) {
  for (const auto& l : a)
    if (std::find(b.begin(), b.end(), l) != b.end())
      throw LabelError("label " + l + " appears on both sides");
  if (a.empty()) throw LabelError("first system must be non-empty");
  Labels order = a;
  order.insert(order.end(), b.begin(), b.end());
  return reorder(marginal(rho, order), order).matrix();
}

void require_normalized(const DensityOperator& rho) {
  if (std::abs(rho.trace() - 1.0) > tol::trace * 10)
    throw StateError("operation requires a normalized state");
}

std::string fresh_label(const SystemPartition& p, const std::string& base) {
  std::string l = base;
  while (p.contains(l)) l += "'";
  return l;
}

Matrix clean_psd(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Matrix out = hermitian_function(h, [](double x) { return x > 0 ? x : 0.0; });
  const double t = out.trace().real();
  if (t > 1.0) out /= t;
  return out;
}

DensityOperator as_state(const Matrix& m, const SystemPartition& p) {
  return DensityOperator(clean_psd(m), p, TraceMode::subnormalized);
}

Matrix psd_factor(const Matrix& m) {
  Eigh e = eigh(0.5 * (m + m.adjoint()));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = e.values.size(); i-- > 0;)
    if (e.values(i) > tol::psd) keep.push_back(i);
  Matrix w(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    w.col(static_cast<Eigen::Index>(k)) =
        e.vectors.col(keep[k]) * std::sqrt(e.values(keep[k]));
  return w;
}

void attach_solution(EntropyValue& v, const sdp::Solution& s, BoundKind fallback) {
  if (s.status == sdp::Status::infeasible)
    throw Error("entropy SDP reported infeasibility");
  v.solver_status = s.status;
  v.certificate = std::abs(s.gap);
  v.bound_kind = s.optimal() ? BoundKind::exact : fallback;
}

}  // namespace detail

using namespace detail;

std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::exact: return "exact";
    case BoundKind::upper: return "upper";
    case BoundKind::lower: return "lower";
  }
  return "?";
}

double entropy_of_spectrum(const RealVector& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log2(x);
  return h;
}

double von_neumann(const DensityOperator& rho, const Labels& subsystems) {
  require_normalized(rho);
  if (subsystems.empty()) return entropy_of_spectrum(clamped_spectrum(rho.matrix()));
  return entropy_of_spectrum(clamped_spectrum(marginal(rho, subsystems).matrix()));
}

namespace {

// log2 on the support, zero elsewhere.
Matrix log2_on_support(const Matrix& m) {
  return hermitian_function(m, [](double x) { return x > tol::psd ? std::log2(x) : 0.0; });
}

}  // namespace

MutualInfo mutual_info(const DensityOperator& rho, const Labels& a, const Labels& b) {
  require_normalized(rho);
  const Matrix m = ordered_matrix(rho, a, b);
  const auto p = ordered_partition(rho, a, b);
  const std::size_t da = p.dim_of(a), db = p.dim_of(b);
  const std::vector<std::size_t> dims{da, db};
  const Matrix ma = partial_trace_raw(m, dims, {false, true});
  const Matrix mb = partial_trace_raw(m, dims, {true, false});
  const Matrix l = log2_on_support(m) - log2_on_support(kron(ma, mb));
  const Matrix rl = m * l;
  const double d = rl.trace().real();
  const double second = (rl * l).trace().real();
  MutualInfo out;
  out.I = entropy_of_spectrum(clamped_spectrum(ma)) +
          entropy_of_spectrum(clamped_spectrum(mb)) -
          entropy_of_spectrum(clamped_spectrum(m));
  // Cancellation noise in second - d^2 is of order eps * second.
  const double v = second - d * d;
  out.V = v > 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, second) ? v : 0.0;
  return out;
}

double cond_mutual_info(const DensityOperator& rho, const Labels& a,
                        const Labels& b, const Labels& c) {
  require_normalized(rho);
  auto join = [](Labels x, const Labels& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  const double hc = c.empty() ? 0.0 : von_neumann(rho, c);
  return von_neumann(rho, join(a, c)) + von_neumann(rho, join(b, c)) -
         von_neumann(rho, join(join(a, b), c)) - hc;
}

namespace {

struct SupportSplit {
  Matrix basis;
  bool contained = true;
};

SupportSplit support_of(const Matrix& rho, const Matrix& sigma) {
  SupportSplit s;
  s.basis = support_basis(sigma);
  const Matrix inside = s.basis.adjoint() * rho * s.basis;
  const double outside = rho.trace().real() - inside.trace().real();
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  s.contained = outside <= 10 * tol::psd * scale;
  return s;
}

}  // namespace

EntropyValue dmax(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw DimensionError("dmax arguments differ in dimension");
  EntropyValue v;
  const auto s = support_of(rho, sigma);
  if (!s.contained) {
    v.infinite = true;
    return v;
  }
  const Matrix sr = s.basis.adjoint() * sigma * s.basis;
  const Matrix inv_sqrt =
      hermitian_function(sr, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix t = inv_sqrt * (s.basis.adjoint() * rho * s.basis) * inv_sqrt;
  const double lmax = eigh(0.5 * (t + t.adjoint())).values.maxCoeff();
  if (lmax <= 0) {
    v.value = -std::numeric_limits<double>::infinity();
    return v;
  }
  v.value = std::log2(lmax);
  return v;
}

EntropyValue dmax(const DensityOperator& rho, const DensityOperator& sigma) {
  return dmax(rho.matrix(), sigma.matrix());
}

EntropyValue dmax_sdp(const Matrix& rho, const Matrix& sigma) {
  EntropyValue v;
  const auto s = support_of(rho, sigma);
  if (!s.contained) {
    v.infinite = true;
    return v;
  }
  const Matrix sr = s.basis.adjoint() * sigma * s.basis;
  const Matrix rr = s.basis.adjoint() * rho * s.basis;
  sdp::Model m;
  auto t = m.real_scalar();
  m.psd(kron(t, sr) - rr);
  m.minimize(t);
  const auto sol = m.solve();
  attach_solution(v, sol, BoundKind::upper);
  v.value = std::log2(sol.primal_value);
  return v;
}

EntropyValue hmin_matrix(const Matrix& m, std::size_t da, std::size_t db) {
  EntropyValue v;
  const auto ida = static_cast<Eigen::Index>(da);
  sdp::Model model;
  auto s = model.hermitian(static_cast<Eigen::Index>(db));
  model.psd(kron(Matrix::Identity(ida, ida), s) - m);
  model.minimize(trace(s));
  const auto sol = model.solve();
  // A primal iterate over-estimates Tr sigma, so -log is a lower bound.
  attach_solution(v, sol, BoundKind::lower);
  v.value = -std::log2(sol.primal_value);
  Matrix sv = sol.value(s);
  sv /= sv.trace().real();
  v.witness_sigma = as_state(sv, SystemPartition{{"B", db}});
  return v;
}

EntropyValue hmin(const DensityOperator& rho, const Labels& a, const Labels& b) {
  const Matrix m = ordered_matrix(rho, a, b);
  const auto p = ordered_partition(rho, a, b);
  if (b.empty()) {
    EntropyValue v;
    v.value = -std::log2(eigh(m).values.maxCoeff());
    return v;
  }
  EntropyValue v = hmin_matrix(m, p.dim_of(a), p.dim_of(b));
  v.witness_sigma = as_state(v.witness_sigma->matrix(), p.restrict_to(b));
  return v;
}

EntropyValue hmax(const DensityOperator& rho, const Labels& a, const Labels& b) {
  const Matrix m = ordered_matrix(rho, a, b);
  const auto p = ordered_partition(rho, a, b);
  EntropyValue v;
  if (b.empty()) {
    const double s = clamped_spectrum(m).cwiseSqrt().sum();
    v.value = 2 * std::log2(s);
    return v;
  }
  const auto da = static_cast<Eigen::Index>(p.dim_of(a));
  const auto db = static_cast<Eigen::Index>(p.dim_of(b));
  const Matrix w = psd_factor(m);
  sdp::Model model;
  auto sigma = model.hermitian(db);
  auto y = model.complex_matrix(m.rows(), w.cols());
  const auto r = w.cols();
  model.psd(sdp::blocks({{sdp::Expr::constant(Matrix::Identity(r, r)), sdp::adjoint(y)},
                         {y, kron(Matrix::Identity(da, da), sigma)}}));
  model.equal(trace(sigma), 1.0);
  const auto overlap = inner(w, y);
  model.maximize(0.5 * (overlap + sdp::adjoint(overlap)));
  const auto sol = model.solve();
  // A primal iterate under-estimates the fidelity.
  attach_solution(v, sol, BoundKind::lower);
  v.value = 2 * std::log2(sol.primal_value);
  v.witness_sigma = as_state(sol.value(sigma), p.restrict_to(b));
  return v;
}

EntropyValue hmax_dual(const DensityOperator& rho, const Labels& a, const Labels& b) {
  Labels keep = a;
  keep.insert(keep.end(), b.begin(), b.end());
  const auto rab = marginal(rho, keep);
  const std::string c = fresh_label(rab.partition(), "C");
  const auto psi = purify(rab, c);
  EntropyValue v = hmin(psi.density(), a, {c});
  v.value = -v.value;
  if (v.bound_kind == BoundKind::lower) v.bound_kind = BoundKind::upper;
  v.witness_sigma.reset();
  return v;
}

}  // namespace catdec
