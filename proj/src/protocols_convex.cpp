#include <algorithm>
#include <cmath>
#include <limits>

#include "catdec/protocols.hpp"
#include "protocols_internal.hpp"

namespace catdec {
namespace detail {

Matrix sqrt_nonneg(const Matrix& h) {
  Eigh e = eigh(0.5 * (h + h.adjoint()));
  const double top = std::max(0.0, e.values.maxCoeff());
  const double floor = double(h.rows()) * std::numeric_limits<double>::epsilon() * top;
  RealVector r = e.values.unaryExpr(
      [floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
  return e.vectors * r.asDiagonal() * e.vectors.adjoint();
}

double root_fidelity(const Matrix& a, const Matrix& b) {
  return trace_norm(sqrt_nonneg(a) * sqrt_nonneg(b));
}

// With X = sqrt(a) b sqrt(a), the correction S = sqrt(X) - a solves
// a S + S sqrt(X) = sqrt(a) (b - a) sqrt(a), so 1 - F comes from the
// difference b - a directly instead of from 1 - (something close to 1).
double pd_normalized(const Matrix& a, const Matrix& b) {
  const double f = std::min(1.0, root_fidelity(a, b));
  const double plain = std::sqrt(std::max(0.0, 1.0 - f * f));
  if (plain > 1e-4) return plain;
  const Matrix ah = 0.5 * (a + a.adjoint());
  Eigh ea = eigh(ah);
  const double top = std::max(0.0, ea.values.maxCoeff());
  const double floor = double(a.rows()) * std::numeric_limits<double>::epsilon() * top;
  double discarded = 0.0;
  RealVector alpha = ea.values;
  RealVector root(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > floor) {
      root(i) = std::sqrt(alpha(i));
    } else {
      discarded += alpha(i);
      alpha(i) = 0.0;
      root(i) = 0.0;
    }
  }
  const Matrix& u = ea.vectors;
  const Matrix sa = u * root.asDiagonal() * u.adjoint();
  const Matrix aeff = u * alpha.asDiagonal() * u.adjoint();
  const Matrix diff = 0.5 * ((b - a) + (b - a).adjoint());
  const Matrix x = sa * (0.5 * (b + b.adjoint())) * sa;
  Eigh ex = eigh(0.5 * (x + x.adjoint()));
  RealVector gamma = ex.values.unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
  const Matrix& w = ex.vectors;
  const Matrix c = sa * (diff + (ah - aeff)) * sa;
  const Matrix ct = u.adjoint() * c * w;
  const Matrix wu = w.adjoint() * u;
  Complex tr_s = 0.0;
  for (Eigen::Index i = 0; i < ct.rows(); ++i)
    for (Eigen::Index j = 0; j < ct.cols(); ++j) {
      const double den = alpha(i) + gamma(j);
      if (den > 0.0) tr_s += ct(i, j) / den * wu(j, i);
    }
  const double one_minus_f =
      std::clamp(discarded + 0.5 * diff.trace().real() - tr_s.real(), 0.0, 1.0);
  return std::sqrt(one_minus_f * (2.0 - one_minus_f));
}

std::vector<std::string> copy_labels(const std::string& x, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t j = 1; j <= n; ++j) out.push_back(x + std::to_string(j));
  return out;
}

Matrix rest_then(const DensityOperator& rho, const std::string& x,
                 std::vector<std::string>& rest) {
  rest.clear();
  for (const auto& l : rho.partition().labels())
    if (l != x) rest.push_back(l);
  std::vector<std::string> order = rest;
  order.push_back(x);
  return reorder(rho, order).matrix();
}

Matrix matrix_power_kron(const Matrix& s, std::size_t n) {
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) out = kron(out, s);
  return out;
}

Matrix catalytic_alice_unitary(std::size_t n, std::size_t dx, std::size_t m) {
  const UnitaryOperator perm = controlled_permutation_unitary(n, dx, "X", "C");
  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(m * m);
  const auto na = static_cast<Eigen::Index>(perm.matrix().rows()) / nn;
  Matrix big = Matrix::Identity(na * mm, na * mm);
  for (Eigen::Index c = 0; c < na; ++c)
    for (Eigen::Index j = 0; j < nn; ++j)
      for (Eigen::Index c2 = 0; c2 < na; ++c2)
        for (Eigen::Index j2 = 0; j2 < nn; ++j2)
          big(c2 * mm + j2, c * mm + j) = perm.matrix()(c2 * nn + j2, c * nn + j);
  const Matrix bell = bell_basis_unitary(m).matrix();
  return kron(Matrix::Identity(na, na), bell) * big;
}

}  // namespace detail

namespace {

void check_sigma(const DensityOperator& rho, const std::string& x,
                 const DensityOperator& sigma, std::size_t n) {
  if (n == 0) throw DimensionError("copy number must be positive");
  if (sigma.dim() != rho.partition().dim_of(x))
    throw DimensionError("catalyst dimension does not match factor " + x);
  const auto copies = detail::copy_labels(x, n);
  for (const auto& l : rho.partition().labels())
    if (l != x && std::find(copies.begin(), copies.end(), l) != copies.end())
      throw LabelError("copy label " + l + " collides with an existing factor");
}

std::size_t dense_dim(std::size_t rest, std::size_t dx, std::size_t n) {
  std::size_t d = rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (d > kMaxDim) return kMaxDim + 1;
    d *= dx;
  }
  return d;
}

// Binomial coefficient as a double; exact for the sizes used here.
double binom(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return std::round(r);
}

double ipow(double x, long e) { return e == 0 ? 1.0 : std::pow(x, double(e)); }

// Derivative of det^k Sym^m(g) at g = diag(s0, s1) in direction r.
Matrix irrep_derivative(const Matrix& r, double s0, double s1, long k, long m) {
  const auto q = static_cast<Eigen::Index>(m + 1);
  Matrix dsym = Matrix::Zero(q, q);
  for (long i = 0; i <= m; ++i) {
    Complex d = 0.0;
    if (m - i > 0) d += double(m - i) * r(0, 0) * ipow(s0, m - i - 1) * ipow(s1, i);
    if (i > 0) d += double(i) * r(1, 1) * ipow(s0, m - i) * ipow(s1, i - 1);
    dsym(i, i) = d;
    if (i < m)
      dsym(i + 1, i) = r(1, 0) * ipow(s0, m - i - 1) * ipow(s1, i) *
                       std::sqrt(double((i + 1) * (m - i)));
    if (i > 0)
      dsym(i - 1, i) = r(0, 1) * ipow(s0, m - i) * ipow(s1, i - 1) *
                       std::sqrt(double(i * (m - i + 1)));
  }
  const double det = s0 * s1;
  Matrix out = ipow(det, k) * dsym;
  if (k > 0) {
    const Complex ddet = s1 * r(0, 0) + s0 * r(1, 1);
    for (long i = 0; i <= m; ++i)
      out(i, i) += double(k) * ipow(det, k - 1) * ddet * ipow(s0, m - i) * ipow(s1, i);
  }
  return out;
}

}  // namespace

DensityOperator convex_split_state(const DensityOperator& rho, const std::string& x,
                                   const DensityOperator& sigma, std::size_t n) {
  check_sigma(rho, x, sigma, n);
  std::vector<std::string> rest;
  const Matrix r = detail::rest_then(rho, x, rest);
  const std::size_t dx = sigma.dim();
  const std::size_t dr = rho.dim() / dx;
  check_capacity(dense_dim(dr, dx, n));

  const Matrix base = kron(r, detail::matrix_power_kron(sigma.matrix(), n - 1));
  std::vector<std::size_t> dims{dr};
  for (std::size_t i = 0; i < n; ++i) dims.push_back(dx);
  Matrix sum = Matrix::Zero(base.rows(), base.cols());
  for (std::size_t j = 1; j <= n; ++j) {
    std::vector<std::size_t> order{0};
    for (std::size_t p = 1; p <= n; ++p)
      order.push_back(p == j ? 1 : (p < j ? p + 1 : p));
    sum += permute_operator(base, dims, order);
  }
  sum /= double(n);

  std::vector<Factor> f;
  for (const auto& l : rest) f.push_back({l, rho.partition().dim_of(l)});
  for (const auto& l : detail::copy_labels(x, n)) f.push_back({l, dx});
  return DensityOperator(std::move(sum), SystemPartition(std::move(f)),
                         TraceMode::subnormalized);
}

double convex_split_error_dense(const DensityOperator& rho, const std::string& x,
                                const DensityOperator& sigma, std::size_t n) {
  const DensityOperator tau = convex_split_state(rho, x, sigma, n);
  if (rho.partition().size() == 1) return 0.0;
  std::vector<std::string> rest;
  for (const auto& l : rho.partition().labels())
    if (l != x) rest.push_back(l);
  return detail::pd_normalized(tau.matrix(), product_of_marginals(tau, rest).matrix());
}

double convex_split_error_blocks(const DensityOperator& rho, const std::string& x,
                                 const DensityOperator& sigma, std::size_t n) {
  check_sigma(rho, x, sigma, n);
  if (sigma.dim() != 2)
    throw DimensionError("block evaluation needs a qubit copy system");
  std::vector<std::string> rest;
  Matrix r = detail::rest_then(rho, x, rest);
  const auto dr = static_cast<Eigen::Index>(rho.dim() / 2);

  // Rotate X into the eigenbasis of sigma.
  const Eigh es = eigh(sigma.matrix());
  const double s0 = std::max(0.0, es.values(0));
  const double s1 = std::max(0.0, es.values(1));
  const Matrix v = kron(Matrix::Identity(dr, dr), es.vectors);
  r = v.adjoint() * r * v;

  Matrix rho_rest = Matrix::Zero(dr, dr);
  Matrix rho_x = Matrix::Zero(2, 2);
  for (Eigen::Index a = 0; a < dr; ++a) {
    rho_x += r.block(2 * a, 2 * a, 2, 2);
    for (Eigen::Index b = 0; b < dr; ++b)
      rho_rest(a, b) = r.block(2 * a, 2 * b, 2, 2).trace();
  }

  const double nn = double(n);
  double fid = 0.0;
  for (std::size_t k = 0; 2 * k <= n; ++k) {
    const long m = long(n - 2 * k);
    const double mult = binom(n, k) - (k > 0 ? binom(n, k - 1) : 0.0);
    const auto q = static_cast<Eigen::Index>(m + 1);
    Matrix tau = Matrix::Zero(dr * q, dr * q);
    for (Eigen::Index a = 0; a < dr; ++a)
      for (Eigen::Index b = 0; b < dr; ++b)
        tau.block(a * q, b * q, q, q) =
            irrep_derivative(r.block(2 * a, 2 * b, 2, 2), s0, s1, long(k), m) / nn;
    const Matrix omega = kron(rho_rest, irrep_derivative(rho_x, s0, s1, long(k), m) / nn);
    fid += mult * detail::root_fidelity(tau, omega);
  }
  fid = std::min(1.0, fid);
  return std::sqrt(std::max(0.0, 1.0 - fid * fid));
}

double convex_split_error(const DensityOperator& rho, const std::string& x,
                          const DensityOperator& sigma, std::size_t n) {
  check_sigma(rho, x, sigma, n);
  const std::size_t dx = sigma.dim();
  if (dense_dim(rho.dim() / dx, dx, n) <= 1024)
    return convex_split_error_dense(rho, x, sigma, n);
  if (dx == 2) return convex_split_error_blocks(rho, x, sigma, n);
  throw CapacityError("convex split state of " + std::to_string(n) +
                      " copies exceeds capacity");
}

double convex_split_params(double k, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 6.0))
    throw Error("delta must lie in (0, 1/6)");
  if (k < 0.0) throw Error("k must be non-negative");
  if (k <= 3.0 * delta) return 1.0;
  return std::ceil(8.0 * std::exp2(k) * std::log2(k / delta) / (delta * delta * delta));
}

namespace {

// Largest n for which the exact error is computable.
bool error_feasible(std::size_t d_rest, std::size_t dx, std::size_t n) {
  if (dense_dim(d_rest, dx, n) <= 1024) return true;
  return dx == 2 && n <= 256;
}

}  // namespace

bool convex_split_feasible(const DensityOperator& rho, const std::string& x, double n) {
  const std::size_t dx = rho.partition().dim_of(x);
  return n >= 1.0 && n <= 1e6 && error_feasible(rho.dim() / dx, dx, std::size_t(n));
}

ProtocolTranscript catalytic_decouple_cs(const DensityOperator& rho,
                                         const std::string& a, const std::string& e,
                                         double eps, double delta,
                                         const CatalyticOptions& opt) {
  if (rho.partition().size() != 2 || !rho.partition().contains(a) ||
      !rho.partition().contains(e))
    throw LabelError("catalytic decoupling expects a state on exactly {" + a +
                     ", " + e + "}");
  ProtocolTranscript t;
  t.protocol = "catalytic_decouple_cs";
  t.input = rho;
  const bool on_a = opt.side == CatalystSide::a;
  const std::string x = on_a ? a : e;
  const std::string other = on_a ? e : a;

  // The catalyst unit is the optimizer of the max-information with its
  // marginal on the copied side.
  const EntropyValue iv = on_a ? imax(rho, {e}, {a}) : imax(rho, {a}, {e});
  if (!iv.witness_sigma) throw Error("max-information solver returned no witness");
  DensityOperator sigma = *iv.witness_sigma;
  {
    Matrix s = 0.5 * (sigma.matrix() + sigma.matrix().adjoint());
    s /= s.trace().real();
    sigma = DensityOperator::from_matrix(s, x);
  }
  const double k = std::max(0.0, iv.value);
  t.log("imax", "k = " + std::to_string(k));
  if (eps > 0.0) t.flags.push_back("unsmoothed_k");

  t.prescribed_n = convex_split_params(k, delta);
  std::size_t n = 0;
  const std::size_t dx = rho.partition().dim_of(x);
  const std::size_t drest = rho.partition().dim_of(other);
  if (opt.n_override) {
    n = *opt.n_override;
    if (n == 0) throw DimensionError("n_override must be positive");
  } else {
    if (t.prescribed_n > 1e6 || !error_feasible(drest, dx, std::size_t(t.prescribed_n)))
      throw CapacityError("prescribed copy number " + std::to_string(t.prescribed_n) +
                          " is infeasible; supply n_override");
    n = std::size_t(t.prescribed_n);
  }
  if (t.prescribed_n > 1e6 || !error_feasible(drest, dx, std::size_t(t.prescribed_n)))
    t.flags.push_back("prescribed_n_infeasible");
  if (!error_feasible(drest, dx, n))
    throw CapacityError("copy number " + std::to_string(n) + " exceeds capacity");
  t.used_n = n;
  const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(double(n)) - 1e-12));
  t.catalyst = CatalystSpec{sigma, n, k, m, delta};
  t.remainder_bits = std::log2(double(m));
  t.metrics["k_bits"] = k;
  t.metrics["m"] = double(m);

  const double analytic = convex_split_error(rho, x, sigma, n);
  t.metrics["convex_split_pd"] = analytic;
  t.achieved_error = analytic;
  t.log("convex_split", "n = " + std::to_string(n));
  t.unitaries = {"controlled_permutation", "bell_basis"};

  const std::size_t sim_dim = dense_dim(drest * m * m, dx, n);
  if (!on_a) {
    t.flags.push_back("lemma_orientation");
    return t;
  }
  if (opt.analytic_only || sim_dim > 2048) {
    t.flags.push_back("analytic_bell_identity");
    return t;
  }

  // Dense simulation: rho_{A1 E} (x) sigma^{(n-1)} (x) control, with the
  // control mixed over its first n basis states of an m^2 space.
  const auto copies = detail::copy_labels(a, n);
  const std::string ctrl = a + "_ctrl";
  const std::string bell1 = a + "_bell1", bell2 = a + "_bell2";
  std::vector<std::string> order{a, e};
  Matrix state = reorder(rho, order).matrix();
  state = kron(state, detail::matrix_power_kron(sigma.matrix(), n - 1));
  const auto mm = static_cast<Eigen::Index>(m * m);
  Matrix ctl = Matrix::Zero(mm, mm);
  for (std::size_t j = 0; j < n; ++j) ctl(Eigen::Index(j), Eigen::Index(j)) = 1.0 / double(n);
  state = kron(state, ctl);
  std::vector<Factor> f{{copies[0], dx}, {e, drest}};
  for (std::size_t j = 1; j < n; ++j) f.push_back({copies[j], dx});
  f.push_back({ctrl, m * m});
  DensityOperator eta(std::move(state), SystemPartition(f));

  std::vector<Factor> pf;
  for (const auto& l : copies) pf.push_back({l, dx});
  pf.push_back({ctrl, m * m});
  std::vector<Factor> po;
  for (const auto& l : copies) po.push_back({l, dx});
  po.push_back({bell1, m});
  po.push_back({bell2, m});
  const UnitaryOperator ua(detail::catalytic_alice_unitary(n, dx, m), SystemPartition(pf),
                           SystemPartition(po));
  std::vector<std::string> on = copies;
  on.push_back(ctrl);
  eta = apply_unitary(ua, eta, on);
  t.log("controlled_permutation", "control dim " + std::to_string(m * m));
  t.log("bell_basis", "m = " + std::to_string(m));
  eta = partial_trace(eta, {bell2});
  t.log("trace_remainder", bell2);

  const double simulated = detail::pd_normalized(
      eta.matrix(), product_of_marginals(eta, {e}).matrix());
  t.metrics["simulated_pd"] = simulated;
  t.achieved_error = simulated;
  t.a1_labels = copies;
  t.a1_labels.push_back(bell1);
  t.a2_labels = {bell2};

  // The A-side output should be the convex split marginal next to tau_m.
  const DensityOperator split = convex_split_state(rho, a, sigma, n);
  const Matrix expected = kron(marginal(split, copies).matrix(),
                               Matrix::Identity(Eigen::Index(m), Eigen::Index(m)) / double(m));
  std::vector<std::string> keep = copies;
  keep.push_back(bell1);
  t.metrics["a1_marginal_deviation"] =
      (marginal(eta, keep).matrix() - expected).cwiseAbs().maxCoeff();
  t.metrics["e_marginal_deviation"] =
      (marginal(eta, {e}).matrix() - marginal(rho, {e}).matrix()).cwiseAbs().maxCoeff();
  return t;
}

bool ProtocolTranscript::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

}  // namespace catdec
