#include <algorithm>
#include <cmath>
#include <random>

#include "entropies_internal.hpp"

namespace catdec {

using namespace detail;

namespace {

// rho_AE in (A, E) order restricted to A (x) supp rho_E.
struct Restricted {
  Matrix rho;    // on A (x) E'
  Matrix rho_e;  // on E', full rank
  Matrix basis;  // E -> E' columns
  std::size_t da = 1, de = 1;
};

Restricted restrict_to_support(const Matrix& m, std::size_t da, std::size_t de) {
  Restricted r;
  r.da = da;
  const Matrix me = partial_trace_raw(m, std::vector<std::size_t>{da, de}, {true, false});
  r.basis = support_basis(me);
  r.de = static_cast<std::size_t>(r.basis.cols());
  const auto ida = static_cast<Eigen::Index>(da);
  const Matrix lift = kron(Matrix::Identity(ida, ida), r.basis);
  r.rho = lift.adjoint() * m * lift;
  r.rho_e = r.basis.adjoint() * me * r.basis;
  return r;
}

// min Tr X s.t. X (x) rho_E >= rho_AE; returns (value, X).
std::pair<sdp::Solution, Matrix> imax_program(const Restricted& r) {
  sdp::Model model;
  auto x = model.hermitian(static_cast<Eigen::Index>(r.da));
  model.psd(kron(x, r.rho_e) - r.rho);
  model.minimize(trace(x));
  auto sol = model.solve();
  Matrix xv = sol.value(x);
  return {std::move(sol), std::move(xv)};
}

EntropyValue imax_of_matrix(const Matrix& m, std::size_t da, std::size_t de) {
  const auto r = restrict_to_support(m, da, de);
  auto [sol, x] = imax_program(r);
  EntropyValue v;
  attach_solution(v, sol, BoundKind::upper);
  v.value = std::log2(sol.primal_value);
  x /= x.trace().real();
  v.witness_sigma = as_state(x, SystemPartition{{"A", da}});
  return v;
}

// D_max(m || (m_A / Tr m) (x) m_E).
double imax_alt_of_matrix(const Matrix& m, std::size_t da, std::size_t de) {
  const std::vector<std::size_t> dims{da, de};
  const Matrix ma = partial_trace_raw(m, dims, {false, true});
  const Matrix me = partial_trace_raw(m, dims, {true, false});
  const auto d = dmax(m, kron(ma / m.trace().real(), me));
  return d.infinite ? std::numeric_limits<double>::infinity() : d.value;
}

}  // namespace

std::string to_string(ImaxMode m) {
  switch (m) {
    case ImaxMode::fixed_marginal_upper: return "fixed_marginal_upper";
    case ImaxMode::alt_variant: return "alt_variant";
    case ImaxMode::tiny_oracle: return "tiny_oracle";
  }
  return "?";
}

EntropyValue imax(const DensityOperator& rho, const Labels& e, const Labels& a) {
  require_normalized(rho);
  const Matrix m = ordered_matrix(rho, a, e);
  const auto p = ordered_partition(rho, a, e);
  EntropyValue v = imax_of_matrix(m, p.dim_of(a), p.dim_of(e));
  v.witness_sigma = as_state(v.witness_sigma->matrix(), p.restrict_to(a));
  return v;
}

EntropyValue imax_alt(const DensityOperator& rho, const Labels& a, const Labels& b) {
  require_normalized(rho);
  const Matrix m = ordered_matrix(rho, a, b);
  const auto p = ordered_partition(rho, a, b);
  const std::vector<std::size_t> dims{p.dim_of(a), p.dim_of(b)};
  return dmax(m, kron(partial_trace_raw(m, dims, {false, true}),
                      partial_trace_raw(m, dims, {true, false})));
}

EntropyValue imax_conditional(const DensityOperator& rho, const Labels& e,
                              const Labels& a) {
  require_normalized(rho);
  const auto p = ordered_partition(rho, a, e);
  const auto r = restrict_to_support(ordered_matrix(rho, a, e), p.dim_of(a), p.dim_of(e));
  const auto ida = static_cast<Eigen::Index>(r.da);
  const Matrix inv = kron(Matrix::Identity(ida, ida),
                          hermitian_function(r.rho_e, [](double x) { return 1.0 / std::sqrt(x); }));
  const Matrix omega = inv * r.rho * inv;
  // Conditioning on A: move A to the second position.
  const std::vector<std::size_t> dims{r.da, r.de}, order{1, 0};
  EntropyValue v = hmin_matrix(permute_operator(omega, dims, order), r.de, r.da);
  v.value = -v.value;
  if (v.bound_kind == BoundKind::lower) v.bound_kind = BoundKind::upper;
  v.witness_sigma.reset();
  return v;
}

namespace {

struct Candidate {
  double value;
  Matrix state;  // on A (x) E
};

Matrix lift_state(const Restricted& r, const Matrix& bar) {
  const auto ida = static_cast<Eigen::Index>(r.da);
  const Matrix lift = kron(Matrix::Identity(ida, ida), r.basis);
  return lift * bar * lift.adjoint();
}

// Relaxation with the smoothed marginal replaced by rho_E; its optimizer is
// then scored by the exact I_max.
Candidate fixed_marginal_candidate(const Matrix& m, std::size_t da, std::size_t de,
                                   double eps, sdp::Status& status) {
  const auto r = restrict_to_support(m, da, de);
  sdp::Model model;
  auto x = model.hermitian(static_cast<Eigen::Index>(r.da));
  auto bar = ball_variable(model, r.rho, eps);
  model.psd(kron(x, r.rho_e) - bar);
  model.minimize(trace(x));
  const auto sol = model.solve();
  if (sol.status == sdp::Status::infeasible) throw Error("smoothing SDP infeasible");
  status = sol.status;
  Matrix state = clean_psd(lift_state(r, sol.value(bar)));
  return {imax_of_matrix(state, da, de).value, state};
}

// Alternates between smoothing for fixed marginals and updating them.
Candidate alt_candidate(const Matrix& m, std::size_t da, std::size_t de, double eps,
                        int rounds, sdp::Status& status) {
  const std::vector<std::size_t> dims{da, de};
  Candidate best{imax_alt_of_matrix(m, da, de), m};
  Matrix wa = partial_trace_raw(m, dims, {false, true});
  Matrix we = partial_trace_raw(m, dims, {true, false});
  status = sdp::Status::optimal;
  for (int round = 0; round < rounds; ++round) {
    const Matrix prod = kron(wa, we);
    const Matrix basis = support_basis(prod);
    const Matrix inside = basis.adjoint() * m * basis;
    if (m.trace().real() - inside.trace().real() > 10 * tol::psd) break;
    sdp::Model model;
    auto t = model.real_scalar();
    auto bar = ball_variable(model, inside, eps);
    model.psd(kron(t, basis.adjoint() * prod * basis) - bar);
    model.minimize(t);
    const auto sol = model.solve();
    if (sol.status == sdp::Status::infeasible) throw Error("smoothing SDP infeasible");
    if (!sol.optimal()) status = sol.status;
    const Matrix state = clean_psd(basis * sol.value(bar) * basis.adjoint());
    const double value = imax_alt_of_matrix(state, da, de);
    if (value < best.value - 1e-9) {
      best = {value, state};
    } else if (round > 0) {
      break;
    }
    wa = partial_trace_raw(state, dims, {false, true});
    wa /= wa.trace().real();
    we = partial_trace_raw(state, dims, {true, false});
  }
  return best;
}

// Largest mixing weight toward `target` that stays in the ball around m.
Matrix pull_into_ball(const Matrix& m, const Matrix& target, double eps) {
  auto inside = [&](double lam) {
    return purified_distance(m, lam * target + (1 - lam) * m) <= eps;
  };
  if (inside(1.0)) return target;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo * target + (1 - lo) * m;
}

}  // namespace

EntropyValue imax_smooth(const DensityOperator& rho, const Labels& e,
                         const Labels& a, double eps, ImaxMode mode,
                         const ImaxSmoothOptions& opt) {
  if (!(eps >= 0.0 && eps < 1.0)) throw Error("smoothing parameter must lie in [0, 1)");
  require_normalized(rho);
  const Matrix m = ordered_matrix(rho, a, e);
  const auto p = ordered_partition(rho, a, e);
  const std::size_t da = p.dim_of(a), de = p.dim_of(e);
  if (mode == ImaxMode::tiny_oracle && (da > 3 || de > 3))
    throw CapacityError("tiny_oracle supports at most dimension 3 per factor");

  EntropyValue v;
  v.epsilon = eps;
  v.bound_kind = BoundKind::upper;
  sdp::Status status = sdp::Status::optimal;

  if (mode == ImaxMode::alt_variant) {
    Candidate c = eps == 0.0 ? Candidate{imax_alt_of_matrix(m, da, de), m}
                             : alt_candidate(m, da, de, eps, opt.alt_rounds, status);
    v.value = c.value;
    v.infinite = std::isinf(c.value);
    v.witness_state = as_state(c.state, p);
    v.solver_status = status;
    return v;
  }

  const EntropyValue base = imax_of_matrix(m, da, de);
  Candidate best{base.value, m};
  if (eps == 0.0) {
    v = base;
    v.witness_sigma = as_state(base.witness_sigma->matrix(), p.restrict_to(a));
    v.witness_state = as_state(m, p);
    return v;
  }
  auto consider = [&](const Candidate& c) {
    if (c.value < best.value) best = c;
  };
  consider(fixed_marginal_candidate(m, da, de, eps, status));

  if (mode == ImaxMode::tiny_oracle) {
    sdp::Status ignored;
    consider(alt_candidate(m, da, de, eps, opt.alt_rounds, ignored));
    // Random local search inside the ball, scored by the exact SDP.
    std::mt19937_64 gen(opt.seed);
    double step = 0.2;
    for (int k = 0; k < opt.oracle_samples; ++k) {
      const Matrix dir =
          sample_density(da * de, da * de, derive_seed(opt.seed, std::uint64_t(k))).matrix();
      const double shrink = std::uniform_real_distribution<double>(0.9, 1.0)(gen);
      Matrix trial = shrink * ((1 - step) * best.state + step * dir);
      trial = clean_psd(pull_into_ball(m, trial, eps));
      if (purified_distance(m, trial) > eps) continue;
      const double value = imax_of_matrix(trial, da, de).value;
      if (value < best.value) {
        best = {value, trial};
      } else {
        step = std::max(1e-3, step * 0.9);
      }
    }
    const double lower = std::max(-hmin_smooth(rho, a, e, eps).value,
                                  -hmin_smooth(rho, e, a, eps).value);
    v.lower_bound = lower;
    v.certificate = best.value - lower;
    if (best.value - lower <= 1e-2) v.bound_kind = BoundKind::exact;
  }
  v.value = best.value;
  v.witness_state = as_state(best.state, p);
  v.solver_status = status;
  return v;
}

}  // namespace catdec
