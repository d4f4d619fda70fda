#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catdec/metrics.hpp"
#include "catdec/qstate.hpp"
#include "catdec/sdp.hpp"

namespace catdec {

using Labels = std::vector<std::string>;

enum class BoundKind { exact, upper, lower };
std::string to_string(BoundKind k);

/// One-shot quantity in bits. `infinite` marks +inf (e.g. D_max with a
/// support mismatch); `value` is then meaningless.
struct EntropyValue {
  double value = 0.0;
  double epsilon = 0.0;
  bool infinite = false;
  BoundKind bound_kind = BoundKind::exact;
  std::optional<DensityOperator> witness_state;
  std::optional<DensityOperator> witness_sigma;
  /// Duality gap of the SDP that produced the value.
  std::optional<double> certificate;
  /// Certified lower bound when the value itself is only an upper bound.
  std::optional<double> lower_bound;
  sdp::Status solver_status = sdp::Status::optimal;
};

struct SecondOrderEstimate {
  double mutual_info = 0.0;
  double variance = 0.0;
  int n = 1;
  double epsilon = 0.0;
  double rate = 0.0;
};

struct MutualInfo {
  double I = 0.0;
  double V = 0.0;
};

/// Von Neumann entropy of the marginal on `subsystems` (all factors if empty).
double von_neumann(const DensityOperator& rho, const Labels& subsystems = {});
/// Shannon/von Neumann entropy of a spectrum, in bits.
double entropy_of_spectrum(const RealVector& p);
/// I(A:B) and the information variance, with B the complement of `a` within
/// the factors of `a` and `b`.
MutualInfo mutual_info(const DensityOperator& rho, const Labels& a, const Labels& b);
double cond_mutual_info(const DensityOperator& rho, const Labels& a,
                        const Labels& b, const Labels& c);

/// D_max(rho || sigma) in closed form on the support of sigma.
EntropyValue dmax(const Matrix& rho, const Matrix& sigma);
EntropyValue dmax(const DensityOperator& rho, const DensityOperator& sigma);
/// Same quantity from min t s.t. t sigma >= rho.
EntropyValue dmax_sdp(const Matrix& rho, const Matrix& sigma);

/// H_min(A|B); closed form when `b` is empty.
EntropyValue hmin(const DensityOperator& rho, const Labels& a, const Labels& b);
/// H_max(A|B) by the fidelity maximization over sigma_B.
EntropyValue hmax(const DensityOperator& rho, const Labels& a, const Labels& b);
/// H_max(A|B) as -H_min(A|C) on a purification ABC.
EntropyValue hmax_dual(const DensityOperator& rho, const Labels& a, const Labels& b);

/// -log2 min{Tr s : 1_A (x) s >= m} for an arbitrary PSD m on A (x) B.
EntropyValue hmin_matrix(const Matrix& m, std::size_t da, std::size_t db);

EntropyValue hmin_smooth(const DensityOperator& rho, const Labels& a,
                         const Labels& b, double eps);
EntropyValue hmax_smooth(const DensityOperator& rho, const Labels& a,
                         const Labels& b, double eps);
/// Smooth min-entropy of a probability vector over the trace-distance ball:
/// the largest entries are cut down until mass eps is removed.
double hmin_smooth_trace_classical(const RealVector& p, double eps);
/// Smooth max-entropy of a probability vector over the purified-distance
/// ball. The optimum is diagonal and sorted like p, so it reduces to
/// minimizing sum x subject to <sqrt p, x> >= sqrt(1 - eps^2), |x| <= 1.
double hmax_smooth_classical(const RealVector& p, double eps);

enum class SmoothingBall { purified, trace };
EntropyValue h0(const DensityOperator& rho);
EntropyValue h0_smooth(const DensityOperator& rho, double eps, SmoothingBall ball);

/// I_max(E;A) = min over states sigma_A of D_max(rho_AE || sigma_A (x) rho_E).
EntropyValue imax(const DensityOperator& rho, const Labels& e, const Labels& a);
/// D_max(rho || rho_A (x) rho_B).
EntropyValue imax_alt(const DensityOperator& rho, const Labels& a, const Labels& b);
/// -H_min(E|A) of rho_E^{-1/2} rho_AE rho_E^{-1/2}, restricted to supp rho_E.
EntropyValue imax_conditional(const DensityOperator& rho, const Labels& e,
                              const Labels& a);

enum class ImaxMode { fixed_marginal_upper, alt_variant, tiny_oracle };
std::string to_string(ImaxMode m);

struct ImaxSmoothOptions {
  int alt_rounds = 20;
  int oracle_samples = 200;
  std::uint64_t seed = 0;
};
EntropyValue imax_smooth(const DensityOperator& rho, const Labels& e,
                         const Labels& a, double eps, ImaxMode mode,
                         const ImaxSmoothOptions& opt = {});

/// Inverse standard normal CDF.
double normal_cdf_inv(double p);
SecondOrderEstimate second_order_rate(const DensityOperator& rho, const Labels& a,
                                      const Labels& e, int n, double eps);

}  // namespace catdec
