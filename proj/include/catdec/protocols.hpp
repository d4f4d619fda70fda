#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catdec/entropies.hpp"
#include "catdec/metrics.hpp"
#include "catdec/qstate.hpp"

namespace catdec {

struct CatalystSpec {
  DensityOperator sigma;
  std::size_t n = 1;
  double k = 0.0;
  std::size_t m = 1;
  double delta = 0.0;
};

struct FlatDecomposition {
  /// Bins 0..Q+1; bin Q+1 is the tail. Projectors act on A.
  std::vector<Matrix> projectors;
  std::vector<double> weights;
  int Q = 0;
  double tail_weight() const { return weights.empty() ? 0.0 : weights.back(); }
};

struct ProtocolStep {
  std::string op;
  std::string detail;
};

struct ProtocolTranscript {
  std::string protocol;
  std::vector<ProtocolStep> steps;
  double remainder_bits = 0.0;
  double achieved_error = 0.0;
  double comm_qubits = 0.0;
  std::optional<CatalystSpec> catalyst;
  /// Names of the unitaries applied, in order.
  std::vector<std::string> unitaries;
  /// Copy number prescribed by the convex split bound (may exceed any feasible size).
  double prescribed_n = 0.0;
  std::size_t used_n = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
  std::vector<std::string> flags;

  // Data needed by the conversion routines.
  std::optional<DensityOperator> input;
  std::optional<UnitaryOperator> unitary;
  std::vector<std::string> a1_labels;
  std::vector<std::string> a2_labels;
  std::optional<ProductWitness> witness;

  void log(std::string op, std::string detail = {}) {
    steps.push_back({std::move(op), std::move(detail)});
  }
  bool has_flag(const std::string& f) const;
};

struct EmbezzlingState {
  std::size_t n = 0;
  /// The state on A'B', present only when it fits in capacity.
  std::optional<PureState> vector;
  /// Schmidt coefficients (squared amplitudes), non-increasing.
  RealVector schmidt;
};

struct StandardDecoupleOptions {
  std::optional<UnitaryOperator> unitary;
  int trials = 64;
  std::uint64_t seed = 0;
  MinProductOptions product{};
};

/// Decoupling by a unitary on A = A1 A2 followed by tracing A2. E is every
/// factor not in A1 or A2.
ProtocolTranscript standard_decouple(const DensityOperator& rho,
                                     const Labels& a1, const Labels& a2,
                                     const StandardDecoupleOptions& opt = {});

enum class CatalystSide { a, e };

/// (1/n) sum_j rho_{A X_j} (x) sigma^{(x)(n-1)} on the other copies, where X
/// is the single factor `x` and the copies are labelled x+"1".."n".
DensityOperator convex_split_state(const DensityOperator& rho,
                                   const std::string& x,
                                   const DensityOperator& sigma, std::size_t n);

/// P(tau, tau_rest (x) tau_{X^n}) for the convex-split state; uses a
/// Schur-Weyl block decomposition when X is a qubit and the dense state is
/// too large.
double convex_split_error(const DensityOperator& rho, const std::string& x,
                          const DensityOperator& sigma, std::size_t n);
double convex_split_error_dense(const DensityOperator& rho, const std::string& x,
                                const DensityOperator& sigma, std::size_t n);
double convex_split_error_blocks(const DensityOperator& rho, const std::string& x,
                                 const DensityOperator& sigma, std::size_t n);

/// Copy number from the convex split lemma; returned as a double since it
/// overflows any integer type for moderate k.
double convex_split_params(double k, double delta);
/// Whether the exact error at n copies of `x` is within capacity.
bool convex_split_feasible(const DensityOperator& rho, const std::string& x, double n);

struct CatalyticOptions {
  std::optional<std::size_t> n_override;
  CatalystSide side = CatalystSide::a;
  /// Skip the dense unitary simulation even when it fits.
  bool analytic_only = false;
};

/// Catalytic decoupling by convex split and Bell compression. `a` and `e`
/// must each be a single factor of rho.
ProtocolTranscript catalytic_decouple_cs(const DensityOperator& rho,
                                         const std::string& a,
                                         const std::string& e, double eps,
                                         double delta,
                                         const CatalyticOptions& opt = {});

/// Uniform mixture of the 4^k Pauli strings on k qubits.
QuantumChannel pauli_erasure_channel(int k, const std::string& label = "A");

struct ErasureResult {
  QuantumChannel channel;
  std::size_t N = 1;
  /// The N unitaries whose uniform mixture is the channel.
  std::vector<Matrix> unitaries;
  /// P of the erased state to the transcript's product witness.
  double error = 0.0;
};
ErasureResult erasure_from_decoupling(const ProtocolTranscript& t);

/// Builds decoupling with a k-qubit remainder from N = 4^k unitaries on A.
ProtocolTranscript decoupling_from_erasure(const DensityOperator& rho,
                                           const Labels& a,
                                           const std::vector<Matrix>& unitaries);

EmbezzlingState embezzling_state(std::size_t n);

struct EmbezzleResult {
  double purified_distance = 0.0;
  /// Permutation of the joint Schmidt basis that realizes the reordering:
  /// target index for each (mu index, psi index) pair.
  std::vector<std::size_t> permutation;
};
/// Purified distance between mu (x) psi and mu after the best local
/// reordering, from Schmidt coefficients alone.
EmbezzleResult embezzle(const EmbezzlingState& mu, const RealVector& psi_schmidt);
RealVector schmidt_coefficients(const PureState& psi, const Labels& a);

FlatDecomposition flat_decomposition(const Matrix& rho_a, double eps);

struct EmbezzleDecoupleOptions {
  int trials = 64;
  std::uint64_t seed = 0;
};
ProtocolTranscript catalytic_decouple_embezzle(
    const DensityOperator& rho, const std::string& a, const std::string& e,
    double eps, std::size_t embezzle_n, const EmbezzleDecoupleOptions& opt = {});

/// Coherent state merging of A to Bob. Labels name single factors of psi;
/// `b` may be empty.
ProtocolTranscript merge(const PureState& psi, const std::string& a,
                         const std::string& b, const std::string& r, double eps,
                         double delta, std::optional<std::size_t> n_override);

struct QsrWitness {
  DensityOperator ancilla;  // sigma_{A''}
  Matrix unitary;           // on A C A'' in that order
  std::optional<DensityOperator> smoothed;
};
ProtocolTranscript qsr_evaluate(const PureState& psi, const std::string& a,
                                const std::string& b, const std::string& c,
                                const std::string& r, const QsrWitness& w,
                                double eps, std::optional<std::size_t> n_override);

struct CheckReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
  std::string anchor;
  std::vector<std::string> flags;
  std::map<std::string, double> details;
};

/// I_max(E;A1A2) <= I_max(E;A1) + 2 log|A2|.
CheckReport check_nonlocking(const DensityOperator& rho, const Labels& e,
                             const Labels& a1, const Labels& a2,
                             double tolerance = 1e-5);
/// remainder_bits >= I_max lower bound / 2. Rejects upper-bound estimates.
CheckReport check_converse_eq7(const ProtocolTranscript& t, const EntropyValue& imax_lb,
                               double tolerance = 1e-6);

struct CptpConverseOptions {
  int samples = 64;
  std::uint64_t seed = 0;
};
/// Haar-averaged decoupling-and-randomizing premise and the converse
/// inequality with explicit constants at the measured error.
CheckReport check_cptp_converse(const DensityOperator& rho, const Labels& a,
                                const QuantumChannel& ch, double eps,
                                const CptpConverseOptions& opt = {});

}  // namespace catdec
