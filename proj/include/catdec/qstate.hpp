#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace catdec {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Numerical tolerances shared by every module.
namespace tol {
inline constexpr double herm = 1e-9;
inline constexpr double psd = 1e-9;
inline constexpr double unitary = 1e-9;
inline constexpr double trace = 1e-10;
}  // namespace tol

/// Largest ambient dimension a dense operator may have.
inline constexpr std::size_t kMaxDim = 4096;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct LabelError : Error {
  using Error::Error;
};
struct StateError : Error {
  using Error::Error;
};

struct Factor {
  std::string label;
  std::size_t dim = 1;
  bool operator==(const Factor&) const = default;
};

/// Ordered tensor-product decomposition of a Hilbert space.
class SystemPartition {
 public:
  SystemPartition() = default;
  explicit SystemPartition(std::vector<Factor> factors);
  SystemPartition(std::initializer_list<Factor> factors)
      : SystemPartition(std::vector<Factor>(factors)) {}

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  std::size_t total_dim() const;
  std::vector<std::string> labels() const;
  std::vector<std::size_t> dims() const;

  bool contains(const std::string& label) const;
  /// Position of a label; throws LabelError when absent.
  std::size_t index_of(const std::string& label) const;
  std::size_t dim_of(const std::string& label) const;
  /// Product of the dims of the given labels.
  std::size_t dim_of(std::span<const std::string> labels) const;

  SystemPartition concat(const SystemPartition& other) const;
  /// Keeps only the given labels, in this partition's order.
  SystemPartition restrict_to(std::span<const std::string> labels) const;
  SystemPartition without(std::span<const std::string> labels) const;
  SystemPartition renamed(const std::string& from, const std::string& to) const;

  bool operator==(const SystemPartition&) const = default;

 private:
  std::vector<Factor> factors_;
};

enum class TraceMode { normalized, subnormalized };

/// Hermitian positive semidefinite operator with trace at most one.
class DensityOperator {
 public:
  DensityOperator(Matrix m, SystemPartition p,
                  TraceMode mode = TraceMode::normalized);

  const Matrix& matrix() const { return m_; }
  const SystemPartition& partition() const { return p_; }
  TraceMode trace_mode() const { return mode_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  double trace() const { return m_.trace().real(); }

  /// Single-factor state with a default label.
  static DensityOperator from_matrix(Matrix m, const std::string& label = "A",
                                     TraceMode mode = TraceMode::normalized);

 private:
  Matrix m_;
  SystemPartition p_;
  TraceMode mode_;
};

class PureState {
 public:
  PureState(Vector v, SystemPartition p);
  const Vector& vector() const { return v_; }
  const SystemPartition& partition() const { return p_; }
  DensityOperator density() const;

 private:
  Vector v_;
  SystemPartition p_;
};

/// Unitary or isometry (U^dagger U = 1 on the input space).
class UnitaryOperator {
 public:
  UnitaryOperator(Matrix m, SystemPartition in, SystemPartition out);
  UnitaryOperator(Matrix m, SystemPartition p) : UnitaryOperator(m, p, p) {}
  const Matrix& matrix() const { return m_; }
  const SystemPartition& in_partition() const { return in_; }
  const SystemPartition& out_partition() const { return out_; }

 private:
  Matrix m_;
  SystemPartition in_;
  SystemPartition out_;
};

class QuantumChannel {
 public:
  QuantumChannel(std::vector<Matrix> kraus, SystemPartition in,
                 SystemPartition out);
  QuantumChannel(std::vector<Matrix> kraus, SystemPartition p)
      : QuantumChannel(std::move(kraus), p, p) {}
  static QuantumChannel from_unitary(const UnitaryOperator& u);
  static QuantumChannel identity(const SystemPartition& p);

  const std::vector<Matrix>& kraus() const { return kraus_; }
  const SystemPartition& in_partition() const { return in_; }
  const SystemPartition& out_partition() const { return out_; }

 private:
  std::vector<Matrix> kraus_;
  SystemPartition in_;
  SystemPartition out_;
};

// Checks used by constructors and by test builds.
double hermiticity_defect(const Matrix& m);
double unitarity_defect(const Matrix& u);
void check_capacity(std::size_t dim);

// ---------------------------------------------------------------------------
// Linear-algebra helpers on raw matrices.

Matrix kron(const Matrix& a, const Matrix& b);
Matrix dagger(const Matrix& m);
/// Hermitian eigendecomposition with eigenvalues ascending.
struct Eigh {
  RealVector values;
  Matrix vectors;
};
Eigh eigh(const Matrix& h);
/// Applies f to the spectrum of a Hermitian matrix.
template <class F>
Matrix hermitian_function(const Matrix& h, F&& f) {
  Eigh e = eigh(h);
  RealVector fv = e.values.unaryExpr(f);
  return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}
/// Square root with eigenvalues below tol::psd clamped to zero.
Matrix psd_sqrt(const Matrix& h);
/// Eigenvalues clamped to zero when in [-tol::psd, 0).
RealVector clamped_spectrum(const Matrix& h);
double trace_norm(const Matrix& m);
/// Orthonormal basis of the support (eigenvalues above tol) as columns.
Matrix support_basis(const Matrix& h, double tol = tol::psd);

/// Permutes tensor factors of a square operator; `order[k]` names the old
/// factor placed at new position k.
Matrix permute_operator(const Matrix& m, std::span<const std::size_t> dims,
                        std::span<const std::size_t> order);
Vector permute_vector(const Vector& v, std::span<const std::size_t> dims,
                      std::span<const std::size_t> order);
/// Partial trace of a raw matrix over the factors flagged in `drop`.
Matrix partial_trace_raw(const Matrix& m, std::span<const std::size_t> dims,
                         const std::vector<bool>& drop);

// ---------------------------------------------------------------------------
// Operations on states.

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
PureState tensor(const PureState& a, const PureState& b);
DensityOperator partial_trace(const DensityOperator& rho,
                              std::span<const std::string> drop);
DensityOperator partial_trace(const DensityOperator& rho,
                              std::initializer_list<std::string> drop);
/// Marginal on the listed labels, in partition order.
DensityOperator marginal(const DensityOperator& rho,
                         std::span<const std::string> keep);
DensityOperator marginal(const DensityOperator& rho,
                         std::initializer_list<std::string> keep);
/// Reorders factors to the given label order.
DensityOperator reorder(const DensityOperator& rho,
                        std::span<const std::string> order);
PureState reorder(const PureState& psi, std::span<const std::string> order);

/// Eigendecomposition-based purification, |psi> = sum sqrt(l_i)|i>|i_ref>,
/// eigenvalues descending with ties in index order; ref dim = rank.
PureState purify(const DensityOperator& rho, const std::string& ref_label);

DensityOperator apply_channel(const QuantumChannel& ch,
                              const DensityOperator& rho,
                              std::span<const std::string> on);
DensityOperator apply_unitary(const UnitaryOperator& u,
                              const DensityOperator& rho,
                              std::span<const std::string> on);
PureState apply_unitary(const UnitaryOperator& u, const PureState& psi,
                        std::span<const std::string> on);

/// Choi state (id (x) ch)(Phi+) on factors (reference "R", channel output).
DensityOperator choi_state(const QuantumChannel& ch,
                           const std::string& ref_label = "R");

UnitaryOperator sample_haar_unitary(std::size_t dim, std::uint64_t seed,
                                    const std::string& label = "A");
Matrix haar_unitary_matrix(std::size_t dim, std::uint64_t seed);
DensityOperator sample_density(std::size_t dim, std::size_t rank,
                               std::uint64_t seed,
                               const std::string& label = "A");
PureState sample_pure(const SystemPartition& p, std::uint64_t seed);

// Common fixtures.
DensityOperator maximally_mixed(std::size_t dim, const std::string& label);
PureState maximally_entangled(std::size_t dim, const std::string& a,
                              const std::string& b);
DensityOperator basis_state(std::size_t dim, std::size_t index,
                            const std::string& label);

/// Bell-basis rotation, column m*k+l is |psi_kl> on (label1, label2).
UnitaryOperator bell_basis_unitary(std::size_t m, const std::string& in_label,
                                   const std::string& out1,
                                   const std::string& out2);
UnitaryOperator bell_basis_unitary(std::size_t m);

/// Controlled transposition (1 j) of n copies conditioned on a control of
/// dim n; factors are copy labels "<prefix>1".."<prefix>n" then control.
UnitaryOperator controlled_permutation_unitary(std::size_t n,
                                               std::size_t a_dim,
                                               const std::string& prefix = "A",
                                               const std::string& control =
                                                   "C");

/// Deterministic 64-bit seed derivation (splitmix64 of seed and stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace catdec
