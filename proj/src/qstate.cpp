#include "catdec/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace catdec {

namespace {

std::string join(const std::vector<std::string>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

// PSD checks need an eigendecomposition; above this size they are skipped
// unless the caller constructs states through the checked test helpers.
constexpr std::size_t kPsdCheckLimit = 512;

}  // namespace

// ---------------------------------------------------------------------------
// SystemPartition

SystemPartition::SystemPartition(std::vector<Factor> factors)
    : factors_(std::move(factors)) {
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim == 0) throw DimensionError("factor '" + f.label + "' has dim 0");
    if (!seen.insert(f.label).second)
      throw LabelError("duplicate label '" + f.label + "'");
  }
}

std::size_t SystemPartition::total_dim() const {
  std::size_t d = 1;
  for (const auto& f : factors_) d *= f.dim;
  return d;
}

std::vector<std::string> SystemPartition::labels() const {
  std::vector<std::string> out;
  for (const auto& f : factors_) out.push_back(f.label);
  return out;
}

std::vector<std::size_t> SystemPartition::dims() const {
  std::vector<std::size_t> out;
  for (const auto& f : factors_) out.push_back(f.dim);
  return out;
}

bool SystemPartition::contains(const std::string& label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

std::size_t SystemPartition::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label == label) return i;
  throw LabelError("unknown label '" + label + "' (have " + join(labels()) +
                   ")");
}

std::size_t SystemPartition::dim_of(const std::string& label) const {
  return factors_[index_of(label)].dim;
}

std::size_t SystemPartition::dim_of(std::span<const std::string> ls) const {
  std::size_t d = 1;
  for (const auto& l : ls) d *= dim_of(l);
  return d;
}

SystemPartition SystemPartition::concat(const SystemPartition& other) const {
  std::vector<Factor> f = factors_;
  f.insert(f.end(), other.factors_.begin(), other.factors_.end());
  return SystemPartition(std::move(f));
}

SystemPartition SystemPartition::restrict_to(
    std::span<const std::string> ls) const {
  for (const auto& l : ls) index_of(l);
  std::vector<Factor> f;
  for (const auto& x : factors_)
    if (std::find(ls.begin(), ls.end(), x.label) != ls.end()) f.push_back(x);
  return SystemPartition(std::move(f));
}

SystemPartition SystemPartition::without(
    std::span<const std::string> ls) const {
  for (const auto& l : ls) index_of(l);
  std::vector<Factor> f;
  for (const auto& x : factors_)
    if (std::find(ls.begin(), ls.end(), x.label) == ls.end()) f.push_back(x);
  return SystemPartition(std::move(f));
}

SystemPartition SystemPartition::renamed(const std::string& from,
                                         const std::string& to) const {
  std::vector<Factor> f = factors_;
  f[index_of(from)].label = to;
  return SystemPartition(std::move(f));
}

// ---------------------------------------------------------------------------
// Checks

double hermiticity_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Matrix& u) {
  Matrix g = u.adjoint() * u;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

void check_capacity(std::size_t dim) {
  if (dim > kMaxDim)
    throw CapacityError("dimension " + std::to_string(dim) +
                        " exceeds capacity " + std::to_string(kMaxDim));
}

// ---------------------------------------------------------------------------
// Value types

DensityOperator::DensityOperator(Matrix m, SystemPartition p, TraceMode mode)
    : m_(std::move(m)), p_(std::move(p)), mode_(mode) {
  if (m_.rows() != m_.cols()) throw DimensionError("matrix is not square");
  if (static_cast<std::size_t>(m_.rows()) != p_.total_dim())
    throw DimensionError("matrix dim " + std::to_string(m_.rows()) +
                         " does not match partition dim " +
                         std::to_string(p_.total_dim()));
  check_capacity(p_.total_dim());
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if (hermiticity_defect(m_) > tol::herm * scale)
    throw StateError("matrix is not Hermitian");
  m_ = (0.5 * (m_ + m_.adjoint())).eval();
  const double tr = trace();
  if (tr <= 0.0) throw StateError("trace must be positive");
  if (tr > 1.0 + tol::trace * std::max<double>(1.0, dim()))
    throw StateError("trace exceeds one: " + std::to_string(tr));
  if (mode_ == TraceMode::normalized &&
      std::abs(tr - 1.0) > tol::trace * std::max<double>(1.0, dim()))
    throw StateError("normalized state has trace " + std::to_string(tr));
  if (dim() <= kPsdCheckLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol::psd * scale)
      throw StateError("matrix is not positive semidefinite (min eig " +
                       std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

DensityOperator DensityOperator::from_matrix(Matrix m, const std::string& label,
                                             TraceMode mode) {
  const auto d = static_cast<std::size_t>(m.rows());
  return DensityOperator(std::move(m), SystemPartition{{label, d}}, mode);
}

PureState::PureState(Vector v, SystemPartition p)
    : v_(std::move(v)), p_(std::move(p)) {
  if (static_cast<std::size_t>(v_.size()) != p_.total_dim())
    throw DimensionError("vector size does not match partition");
  if (v_.norm() > 1.0 + tol::trace * 10) throw StateError("norm exceeds one");
}

DensityOperator PureState::density() const {
  const double n2 = v_.squaredNorm();
  return DensityOperator(
      v_ * v_.adjoint(), p_,
      std::abs(n2 - 1.0) <= tol::trace * 10 ? TraceMode::normalized
                                            : TraceMode::subnormalized);
}

UnitaryOperator::UnitaryOperator(Matrix m, SystemPartition in,
                                 SystemPartition out)
    : m_(std::move(m)), in_(std::move(in)), out_(std::move(out)) {
  if (static_cast<std::size_t>(m_.cols()) != in_.total_dim() ||
      static_cast<std::size_t>(m_.rows()) != out_.total_dim())
    throw DimensionError("unitary shape does not match partitions");
  if (unitarity_defect(m_) > tol::unitary)
    throw StateError("operator is not an isometry");
}

QuantumChannel::QuantumChannel(std::vector<Matrix> kraus, SystemPartition in,
                               SystemPartition out)
    : kraus_(std::move(kraus)), in_(std::move(in)), out_(std::move(out)) {
  if (kraus_.empty()) throw DimensionError("channel needs a Kraus operator");
  const auto din = static_cast<Eigen::Index>(in_.total_dim());
  const auto dout = static_cast<Eigen::Index>(out_.total_dim());
  Matrix s = Matrix::Zero(din, din);
  for (const auto& k : kraus_) {
    if (k.rows() != dout || k.cols() != din)
      throw DimensionError("Kraus operator shape mismatch");
    s += k.adjoint() * k;
  }
  if ((s - Matrix::Identity(din, din)).cwiseAbs().maxCoeff() > tol::unitary)
    throw StateError("Kraus operators are not trace preserving");
}

QuantumChannel QuantumChannel::from_unitary(const UnitaryOperator& u) {
  return QuantumChannel({u.matrix()}, u.in_partition(), u.out_partition());
}

QuantumChannel QuantumChannel::identity(const SystemPartition& p) {
  const auto d = static_cast<Eigen::Index>(p.total_dim());
  return QuantumChannel({Matrix::Identity(d, d)}, p, p);
}

// ---------------------------------------------------------------------------
// Raw helpers

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix dagger(const Matrix& m) { return m.adjoint(); }

Eigh eigh(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix psd_sqrt(const Matrix& h) {
  Eigh e = eigh(h);
  // Eigenvalues at rounding level are zeroed; their square roots would
  // otherwise dominate the error of fidelities between low-rank states.
  const double floor = 16.0 * double(std::max<Eigen::Index>(1, h.rows())) *
                       std::numeric_limits<double>::epsilon() *
                       std::max(1e-300, e.values.cwiseAbs().maxCoeff());
  RealVector fv = e.values.unaryExpr(
      [&](double x) { return x > floor ? std::sqrt(x) : 0.0; });
  return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

RealVector clamped_spectrum(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()),
                                           Eigen::EigenvaluesOnly);
  RealVector v = es.eigenvalues();
  for (auto& x : v)
    if (x < 0.0 && x >= -tol::psd) x = 0.0;
  return v;
}

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (hermiticity_defect(m) == 0.0) return clamped_spectrum(m).cwiseAbs().sum();
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

Matrix support_basis(const Matrix& h, double tol) {
  Eigh e = eigh(h);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = e.values.size() - 1; i >= 0; --i)
    if (e.values(i) > tol) keep.push_back(i);
  Matrix b(h.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    b.col(static_cast<Eigen::Index>(k)) = e.vectors.col(keep[k]);
  return b;
}

namespace {

// Maps each old flat index to its flat index after reordering factors.
std::vector<std::size_t> permutation_map(std::span<const std::size_t> dims,
                                         std::span<const std::size_t> order) {
  const std::size_t n = dims.size();
  if (order.size() != n) throw DimensionError("bad factor order");
  std::vector<std::size_t> new_dims(n), new_stride(n), pos_of_old(n);
  for (std::size_t k = 0; k < n; ++k) {
    new_dims[k] = dims[order[k]];
    pos_of_old[order[k]] = k;
  }
  std::size_t s = 1;
  for (std::size_t k = n; k-- > 0;) {
    new_stride[k] = s;
    s *= new_dims[k];
  }
  std::vector<std::size_t> map(s);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < s; ++idx) {
    std::size_t t = 0;
    for (std::size_t f = 0; f < n; ++f) t += digit[f] * new_stride[pos_of_old[f]];
    map[idx] = t;
    for (std::size_t f = n; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  return map;
}

bool is_identity_order(std::span<const std::size_t> order) {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) return false;
  return true;
}

}  // namespace

Matrix permute_operator(const Matrix& m, std::span<const std::size_t> dims,
                        std::span<const std::size_t> order) {
  if (is_identity_order(order)) return m;
  const auto map = permutation_map(dims, order);
  const auto d = static_cast<Eigen::Index>(map.size());
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      out(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) =
          m(i, j);
  return out;
}

Vector permute_vector(const Vector& v, std::span<const std::size_t> dims,
                      std::span<const std::size_t> order) {
  if (is_identity_order(order)) return v;
  const auto map = permutation_map(dims, order);
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(map[i])) = v(i);
  return out;
}

Matrix partial_trace_raw(const Matrix& m, std::span<const std::size_t> dims,
                         const std::vector<bool>& drop) {
  const std::size_t n = dims.size();
  std::size_t dk = 1, dd = 1;
  for (std::size_t f = 0; f < n; ++f) (drop[f] ? dd : dk) *= dims[f];
  // Group flat indices by their dropped-digit value.
  std::vector<std::vector<std::size_t>> groups(dd);
  std::vector<std::size_t> keep_idx(dk * dd);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < dk * dd; ++idx) {
    std::size_t k = 0, t = 0;
    for (std::size_t f = 0; f < n; ++f) {
      if (drop[f])
        t = t * dims[f] + digit[f];
      else
        k = k * dims[f] + digit[f];
    }
    keep_idx[idx] = k;
    groups[t].push_back(idx);
    for (std::size_t f = n; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk),
                            static_cast<Eigen::Index>(dk));
  for (const auto& g : groups)
    for (std::size_t j : g)
      for (std::size_t i : g)
        out(static_cast<Eigen::Index>(keep_idx[i]),
            static_cast<Eigen::Index>(keep_idx[j])) +=
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------
// State operations

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  SystemPartition p = a.partition().concat(b.partition());
  check_capacity(p.total_dim());
  const bool normalized = a.trace_mode() == TraceMode::normalized &&
                          b.trace_mode() == TraceMode::normalized;
  return DensityOperator(
      kron(a.matrix(), b.matrix()), std::move(p),
      normalized ? TraceMode::normalized : TraceMode::subnormalized);
}

PureState tensor(const PureState& a, const PureState& b) {
  SystemPartition p = a.partition().concat(b.partition());
  Vector v(a.vector().size() * b.vector().size());
  for (Eigen::Index i = 0; i < a.vector().size(); ++i)
    v.segment(i * b.vector().size(), b.vector().size()) =
        a.vector()(i) * b.vector();
  return PureState(std::move(v), std::move(p));
}

DensityOperator partial_trace(const DensityOperator& rho,
                              std::span<const std::string> drop) {
  const auto& p = rho.partition();
  std::vector<bool> flags(p.size(), false);
  for (const auto& l : drop) flags[p.index_of(l)] = true;
  if (std::all_of(flags.begin(), flags.end(), [](bool b) { return b; })) {
    Matrix t(1, 1);
    t(0, 0) = rho.matrix().trace();
    return DensityOperator(t, SystemPartition{{"1", 1}}, rho.trace_mode());
  }
  const auto dims = p.dims();
  return DensityOperator(partial_trace_raw(rho.matrix(), dims, flags),
                         p.without(drop), rho.trace_mode());
}

DensityOperator partial_trace(const DensityOperator& rho,
                              std::initializer_list<std::string> drop) {
  std::vector<std::string> v(drop);
  return partial_trace(rho, std::span<const std::string>(v));
}

DensityOperator marginal(const DensityOperator& rho,
                         std::span<const std::string> keep) {
  for (const auto& l : keep) rho.partition().index_of(l);
  std::vector<std::string> drop;
  for (const auto& l : rho.partition().labels())
    if (std::find(keep.begin(), keep.end(), l) == keep.end()) drop.push_back(l);
  if (drop.empty()) return rho;
  return partial_trace(rho, drop);
}

DensityOperator marginal(const DensityOperator& rho,
                         std::initializer_list<std::string> keep) {
  std::vector<std::string> v(keep);
  return marginal(rho, std::span<const std::string>(v));
}

namespace {

std::vector<std::size_t> order_indices(const SystemPartition& p,
                                       std::span<const std::string> order) {
  if (order.size() != p.size())
    throw LabelError("reorder needs every label exactly once");
  std::vector<std::size_t> idx;
  std::set<std::string> seen;
  for (const auto& l : order) {
    if (!seen.insert(l).second) throw LabelError("repeated label " + l);
    idx.push_back(p.index_of(l));
  }
  return idx;
}

SystemPartition reordered_partition(const SystemPartition& p,
                                    std::span<const std::size_t> idx) {
  std::vector<Factor> f;
  for (auto i : idx) f.push_back(p.factors()[i]);
  return SystemPartition(std::move(f));
}

}  // namespace

DensityOperator reorder(const DensityOperator& rho,
                        std::span<const std::string> order) {
  const auto idx = order_indices(rho.partition(), order);
  const auto dims = rho.partition().dims();
  return DensityOperator(permute_operator(rho.matrix(), dims, idx),
                         reordered_partition(rho.partition(), idx),
                         rho.trace_mode());
}

PureState reorder(const PureState& psi, std::span<const std::string> order) {
  const auto idx = order_indices(psi.partition(), order);
  const auto dims = psi.partition().dims();
  return PureState(permute_vector(psi.vector(), dims, idx),
                   reordered_partition(psi.partition(), idx));
}

PureState purify(const DensityOperator& rho, const std::string& ref_label) {
  if (rho.trace_mode() != TraceMode::normalized)
    throw StateError("purify requires a normalized state");
  if (rho.partition().contains(ref_label))
    throw LabelError("reference label '" + ref_label + "' already in use");
  Eigh e = eigh(rho.matrix());
  const auto d = e.values.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return e.values(a) > e.values(b);
  });
  std::vector<Eigen::Index> kept;
  for (auto i : idx)
    if (e.values(i) > tol::psd) kept.push_back(i);
  const auto r = static_cast<Eigen::Index>(kept.size());
  Vector v = Vector::Zero(d * r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double s = std::sqrt(e.values(kept[static_cast<std::size_t>(k)]));
    for (Eigen::Index a = 0; a < d; ++a)
      v(a * r + k) = s * e.vectors(a, kept[static_cast<std::size_t>(k)]);
  }
  v /= v.norm();
  return PureState(std::move(v),
                   rho.partition().concat(
                       SystemPartition{{ref_label, static_cast<std::size_t>(r)}}));
}

namespace {

struct Layout {
  std::vector<std::string> rest;       // untouched labels in partition order
  std::vector<std::size_t> order_idx;  // permutation: rest then on
  std::size_t din = 1, drest = 1;
};

Layout make_layout(const SystemPartition& p, std::span<const std::string> on,
                   std::size_t expected_in) {
  Layout l;
  std::set<std::string> on_set(on.begin(), on.end());
  if (on_set.size() != on.size()) throw LabelError("repeated label in 'on'");
  for (const auto& f : p.factors())
    if (!on_set.count(f.label)) {
      l.rest.push_back(f.label);
      l.drest *= f.dim;
      l.order_idx.push_back(p.index_of(f.label));
    }
  for (const auto& lab : on) {
    l.order_idx.push_back(p.index_of(lab));
    l.din *= p.dim_of(lab);
  }
  if (l.din != expected_in)
    throw DimensionError("operator input dim " + std::to_string(expected_in) +
                         " does not match factors of dim " +
                         std::to_string(l.din));
  return l;
}

// Output partition and the order that restores the caller's layout.
SystemPartition output_partition(const SystemPartition& p,
                                 std::span<const std::string> on,
                                 const SystemPartition& op_in,
                                 const SystemPartition& op_out,
                                 std::vector<std::string>& final_order,
                                 SystemPartition& work_partition,
                                 const Layout& l) {
  std::vector<Factor> out_factors;
  // Operators that keep their own labels act in place on the caller's factors.
  const bool same_shape = op_in == op_out && op_in.size() == on.size();
  if (same_shape) {
    for (const auto& lab : on) out_factors.push_back({lab, p.dim_of(lab)});
  } else {
    out_factors = op_out.factors();
  }
  std::vector<Factor> work;
  for (const auto& lab : l.rest) work.push_back({lab, p.dim_of(lab)});
  for (const auto& f : out_factors) work.push_back(f);
  work_partition = SystemPartition(work);

  final_order.clear();
  bool inserted = false;
  std::set<std::string> on_set(on.begin(), on.end());
  for (const auto& f : p.factors()) {
    if (on_set.count(f.label)) {
      if (same_shape) {
        final_order.push_back(f.label);
      } else if (!inserted) {
        for (const auto& o : out_factors) final_order.push_back(o.label);
        inserted = true;
      }
    } else {
      final_order.push_back(f.label);
    }
  }
  return work_partition;
}

}  // namespace

DensityOperator apply_channel(const QuantumChannel& ch,
                              const DensityOperator& rho,
                              std::span<const std::string> on) {
  const auto& p = rho.partition();
  const Layout l = make_layout(p, on, ch.in_partition().total_dim());
  const auto dims = p.dims();
  const Matrix work = permute_operator(rho.matrix(), dims, l.order_idx);
  const auto din = static_cast<Eigen::Index>(l.din);
  const auto dout = static_cast<Eigen::Index>(ch.out_partition().total_dim());
  const auto r = static_cast<Eigen::Index>(l.drest);
  check_capacity(static_cast<std::size_t>(dout * r));
  Matrix out = Matrix::Zero(dout * r, dout * r);
  for (const auto& k : ch.kraus()) {
    const Matrix kd = k.adjoint();
    for (Eigen::Index s = 0; s < r; ++s)
      for (Eigen::Index t = 0; t < r; ++t)
        out.block(s * dout, t * dout, dout, dout).noalias() +=
            k * work.block(s * din, t * din, din, din) * kd;
  }
  std::vector<std::string> final_order;
  SystemPartition work_p;
  output_partition(p, on, ch.in_partition(), ch.out_partition(), final_order,
                   work_p, l);
  DensityOperator res(std::move(out), work_p, TraceMode::subnormalized);
  DensityOperator ordered = reorder(res, final_order);
  return DensityOperator(ordered.matrix(), ordered.partition(),
                         rho.trace_mode());
}

DensityOperator apply_unitary(const UnitaryOperator& u,
                              const DensityOperator& rho,
                              std::span<const std::string> on) {
  return apply_channel(QuantumChannel::from_unitary(u), rho, on);
}

PureState apply_unitary(const UnitaryOperator& u, const PureState& psi,
                        std::span<const std::string> on) {
  const auto& p = psi.partition();
  const Layout l = make_layout(p, on, u.in_partition().total_dim());
  const auto dims = p.dims();
  Vector work = permute_vector(psi.vector(), dims, l.order_idx);
  const auto din = static_cast<Eigen::Index>(l.din);
  const auto dout = static_cast<Eigen::Index>(u.out_partition().total_dim());
  const auto r = static_cast<Eigen::Index>(l.drest);
  Eigen::Map<const Matrix> in(work.data(), din, r);
  Matrix outm = u.matrix() * in;
  Vector outv = Eigen::Map<const Vector>(outm.data(), dout * r);
  std::vector<std::string> final_order;
  SystemPartition work_p;
  output_partition(p, on, u.in_partition(), u.out_partition(), final_order,
                   work_p, l);
  return reorder(PureState(std::move(outv), work_p), final_order);
}

DensityOperator choi_state(const QuantumChannel& ch,
                           const std::string& ref_label) {
  const auto d = ch.in_partition().total_dim();
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i)
    v(static_cast<Eigen::Index>(i * d + i)) = 1.0 / std::sqrt(double(d));
  PureState phi(std::move(v), SystemPartition{{ref_label, d}}.concat(
                                  ch.in_partition()));
  return apply_channel(ch, phi.density(), ch.in_partition().labels());
}

Matrix haar_unitary_matrix(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw DimensionError("dim must be positive");
  check_capacity(dim);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = Complex(nd(gen), nd(gen));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& rr = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Complex diag = rr(j, j);
    const double a = std::abs(diag);
    q.col(j) *= a > 0 ? diag / a : Complex(1.0);
  }
  return q;
}

UnitaryOperator sample_haar_unitary(std::size_t dim, std::uint64_t seed,
                                    const std::string& label) {
  return UnitaryOperator(haar_unitary_matrix(dim, seed),
                         SystemPartition{{label, dim}});
}

DensityOperator sample_density(std::size_t dim, std::size_t rank,
                               std::uint64_t seed, const std::string& label) {
  if (rank < 1 || rank > dim)
    throw DimensionError("rank must lie in [1, dim]");
  check_capacity(dim);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto r = static_cast<Eigen::Index>(rank);
  Matrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = Complex(nd(gen), nd(gen));
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(std::move(rho), SystemPartition{{label, dim}});
}

PureState sample_pure(const SystemPartition& p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(p.total_dim()));
  for (auto& x : v) x = Complex(nd(gen), nd(gen));
  v /= v.norm();
  return PureState(std::move(v), p);
}

DensityOperator maximally_mixed(std::size_t dim, const std::string& label) {
  const auto d = static_cast<Eigen::Index>(dim);
  return DensityOperator(Matrix::Identity(d, d) / double(dim),
                         SystemPartition{{label, dim}});
}

PureState maximally_entangled(std::size_t dim, const std::string& a,
                              const std::string& b) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim * dim));
  for (std::size_t i = 0; i < dim; ++i)
    v(static_cast<Eigen::Index>(i * dim + i)) = 1.0 / std::sqrt(double(dim));
  return PureState(std::move(v), SystemPartition{{a, dim}, {b, dim}});
}

DensityOperator basis_state(std::size_t dim, std::size_t index,
                            const std::string& label) {
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(d, d);
  m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return DensityOperator(std::move(m), SystemPartition{{label, dim}});
}

UnitaryOperator bell_basis_unitary(std::size_t m, const std::string& in_label,
                                   const std::string& out1,
                                   const std::string& out2) {
  if (m == 0) throw DimensionError("m must be positive");
  const auto mm = static_cast<Eigen::Index>(m);
  Matrix u = Matrix::Zero(mm * mm, mm * mm);
  const double norm = 1.0 / std::sqrt(double(m));
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t s = 0; s < m; ++s) {
        const double phase =
            2.0 * std::numbers::pi * double((k * s) % m) / double(m);
        u(static_cast<Eigen::Index>(s * m + (s + l) % m),
          static_cast<Eigen::Index>(m * k + l)) =
            norm * Complex(std::cos(phase), std::sin(phase));
      }
  return UnitaryOperator(std::move(u), SystemPartition{{in_label, m * m}},
                         SystemPartition{{out1, m}, {out2, m}});
}

UnitaryOperator bell_basis_unitary(std::size_t m) {
  return bell_basis_unitary(m, "M", "M1", "M2");
}

UnitaryOperator controlled_permutation_unitary(std::size_t n,
                                               std::size_t a_dim,
                                               const std::string& prefix,
                                               const std::string& control) {
  if (n == 0 || a_dim == 0) throw DimensionError("n and a_dim must be positive");
  std::size_t copies = 1;
  for (std::size_t i = 0; i < n; ++i) {
    copies *= a_dim;
    check_capacity(copies * n);
  }
  const std::size_t total = copies * n;
  std::vector<Factor> f;
  for (std::size_t i = 1; i <= n; ++i) f.push_back({prefix + std::to_string(i), a_dim});
  f.push_back({control, n});
  const auto d = static_cast<Eigen::Index>(total);
  Matrix u = Matrix::Zero(d, d);
  std::vector<std::size_t> digit(n);
  for (std::size_t c = 0; c < copies; ++c) {
    std::size_t rem = c;
    for (std::size_t k = n; k-- > 0;) {
      digit[k] = rem % a_dim;
      rem /= a_dim;
    }
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::size_t> swapped = digit;
      std::swap(swapped[0], swapped[j]);
      std::size_t t = 0;
      for (std::size_t k = 0; k < n; ++k) t = t * a_dim + swapped[k];
      u(static_cast<Eigen::Index>(t * n + j),
        static_cast<Eigen::Index>(c * n + j)) = 1.0;
    }
  }
  SystemPartition p(std::move(f));
  return UnitaryOperator(std::move(u), p, p);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace catdec
