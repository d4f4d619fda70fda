#include "catdec/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace catdec {

namespace {

void require_same_dim(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw DimensionError("states have different dimensions");
}

struct Cut {
  std::vector<std::string> first, second;
  std::size_t d1 = 1, d2 = 1;
};

Cut make_cut(const SystemPartition& p, const std::vector<std::string>& labels1) {
  Cut c;
  for (const auto& l : labels1) p.index_of(l);
  for (const auto& f : p.factors()) {
    if (std::find(labels1.begin(), labels1.end(), f.label) != labels1.end()) {
      c.first.push_back(f.label);
      c.d1 *= f.dim;
    } else {
      c.second.push_back(f.label);
      c.d2 *= f.dim;
    }
  }
  if (c.first.empty() || c.second.empty())
    throw LabelError("cut must leave both sides non-empty");
  return c;
}

std::vector<std::string> cut_order(const Cut& c) {
  std::vector<std::string> o = c.first;
  o.insert(o.end(), c.second.begin(), c.second.end());
  return o;
}

// Builds w1 (x) w2 in cut order and moves it back to rho's factor order.
DensityOperator product_in_rho_order(const DensityOperator& rho, const Cut& c,
                                     const Matrix& w1, const Matrix& w2,
                                     TraceMode mode) {
  const auto& p = rho.partition();
  DensityOperator prod(kron(w1, w2), p.restrict_to(c.first).concat(
                                         p.restrict_to(c.second)),
                       mode);
  return reorder(prod, p.labels());
}

Matrix positive_part_normalized(const Matrix& h) {
  Matrix hp = hermitian_function(h, [](double x) { return x > 0 ? x : 0.0; });
  const double n = hp.norm();
  if (n <= 0.0) return Matrix();
  return hp / n;
}

}  // namespace

double generalized_fidelity(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma);
  Eigen::BDCSVD<Matrix> svd(psd_sqrt(rho) * psd_sqrt(sigma));
  double f = svd.singularValues().sum();
  const double tr = std::max(0.0, 1.0 - rho.trace().real());
  const double ts = std::max(0.0, 1.0 - sigma.trace().real());
  f += std::sqrt(tr * ts);
  return std::clamp(f, 0.0, 1.0);
}

double generalized_fidelity(const DensityOperator& rho,
                            const DensityOperator& sigma) {
  return generalized_fidelity(rho.matrix(), sigma.matrix());
}

double purified_distance(const Matrix& rho, const Matrix& sigma) {
  const double f = generalized_fidelity(rho, sigma);
  return std::sqrt(std::max(0.0, 1.0 - f * f));
}

double purified_distance(const DensityOperator& rho,
                         const DensityOperator& sigma) {
  return purified_distance(rho.matrix(), sigma.matrix());
}

double trace_distance(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma);
  const Matrix diff = rho - sigma;
  const double norm1 = clamped_spectrum(diff).cwiseAbs().sum();
  return std::min(1.0, 0.5 * (norm1 + std::abs(diff.trace().real())));
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

DistanceReport distance_report(const DensityOperator& rho,
                               const DensityOperator& sigma) {
  DistanceReport r;
  r.fidelity = generalized_fidelity(rho, sigma);
  r.purified = std::sqrt(std::max(0.0, 1.0 - r.fidelity * r.fidelity));
  r.trace_dist = trace_distance(rho, sigma);
  return r;
}

UnitaryOperator uhlmann_isometry(const PureState& psi, const PureState& phi,
                                 const std::vector<std::string>& a_labels) {
  auto split = [&](const PureState& s, std::size_t& da, std::size_t& dr,
                   SystemPartition& ref) {
    const auto& p = s.partition();
    std::vector<std::string> refs;
    for (const auto& l : p.labels())
      if (std::find(a_labels.begin(), a_labels.end(), l) == a_labels.end())
        refs.push_back(l);
    da = p.dim_of(a_labels);
    ref = p.restrict_to(refs);
    dr = ref.total_dim();
    std::vector<std::string> order = a_labels;
    order.insert(order.end(), refs.begin(), refs.end());
    Vector v = reorder(s, order).vector();
    // Row a, column r holds the amplitude of |a>|r>.
    return Matrix(Eigen::Map<const Matrix>(v.data(), static_cast<Eigen::Index>(dr),
                                           static_cast<Eigen::Index>(da))
                      .transpose());
  };
  std::size_t da1, dr1, da2, dr2;
  SystemPartition ref1, ref2;
  const Matrix Psi = split(psi, da1, dr1, ref1);
  const Matrix Phi = split(phi, da2, dr2, ref2);
  if (da1 != da2) throw DimensionError("purified systems differ in dimension");
  if (dr2 < dr1)
    throw DimensionError("target reference dimension " + std::to_string(dr2) +
                         " is smaller than source " + std::to_string(dr1) +
                         "; pad the target reference");
  const Matrix kt = (Phi.adjoint() * Psi).transpose();
  Eigen::JacobiSVD<Matrix> svd(kt, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix w = svd.matrixV().leftCols(static_cast<Eigen::Index>(dr1)) *
             svd.matrixU().adjoint();
  return UnitaryOperator(std::move(w), ref1, ref2);
}

DensityOperator product_of_marginals(const DensityOperator& rho,
                                     const std::vector<std::string>& labels1) {
  const Cut c = make_cut(rho.partition(), labels1);
  const Matrix r1 = marginal(rho, c.first).matrix();
  const Matrix r2 = marginal(rho, c.second).matrix();
  return product_in_rho_order(rho, c, r1, r2 / rho.trace(), rho.trace_mode());
}

double decoupling_error(const DensityOperator& rho,
                        const std::vector<std::string>& labels1) {
  const Cut c = make_cut(rho.partition(), labels1);
  const auto d1 = static_cast<Eigen::Index>(c.d1);
  const Matrix tau = Matrix::Identity(d1, d1) / double(c.d1);
  const Matrix r2 = marginal(rho, c.second).matrix();
  return purified_distance(
      rho, product_in_rho_order(rho, c, tau, r2, rho.trace_mode()));
}

ProductWitness min_product_distance(const DensityOperator& rho,
                                    const std::vector<std::string>& labels1,
                                    const MinProductOptions& opt) {
  const Cut c = make_cut(rho.partition(), labels1);
  const Matrix m = reorder(rho, cut_order(c)).matrix();
  const std::vector<std::size_t> dims{c.d1, c.d2};
  const Matrix sq = psd_sqrt(m);
  const auto d1 = static_cast<Eigen::Index>(c.d1);
  const auto d2 = static_cast<Eigen::Index>(c.d2);

  auto fidelity_at = [&](const Matrix& q, const Matrix& r) {
    return generalized_fidelity(m, kron(q * q, r * r));
  };

  // Candidate: product of the marginals, normalized.
  Matrix m1 = partial_trace_raw(m, dims, {false, true});
  Matrix m2 = partial_trace_raw(m, dims, {true, false});
  m1 /= m1.trace().real();
  m2 /= m2.trace().real();
  Matrix best_q = psd_sqrt(m1), best_r = psd_sqrt(m2);
  double best_f = fidelity_at(best_q, best_r);

  for (int restart = 0; restart < opt.restarts; ++restart) {
    Matrix q, r;
    if (restart == 0) {
      q = psd_sqrt(m1);
      r = psd_sqrt(m2);
    } else {
      const auto s = derive_seed(opt.seed, static_cast<std::uint64_t>(restart));
      q = psd_sqrt(sample_density(c.d1, c.d1, derive_seed(s, 1)).matrix());
      r = psd_sqrt(sample_density(c.d2, c.d2, derive_seed(s, 2)).matrix());
    }
    double value = -1.0;
    for (int round = 0; round < opt.max_rounds; ++round) {
      // Optimal unitary for fixed Q, R from the polar decomposition.
      const Matrix x = sq * kron(q, r);
      Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double v = svd.singularValues().sum();
      if (round > 0 && v - value < opt.improvement_tol) {
        value = std::max(value, v);
        break;
      }
      value = v;
      const Matrix y = svd.matrixV() * svd.matrixU().adjoint() * sq;

      const Matrix h1 = partial_trace_raw(
          kron(Matrix::Identity(d1, d1), r) * y, dims, {false, true});
      Matrix nq = positive_part_normalized(0.5 * (h1 + h1.adjoint()));
      if (nq.size() != 0) q = nq;
      const Matrix h2 = partial_trace_raw(
          kron(q, Matrix::Identity(d2, d2)) * y, dims, {true, false});
      Matrix nr = positive_part_normalized(0.5 * (h2 + h2.adjoint()));
      if (nr.size() != 0) r = nr;
    }
    const double f = fidelity_at(q, r);
    if (f > best_f) {
      best_f = f;
      best_q = q;
      best_r = r;
    }
  }

  const auto& p = rho.partition();
  ProductWitness w{std::sqrt(std::max(0.0, 1.0 - best_f * best_f)),
                   DensityOperator(best_q * best_q, p.restrict_to(c.first)),
                   DensityOperator(best_r * best_r, p.restrict_to(c.second))};
  return w;
}

}  // namespace catdec
