#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "catdec/protocols.hpp"
#include "protocols_internal.hpp"

namespace catdec {

EmbezzlingState embezzling_state(std::size_t n) {
  if (n == 0) throw DimensionError("embezzling state needs n >= 1");
  EmbezzlingState e;
  e.n = n;
  e.schmidt = RealVector(Eigen::Index(n));
  double z = 0.0;
  for (std::size_t j = 1; j <= n; ++j) z += 1.0 / double(j);
  for (std::size_t j = 1; j <= n; ++j) e.schmidt(Eigen::Index(j - 1)) = 1.0 / (double(j) * z);
  if (n * n <= kMaxDim) {
    Vector v = Vector::Zero(Eigen::Index(n * n));
    for (std::size_t j = 0; j < n; ++j)
      v(Eigen::Index(j * n + j)) = std::sqrt(e.schmidt(Eigen::Index(j)));
    e.vector = PureState(v, SystemPartition{{"Ap", n}, {"Bp", n}});
  }
  return e;
}

RealVector schmidt_coefficients(const PureState& psi, const Labels& a) {
  std::vector<std::string> rest;
  for (const auto& l : psi.partition().labels())
    if (std::find(a.begin(), a.end(), l) == a.end()) rest.push_back(l);
  std::vector<std::string> order = a;
  order.insert(order.end(), rest.begin(), rest.end());
  const Vector v = reorder(psi, order).vector();
  const auto da = static_cast<Eigen::Index>(psi.partition().dim_of(a));
  const auto dr = static_cast<Eigen::Index>(v.size()) / da;
  const Matrix m = Eigen::Map<const Matrix>(v.data(), dr, da).transpose();
  Eigen::JacobiSVD<Matrix> svd(m);
  RealVector s = svd.singularValues().array().square();
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  return s;
}

EmbezzleResult embezzle(const EmbezzlingState& mu, const RealVector& psi) {
  const auto d = static_cast<std::size_t>(psi.size());
  if (mu.n < d) throw DimensionError("embezzling state smaller than the target rank");
  // Joint coefficients of mu (x) psi, sorted, against mu padded with zeros.
  std::vector<std::pair<double, std::size_t>> joint;
  joint.reserve(mu.n * d);
  for (std::size_t j = 0; j < mu.n; ++j)
    for (std::size_t l = 0; l < d; ++l)
      joint.push_back({mu.schmidt(Eigen::Index(j)) * psi(Eigen::Index(l)), j * d + l});
  std::stable_sort(joint.begin(), joint.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  EmbezzleResult r;
  double f = 0.0;
  r.permutation.assign(mu.n * d, 0);
  std::vector<bool> used(mu.n * d, false);
  for (std::size_t k = 0; k < mu.n; ++k) {
    f += std::sqrt(std::max(0.0, mu.schmidt(Eigen::Index(k)) * joint[k].first));
    r.permutation[k * d] = joint[k].second;
    used[joint[k].second] = true;
  }
  // Remaining source basis states fill the unused targets in order.
  std::size_t next = 0;
  for (std::size_t src = 0; src < mu.n * d; ++src) {
    if (src % d == 0 && src / d < mu.n) continue;
    while (used[next]) ++next;
    r.permutation[src] = next;
    used[next] = true;
  }
  f = std::min(1.0, f);
  r.purified_distance = std::sqrt(std::max(0.0, 1.0 - f * f));
  return r;
}

namespace {

int bin_of(double lambda, int q) {
  if (!(lambda > 0.0)) return q + 1;
  int e = 0;
  const double f = std::frexp(lambda, &e);
  const int i = (f == 0.5) ? 1 - e : -e;
  return std::min(i, q + 1);
}

}  // namespace

FlatDecomposition flat_decomposition(const Matrix& rho_a, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("eps must lie in (0, 1)");
  const Eigh e = eigh(0.5 * (rho_a + rho_a.adjoint()));
  if (std::abs(e.values.sum() - 1.0) > 1e-9) throw StateError("rho_A must be normalized");
  FlatDecomposition fd;
  fd.Q = int(std::ceil(std::log2(double(rho_a.rows())) + 2.0 * std::log2(1.0 / eps) - 1.0));
  fd.Q = std::max(fd.Q, 0);
  const auto d = rho_a.rows();
  fd.projectors.assign(std::size_t(fd.Q + 2), Matrix::Zero(d, d));
  fd.weights.assign(std::size_t(fd.Q + 2), 0.0);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double l = std::max(0.0, e.values(k));
    const auto b = std::size_t(bin_of(l, fd.Q));
    fd.projectors[b] += e.vectors.col(k) * e.vectors.col(k).adjoint();
    fd.weights[b] += l;
  }
  return fd;
}

namespace {

struct Block {
  Matrix basis;  // columns span the bin, in A coordinates
  std::size_t a = 1, b = 1;
  Matrix u;      // unitary on the bin, output ordered as (A1, A2)
  double weight = 0.0;
  double error = 0.0;
  bool tail = false;
};

// P(Tr_{A2} U r U^dag, tau_{A1} (x) r_E) for a normalized block state r on
// [bin, E] with the bin split as a x b.
double block_error(const Matrix& r, const Matrix& u, std::size_t a, std::size_t b,
                   std::size_t de) {
  const auto dee = static_cast<Eigen::Index>(de);
  const Matrix big = kron(u, Matrix::Identity(dee, dee));
  const Matrix out = big * r * big.adjoint();
  const std::vector<std::size_t> dims{a, b, de};
  const Matrix ae = partial_trace_raw(out, dims, {false, true, false});
  const Matrix re = partial_trace_raw(out, dims, {true, true, false});
  const auto aa = static_cast<Eigen::Index>(a);
  return detail::pd_normalized(ae, kron(Matrix::Identity(aa, aa) / double(a), re));
}

}  // namespace

ProtocolTranscript catalytic_decouple_embezzle(const DensityOperator& rho,
                                               const std::string& a,
                                               const std::string& e, double eps,
                                               std::size_t embezzle_n,
                                               const EmbezzleDecoupleOptions& opt) {
  if (rho.partition().size() != 2 || !rho.partition().contains(a) ||
      !rho.partition().contains(e))
    throw LabelError("embezzling decoupling expects a state on exactly {" + a + ", " +
                     e + "}");
  const std::size_t da = rho.partition().dim_of(a);
  const std::size_t de = rho.partition().dim_of(e);
  if (da > 8 || de > 4) throw CapacityError("embezzling route limited to |A| <= 8, |E| <= 4");
  const std::vector<std::string> order{a, e};
  const Matrix m = reorder(rho, order).matrix();
  const std::vector<std::size_t> dims{da, de};
  const Matrix rho_a = partial_trace_raw(m, dims, {false, true});
  const Matrix rho_e = partial_trace_raw(m, dims, {true, false});
  const auto dee = static_cast<Eigen::Index>(de);

  ProtocolTranscript t;
  t.protocol = "catalytic_decouple_embezzle";
  t.input = rho;
  t.seed = opt.seed;
  const FlatDecomposition fd = flat_decomposition(rho_a, eps);
  t.metrics["Q"] = fd.Q;
  t.metrics["tail_weight"] = fd.tail_weight();
  t.log("flat_decomposition", "Q = " + std::to_string(fd.Q));

  std::vector<Block> blocks;
  for (std::size_t i = 0; i < fd.projectors.size(); ++i) {
    const Matrix basis = support_basis(fd.projectors[i], 0.5);
    if (basis.cols() == 0) continue;
    Block bl;
    bl.basis = basis;
    bl.weight = fd.weights[i];
    bl.tail = i + 1 == fd.projectors.size();
    const auto r = std::size_t(basis.cols());
    bl.a = r;
    bl.b = 1;
    bl.u = Matrix::Identity(Eigen::Index(r), Eigen::Index(r));
    if (!bl.tail && bl.weight > 0.0) {
      const Matrix iso = kron(basis, Matrix::Identity(dee, dee));
      Matrix blk = iso.adjoint() * m * iso;
      blk /= blk.trace().real();
      bool done = false;
      for (std::size_t b = 1; b <= r && !done; ++b) {
        if (r % b != 0) continue;
        const std::size_t aa = r / b;
        if (aa == 1) {
          bl.a = 1;
          bl.b = r;
          bl.error = 0.0;
          done = true;
          break;
        }
        double best = 2.0;
        Matrix best_u;
        for (int tr = 0; tr < opt.trials; ++tr) {
          const Matrix u =
              tr == 0 ? Matrix(Matrix::Identity(Eigen::Index(r), Eigen::Index(r)))
                      : haar_unitary_matrix(
                            r, derive_seed(opt.seed, std::uint64_t(i * 7919 + b * 131 + tr)));
          const double err = block_error(blk, u, aa, b, de);
          if (err < best) {
            best = err;
            best_u = u;
          }
        }
        if (best <= eps) {
          bl.a = aa;
          bl.b = b;
          bl.u = best_u;
          bl.error = best;
          done = true;
        }
      }
    }
    blocks.push_back(std::move(bl));
  }

  std::size_t d2 = 1, d1 = 1, tail_dim = 0;
  for (const auto& bl : blocks)
    if (!bl.tail) {
      d2 = std::max(d2, bl.b);
      d1 = std::max(d1, bl.a);
    } else {
      tail_dim = std::size_t(bl.basis.cols());
    }
  if (tail_dim > 0) d1 = std::max(d1, (tail_dim + d2 - 1) / d2);
  const std::size_t n_index = std::size_t(fd.Q + 2);
  t.remainder_bits = std::log2(double(d2)) + std::log2(double(n_index));
  t.metrics["d1"] = double(d1);
  t.metrics["d2"] = double(d2);
  double wsum = 0.0, werr = 0.0;
  for (const auto& bl : blocks)
    if (!bl.tail) {
      wsum += bl.weight;
      werr += bl.weight * bl.error;
    }
  t.metrics["mean_block_pd"] = wsum > 0 ? werr / wsum : 0.0;
  t.log("block_decoupling", std::to_string(blocks.size()) + " blocks");

  // Per block, the unnormalized state X_i on [A~1, E] after W^I and tracing A~2.
  const auto D1 = static_cast<Eigen::Index>(d1);
  const auto D2 = static_cast<Eigen::Index>(d2);
  std::vector<Matrix> xs;
  std::vector<std::size_t> as;
  for (const auto& bl : blocks) {
    const auto r = bl.basis.cols();
    Matrix emb = Matrix::Zero(D1 * D2, r);
    if (bl.tail) {
      for (Eigen::Index s = 0; s < r; ++s) emb(s, s) = 1.0;
    } else {
      for (Eigen::Index x = 0; x < Eigen::Index(bl.a); ++x)
        for (Eigen::Index y = 0; y < Eigen::Index(bl.b); ++y)
          emb(x * D2 + y, x * Eigen::Index(bl.b) + y) = 1.0;
    }
    const Matrix w = emb * bl.u * bl.basis.adjoint();
    const Matrix big = kron(w, Matrix::Identity(dee, dee));
    const Matrix out = big * m * big.adjoint();
    const std::vector<std::size_t> od{d1, d2, de};
    xs.push_back(partial_trace_raw(out, od, {false, true, false}));
    as.push_back(bl.tail ? 1 : bl.a);
  }

  std::size_t distinct = 0;
  for (const auto& bl : blocks)
    if (!bl.tail && bl.weight > 0.0) ++distinct;
  const bool single = distinct == 1 && fd.tail_weight() == 0.0;
  const double tail_pd = std::sqrt(std::max(0.0, fd.tail_weight()));
  t.metrics["tail_pd"] = tail_pd;

  if (single) {
    // One flat block: no block index to hide, so nothing is un-embezzled.
    Matrix x = Matrix::Zero(D1 * dee, D1 * dee);
    for (const auto& xi : xs) x += xi;
    std::size_t a1 = 1;
    for (const auto& bl : blocks)
      if (!bl.tail && bl.weight > 0.0) a1 = bl.a;
    const std::vector<std::size_t> od{d1, de};
    Matrix tau = Matrix::Zero(D1, D1);
    for (Eigen::Index q = 0; q < Eigen::Index(a1); ++q) tau(q, q) = 1.0 / double(a1);
    t.achieved_error = detail::pd_normalized(x, kron(tau, rho_e));
    t.flags.push_back("single_block");
    t.unitaries = {"block_unitary"};
    t.used_n = 0;
    return t;
  }

  const EmbezzlingState mu = embezzling_state(embezzle_n);
  const std::size_t dn = embezzle_n;
  check_capacity(dn * d1 * de);
  if (d1 > dn) throw DimensionError("embezzling state smaller than d1");
  const auto N = static_cast<Eigen::Index>(dn);
  Matrix sigma = Matrix::Zero(N, N);
  for (Eigen::Index j = 0; j < N; ++j) sigma(j, j) = mu.schmidt(j);

  Matrix fin = Matrix::Zero(N * D1 * dee, N * D1 * dee);
  double embezzle_worst = 0.0;
  std::vector<Eigen::Index> from(std::size_t(N * D1));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::iota(from.begin(), from.end(), Eigen::Index(0));
    if (as[i] > 1) {
      RealVector psi = RealVector::Zero(D1);
      for (std::size_t l = 0; l < as[i]; ++l) psi(Eigen::Index(l)) = 1.0 / double(as[i]);
      const EmbezzleResult er = embezzle(mu, psi);
      embezzle_worst = std::max(embezzle_worst, er.purified_distance);
      for (std::size_t src = 0; src < er.permutation.size(); ++src)
        from[src] = Eigen::Index(er.permutation[src]);
    }
    // Conjugation by the inverse permutation, as an index map.
    const Matrix sx = kron(sigma, xs[i]);
    for (Eigen::Index r = 0; r < N * D1; ++r)
      for (Eigen::Index c = 0; c < N * D1; ++c)
        fin.block(r * dee, c * dee, dee, dee) +=
            sx.block(from[std::size_t(r)] * dee, from[std::size_t(c)] * dee, dee, dee);
  }
  t.metrics["embezzle_pd"] = embezzle_worst;
  t.used_n = dn;
  t.log("un_embezzle", "n = " + std::to_string(dn));
  // The target lives on |0> of A~1, so only that compression of fin matters.
  Matrix fin0(N * dee, N * dee);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index k = 0; k < N; ++k)
      fin0.block(j * dee, k * dee, dee, dee) = fin.block(j * D1 * dee, k * D1 * dee, dee, dee);
  const double f = std::min(1.0, detail::root_fidelity(fin0, kron(sigma, rho_e)));
  t.achieved_error = std::sqrt(std::max(0.0, 1.0 - f * f));
  const std::vector<std::size_t> fd3{dn, d1, de};
  t.metrics["catalyst_pd"] =
      detail::pd_normalized(partial_trace_raw(fin, fd3, {false, true, true}), sigma);
  t.unitaries = {"block_unitary", "embezzling_permutation"};
  return t;
}

}  // namespace catdec
