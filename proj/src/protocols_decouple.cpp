#include <algorithm>
#include <cmath>
#include <numeric>

#include "catdec/protocols.hpp"
#include "protocols_internal.hpp"

namespace catdec {
namespace {

struct Layout {
  std::vector<std::string> a1, a2, e;
  std::size_t d1 = 1, d2 = 1, de = 1;
  Matrix m;  // rho in order [a1, a2, e]
};

Layout layout(const DensityOperator& rho, const Labels& a1, const Labels& a2) {
  Layout l{a1, a2, {}, 1, 1, 1, {}};
  const auto& p = rho.partition();
  for (const auto& x : a1)
    if (std::find(a2.begin(), a2.end(), x) != a2.end())
      throw LabelError("A1 and A2 overlap in " + x);
  std::vector<std::string> seen;
  for (const auto& x : a1) {
    l.d1 *= p.dim_of(x);
    seen.push_back(x);
  }
  for (const auto& x : a2) {
    l.d2 *= p.dim_of(x);
    seen.push_back(x);
  }
  if (seen.empty()) throw LabelError("empty split");
  for (const auto& x : p.labels())
    if (std::find(seen.begin(), seen.end(), x) == seen.end()) {
      l.e.push_back(x);
      l.de *= p.dim_of(x);
    }
  std::vector<std::string> order = a1;
  order.insert(order.end(), a2.begin(), a2.end());
  order.insert(order.end(), l.e.begin(), l.e.end());
  l.m = reorder(rho, order).matrix();
  return l;
}

SystemPartition part(const DensityOperator& rho, const std::vector<std::string>& labels) {
  std::vector<Factor> f;
  for (const auto& x : labels) f.push_back({x, rho.partition().dim_of(x)});
  return SystemPartition(std::move(f));
}

struct Evaluation {
  double min_product = 0.0;
  double marginal_product = 0.0;
  double randomized = 0.0;
  std::optional<ProductWitness> witness;
};

Evaluation evaluate(const DensityOperator& rho, const Layout& l, const Matrix& u,
                    const MinProductOptions& mp) {
  const auto da = static_cast<Eigen::Index>(l.d1 * l.d2);
  const auto de = static_cast<Eigen::Index>(l.de);
  const Matrix big = kron(u, Matrix::Identity(de, de));
  const Matrix out = big * l.m * big.adjoint();
  const std::vector<std::size_t> dims{l.d1, l.d2, l.de};
  (void)da;
  Matrix r = partial_trace_raw(out, dims, {false, true, false});
  Evaluation ev;
  if (l.a1.empty() || l.e.empty()) return ev;
  std::vector<std::string> labels = l.a1;
  labels.insert(labels.end(), l.e.begin(), l.e.end());
  const DensityOperator st(r, part(rho, labels), TraceMode::subnormalized);
  ProductWitness w = min_product_distance(st, l.a1, mp);
  ev.min_product = w.distance;
  ev.witness = std::move(w);
  ev.marginal_product = detail::pd_normalized(r, product_of_marginals(st, l.a1).matrix());
  const std::vector<std::size_t> d2{l.d1, l.de};
  const Matrix re = partial_trace_raw(r, d2, {true, false});
  const auto d1 = static_cast<Eigen::Index>(l.d1);
  ev.randomized = detail::pd_normalized(
      r, kron(Matrix::Identity(d1, d1) / double(l.d1), re));
  return ev;
}

std::vector<Matrix> pauli_strings(int k) {
  const Matrix id = Matrix::Identity(2, 2);
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  const std::vector<Matrix> single{id, x, y, z};
  std::vector<Matrix> out{Matrix::Identity(1, 1)};
  for (int q = 0; q < k; ++q) {
    std::vector<Matrix> next;
    for (const auto& m : out)
      for (const auto& s : single) next.push_back(kron(m, s));
    out = std::move(next);
  }
  return out;
}

int qubit_count(std::size_t d) {
  int k = 0;
  while ((std::size_t(1) << k) < d) ++k;
  if ((std::size_t(1) << k) != d)
    throw DimensionError("dimension " + std::to_string(d) + " is not a power of two");
  return k;
}

}  // namespace

ProtocolTranscript standard_decouple(const DensityOperator& rho, const Labels& a1,
                                     const Labels& a2,
                                     const StandardDecoupleOptions& opt) {
  const Layout l = layout(rho, a1, a2);
  const auto da = static_cast<Eigen::Index>(l.d1 * l.d2);
  std::vector<std::string> a = a1;
  a.insert(a.end(), a2.begin(), a2.end());

  ProtocolTranscript t;
  t.protocol = "standard_decouple";
  t.input = rho;
  t.seed = opt.seed;
  t.a1_labels = a1;
  t.a2_labels = a2;
  t.remainder_bits = std::log2(double(l.d2));

  if (opt.unitary) {
    if (opt.unitary->matrix().rows() != da)
      throw DimensionError("decoupling unitary does not act on A");
    const Evaluation ev = evaluate(rho, l, opt.unitary->matrix(), opt.product);
    t.achieved_error = ev.min_product;
    t.witness = ev.witness;
    t.metrics["marginal_product_pd"] = ev.marginal_product;
    t.metrics["randomized_pd"] = ev.randomized;
    t.unitary = UnitaryOperator(opt.unitary->matrix(), part(rho, a));
    t.unitaries = {"given"};
    t.log("apply_unitary", "given");
  } else {
    if (opt.trials < 1) throw Error("trials must be positive");
    double best = 2.0, sum = 0.0, sum_rand = 0.0;
    Matrix best_u;
    Evaluation best_ev;
    for (int i = 0; i < opt.trials; ++i) {
      const Matrix u = haar_unitary_matrix(std::size_t(da),
                                           derive_seed(opt.seed, std::uint64_t(i)));
      MinProductOptions mp = opt.product;
      mp.seed = derive_seed(opt.seed ^ 0x5bd1e995ULL, std::uint64_t(i));
      Evaluation ev = evaluate(rho, l, u, mp);
      sum += ev.min_product;
      sum_rand += ev.randomized;
      if (ev.min_product < best) {
        best = ev.min_product;
        best_u = u;
        best_ev = std::move(ev);
      }
    }
    t.achieved_error = best;
    t.witness = best_ev.witness;
    t.metrics["best_pd"] = best;
    t.metrics["mean_pd"] = sum / opt.trials;
    t.metrics["mean_randomized_pd"] = sum_rand / opt.trials;
    t.metrics["marginal_product_pd"] = best_ev.marginal_product;
    t.metrics["randomized_pd"] = best_ev.randomized;
    t.metrics["trials"] = opt.trials;
    t.unitary = UnitaryOperator(best_u, part(rho, a));
    t.unitaries = {"haar_best_of_trials"};
    t.log("haar_sampling", std::to_string(opt.trials) + " trials");
  }
  t.log("trace_remainder");
  return t;
}

QuantumChannel pauli_erasure_channel(int k, const std::string& label) {
  if (k < 1) throw DimensionError("erasure needs at least one qubit");
  if (k > 6) throw CapacityError("Pauli erasure limited to 6 qubits");
  std::vector<Matrix> kraus = pauli_strings(k);
  const double w = 1.0 / double(std::size_t(1) << k);
  for (auto& m : kraus) m *= w;
  return QuantumChannel(std::move(kraus), SystemPartition{{label, std::size_t(1) << k}});
}

ErasureResult erasure_from_decoupling(const ProtocolTranscript& t) {
  if (!t.input) throw Error("transcript carries no input state");
  const DensityOperator& rho = *t.input;
  const Layout l = layout(rho, t.a1_labels, t.a2_labels);
  const int k = qubit_count(l.d2);
  const auto da = static_cast<Eigen::Index>(l.d1 * l.d2);
  const Matrix u = t.unitary ? t.unitary->matrix() : Matrix::Identity(da, da);
  std::vector<std::string> a = t.a1_labels;
  a.insert(a.end(), t.a2_labels.begin(), t.a2_labels.end());
  const SystemPartition pa = part(rho, a);

  const auto d1 = static_cast<Eigen::Index>(l.d1);
  std::vector<Matrix> unitaries;
  for (const auto& p : pauli_strings(k))
    unitaries.push_back(u.adjoint() * kron(Matrix::Identity(d1, d1), p) * u);
  std::vector<Matrix> kraus = unitaries;
  const double w = 1.0 / std::sqrt(double(kraus.size()));
  for (auto& m : kraus) m *= w;

  ErasureResult res{QuantumChannel(kraus, pa), unitaries.size(), unitaries, 0.0};
  if (l.e.empty()) return res;
  const auto de = static_cast<Eigen::Index>(l.de);
  Matrix erased = Matrix::Zero(l.m.rows(), l.m.cols());
  for (const auto& v : unitaries) {
    const Matrix big = kron(v, Matrix::Identity(de, de));
    erased += big * l.m * big.adjoint();
  }
  erased /= double(unitaries.size());

  Matrix target;
  const std::vector<std::size_t> dims{l.d1 * l.d2, l.de};
  const Matrix rho_e = partial_trace_raw(l.m, dims, {true, false});
  const auto d2 = static_cast<Eigen::Index>(l.d2);
  const Matrix tau2 = Matrix::Identity(d2, d2) / double(l.d2);
  if (t.witness && !l.a1.empty()) {
    const DensityOperator w1 = reorder(t.witness->omega1, t.a1_labels);
    const DensityOperator w2 = reorder(t.witness->omega2, l.e);
    target = kron(u.adjoint() * kron(w1.matrix(), tau2) * u, w2.matrix());
  } else if (l.a1.empty()) {
    target = kron(Matrix::Identity(da, da) / double(da), rho_e);
  } else {
    const Matrix r1 = partial_trace_raw(erased, dims, {false, true});
    target = kron(r1, rho_e);
  }
  res.error = detail::pd_normalized(erased, target);
  return res;
}

ProtocolTranscript decoupling_from_erasure(const DensityOperator& rho, const Labels& a,
                                           const std::vector<Matrix>& unitaries) {
  const std::size_t n = unitaries.size();
  int k = 0;
  while ((std::size_t(1) << (2 * k)) < n) ++k;
  if (n == 0 || (std::size_t(1) << (2 * k)) != n)
    throw DimensionError("unitary count " + std::to_string(n) + " is not a power of 4");
  const Layout l = layout(rho, a, {});
  const auto da = static_cast<Eigen::Index>(l.d1);
  for (const auto& v : unitaries)
    if (v.rows() != da || v.cols() != da)
      throw DimensionError("erasure unitary does not act on A");

  ProtocolTranscript t;
  t.protocol = "decoupling_from_erasure";
  t.input = rho;
  t.remainder_bits = double(k);
  t.metrics["unitary_count"] = double(n);
  const auto de = static_cast<Eigen::Index>(l.de);

  // The erased state and its error as a channel.
  Matrix erased = Matrix::Zero(l.m.rows(), l.m.cols());
  for (const auto& v : unitaries) {
    const Matrix big = kron(v, Matrix::Identity(de, de));
    erased += big * l.m * big.adjoint();
  }
  erased /= double(n);
  const std::vector<std::size_t> dims{l.d1, l.de};
  const double channel_pd =
      l.e.empty() ? 0.0
                  : detail::pd_normalized(
                        erased, kron(partial_trace_raw(erased, dims, {false, true}),
                                     partial_trace_raw(erased, dims, {true, false})));
  t.metrics["erasure_channel_pd"] = channel_pd;

  const std::size_t d = std::size_t(1) << k;
  const std::string anc1 = "anc1", anc2 = "anc2";
  t.a1_labels = a;
  t.a1_labels.push_back(anc1);
  t.a2_labels = {anc2};
  if (k == 0) {
    t.achieved_error = channel_pd;
    t.unitaries = {"identity"};
    t.log("identity");
    return t;
  }
  check_capacity(l.d1 * l.de * d * d);

  // Controlled unitary on the Bell basis of anc1 anc2, ancilla maximally mixed.
  const UnitaryOperator bell = bell_basis_unitary(d, "bell", anc1, anc2);
  const auto dd = static_cast<Eigen::Index>(d * d);
  Matrix cu = Matrix::Zero(da * dd, da * dd);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector psi = bell.matrix().col(Eigen::Index(i));
    cu += kron(unitaries[i], psi * psi.adjoint());
  }
  // Order [A, E, anc1 anc2] for the simulation; cu acts on [A, anc].
  Matrix state = kron(l.m, Matrix::Identity(dd, dd) / double(d * d));
  const std::vector<std::size_t> sd{l.d1, l.de, d * d};
  const std::vector<std::size_t> to_a_anc_e{0, 2, 1};
  Matrix s2 = permute_operator(state, sd, to_a_anc_e);
  const Matrix big = kron(cu, Matrix::Identity(de, de));
  s2 = big * s2 * big.adjoint();
  const std::vector<std::size_t> sd2{l.d1, d, d, l.de};
  const Matrix out = partial_trace_raw(s2, sd2, {false, false, true, false});
  const std::vector<std::size_t> od{l.d1 * d, l.de};
  t.achieved_error =
      l.e.empty() ? 0.0
                  : detail::pd_normalized(out, kron(partial_trace_raw(out, od, {false, true}),
                                                    partial_trace_raw(out, od, {true, false})));
  t.unitaries = {"controlled_unitary_bell_basis"};
  t.log("prepare_ancilla", "maximally mixed on " + anc1 + anc2);
  t.log("controlled_unitary", std::to_string(n) + " branches");
  t.log("trace_remainder", anc2);
  return t;
}

}  // namespace catdec
