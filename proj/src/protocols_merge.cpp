#include <algorithm>
#include <cmath>

#include "catdec/protocols.hpp"
#include "protocols_internal.hpp"

namespace catdec {
namespace {

// A pure state split as rows = (X, K) and columns = Bob, with the target
// |target>_{K, Bob'} that Bob should reconstruct.
struct MergeInput {
  Vector v;  // order [X, K, Bob]
  std::size_t dx = 1, dk = 1, db = 1;
  Vector target;  // order [K, Bob']
  std::size_t dbt = 1;
};

struct MergeOutcome {
  ProtocolTranscript decoupling;
  double fidelity = 0.0;
};

Matrix purification_factor(const Matrix& s) {
  // Columns sqrt(l_k) v_k, so that rows index the system, columns the copy.
  const Eigh e = eigh(0.5 * (s + s.adjoint()));
  const RealVector r = e.values.unaryExpr([](double x) { return x > 0 ? std::sqrt(x) : 0.0; });
  return e.vectors * r.asDiagonal();
}

MergeOutcome run_merge(const MergeInput& in, double eps, double delta,
                       std::optional<std::size_t> n_override) {
  const auto dx = static_cast<Eigen::Index>(in.dx);
  const auto dk = static_cast<Eigen::Index>(in.dk);
  const auto db = static_cast<Eigen::Index>(in.db);
  // rho_{XK}
  const Matrix vm = Eigen::Map<const Matrix>(in.v.data(), db, dx * dk).transpose();
  const Matrix rho_xk = vm * vm.adjoint();
  const DensityOperator rho(rho_xk, SystemPartition{{"X", in.dx}, {"K", in.dk}});
  CatalyticOptions co;
  co.n_override = n_override;
  MergeOutcome out{catalytic_decouple_cs(rho, "X", "K", eps, delta, co), 0.0};
  const ProtocolTranscript& t = out.decoupling;
  const std::size_t n = t.used_n;
  const std::size_t m = t.catalyst->m;
  const Matrix sig = purification_factor(t.catalyst->sigma.matrix());

  std::size_t rows = 1, bprime = 1;
  for (std::size_t j = 0; j < n; ++j) rows *= in.dx;
  for (std::size_t j = 1; j < n; ++j) bprime *= in.dx;
  const std::size_t alice = rows * m * m;
  const std::size_t cols = in.dk * in.db * bprime * n;
  if (double(alice) * double(cols) > double(1 << 22))
    throw CapacityError("merging simulation exceeds capacity");

  // Initial amplitudes: rows (x_1..x_n, c), columns (k, b, b'_2..b'_n, c').
  Matrix m0 = Matrix::Zero(Eigen::Index(alice), Eigen::Index(cols));
  const double cn = 1.0 / std::sqrt(double(n));
  std::vector<std::size_t> xs(n), bs(n);
  for (std::size_t xi = 0; xi < rows; ++xi) {
    std::size_t rem = xi;
    for (std::size_t j = n; j-- > 0;) {
      xs[j] = rem % in.dx;
      rem /= in.dx;
    }
    for (std::size_t bp = 0; bp < bprime; ++bp) {
      std::size_t r2 = bp;
      Complex amp = 1.0;
      for (std::size_t j = n; j-- > 1;) {
        amp *= sig(Eigen::Index(xs[j]), Eigen::Index(r2 % in.dx));
        r2 /= in.dx;
      }
      if (amp == Complex(0.0)) continue;
      for (std::size_t k = 0; k < in.dk; ++k)
        for (std::size_t b = 0; b < in.db; ++b) {
          const Complex a0 = in.v(Eigen::Index((xs[0] * in.dk + k) * in.db + b));
          if (a0 == Complex(0.0)) continue;
          for (std::size_t c = 0; c < n; ++c)
            m0(Eigen::Index(xi * m * m + c),
               Eigen::Index(((k * in.db + b) * bprime + bp) * n + c)) = a0 * amp * cn;
        }
    }
  }
  const Matrix m1 = detail::catalytic_alice_unitary(n, in.dx, m) * m0;

  // Regroup: rows (x^n, c1, k), columns (c2, b, b', c').
  const std::size_t kept = rows * m;
  const std::size_t bob_in = m * in.db * bprime * n;
  Matrix f = Matrix::Zero(Eigen::Index(kept * in.dk), Eigen::Index(bob_in));
  const std::size_t rest = in.db * bprime * n;
  for (std::size_t xi = 0; xi < rows; ++xi)
    for (std::size_t c1 = 0; c1 < m; ++c1)
      for (std::size_t c2 = 0; c2 < m; ++c2)
        for (std::size_t k = 0; k < in.dk; ++k)
          for (std::size_t r = 0; r < rest; ++r)
            f(Eigen::Index(((xi * m + c1) * in.dk) + k), Eigen::Index(c2 * rest + r)) =
                m1(Eigen::Index(xi * m * m + c1 * m + c2), Eigen::Index(k * rest + r));

  // Alice's leftover and its purification on a register J of Bob.
  Matrix xi_m = Matrix::Zero(Eigen::Index(kept), Eigen::Index(kept));
  for (Eigen::Index k = 0; k < dk; ++k) {
    Matrix blk(Eigen::Index(kept), f.cols());
    for (Eigen::Index y = 0; y < Eigen::Index(kept); ++y) blk.row(y) = f.row(y * dk + k);
    xi_m += blk * blk.adjoint();
  }
  const Matrix xi_f = purification_factor(xi_m);
  std::size_t dj = std::max<std::size_t>(kept, (bob_in + in.dbt - 1) / in.dbt);
  const std::size_t bob_out = in.dbt * dj;
  Matrix target = Matrix::Zero(f.rows(), Eigen::Index(bob_out));
  for (std::size_t y = 0; y < kept; ++y)
    for (std::size_t k = 0; k < in.dk; ++k)
      for (std::size_t bt = 0; bt < in.dbt; ++bt) {
        const Complex tv = in.target(Eigen::Index(k * in.dbt + bt));
        if (tv == Complex(0.0)) continue;
        for (std::size_t j = 0; j < kept; ++j)
          target(Eigen::Index(y * in.dk + k), Eigen::Index(bt * dj + j)) =
              tv * xi_f(Eigen::Index(y), Eigen::Index(j));
      }

  // Bob's decoder from Uhlmann's theorem, applied and scored.
  const Matrix kmat = f.transpose() * target.conjugate();
  Eigen::JacobiSVD<Matrix> svd(kmat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix w = svd.matrixV().leftCols(kmat.rows()) * svd.matrixU().adjoint();
  const Matrix final_state = f * w.transpose();
  out.fidelity = std::min(1.0, std::abs(target.conjugate().cwiseProduct(final_state).sum()));
  return out;
}

Vector ordered_vector(const PureState& psi, const std::vector<std::string>& order) {
  return reorder(psi, order).vector();
}

void fill_transcript(ProtocolTranscript& t, const MergeOutcome& o) {
  const ProtocolTranscript& d = o.decoupling;
  t.catalyst = d.catalyst;
  t.prescribed_n = d.prescribed_n;
  t.used_n = d.used_n;
  t.remainder_bits = d.remainder_bits;
  t.comm_qubits = d.remainder_bits;
  t.flags = d.flags;
  t.metrics["decoupling_pd"] = d.achieved_error;
  t.metrics["fidelity"] = o.fidelity;
  t.achieved_error = std::sqrt(std::max(0.0, 1.0 - o.fidelity * o.fidelity));
  t.metrics["synthesis_gap"] = t.achieved_error - d.achieved_error;
  t.unitaries = {"controlled_permutation", "bell_basis", "uhlmann_decoder"};
}

}  // namespace

ProtocolTranscript merge(const PureState& psi, const std::string& a, const std::string& b,
                         const std::string& r, double eps, double delta,
                         std::optional<std::size_t> n_override) {
  const auto& p = psi.partition();
  std::vector<std::string> order{a, r};
  if (!b.empty()) order.push_back(b);
  if (order.size() != p.size())
    throw LabelError("merge expects exactly the factors A, R and optionally B");
  MergeInput in;
  in.dx = p.dim_of(a);
  in.dk = p.dim_of(r);
  in.db = b.empty() ? 1 : p.dim_of(b);
  in.v = ordered_vector(psi, order);
  // Bob should end up holding A and B next to the reference.
  std::vector<std::string> torder{r, a};
  if (!b.empty()) torder.push_back(b);
  in.target = ordered_vector(psi, torder);
  in.dbt = in.dx * in.db;

  ProtocolTranscript t;
  t.protocol = "merge";
  t.log("share_catalyst", "purified to Bob");
  const MergeOutcome o = run_merge(in, eps, delta, n_override);
  fill_transcript(t, o);
  t.log("alice_unitary");
  t.log("send", std::to_string(t.comm_qubits) + " qubits");
  t.log("bob_decoder", "uhlmann");
  return t;
}

ProtocolTranscript qsr_evaluate(const PureState& psi, const std::string& a,
                                const std::string& b, const std::string& c,
                                const std::string& r, const QsrWitness& w, double eps,
                                std::optional<std::size_t> n_override) {
  const auto& p = psi.partition();
  if (p.size() != 4) throw LabelError("QSR expects a state on A, B, C, R");
  const std::size_t da = p.dim_of(a), db = p.dim_of(b), dc = p.dim_of(c),
                    dr = p.dim_of(r);
  const std::size_t dpp = w.ancilla.dim();
  const auto dacp = static_cast<Eigen::Index>(da * dc * dpp);
  if (w.unitary.rows() != dacp || w.unitary.cols() != dacp)
    throw DimensionError("witness unitary must act on A C A''");

  ProtocolTranscript t;
  t.protocol = "qsr";
  // psi (x) purified ancilla, order [A, C, A'', B, B'', R].
  const Vector base = ordered_vector(psi, {a, c, b, r});
  const Matrix anc = purification_factor(w.ancilla.matrix());
  const std::size_t dbb = dpp;
  Vector v = Vector::Zero(dacp * Eigen::Index(db * dbb * dr));
  for (std::size_t ia = 0; ia < da; ++ia)
    for (std::size_t ic = 0; ic < dc; ++ic)
      for (std::size_t ib = 0; ib < db; ++ib)
        for (std::size_t ir = 0; ir < dr; ++ir) {
          const Complex x = base(Eigen::Index(((ia * dc + ic) * db + ib) * dr + ir));
          if (x == Complex(0.0)) continue;
          for (std::size_t s = 0; s < dpp; ++s)
            for (std::size_t q = 0; q < dbb; ++q)
              v(Eigen::Index(((((ia * dc + ic) * dpp + s) * db + ib) * dbb + q) * dr + ir)) +=
                  x * anc(Eigen::Index(s), Eigen::Index(q));
        }
  const Eigen::Index tail = Eigen::Index(db * dbb * dr);
  {
    Eigen::Map<Matrix> mv(v.data(), tail, dacp);
    const Matrix rot = mv * w.unitary.transpose();
    mv = rot;
  }
  t.log("alice_unitary", "witness U on A C A''");

  // Witness checks on the state after U.
  const std::size_t dx = dc * dpp;
  std::vector<Factor> fac{{"A", da}, {"X", dx}, {"B", db}, {"Bpp", dbb}, {"R", dr}};
  const PureState after(v, SystemPartition(fac));
  const DensityOperator after_d = after.density();
  const DensityOperator ar_after = marginal(after_d, {"A", "R"});
  const DensityOperator ar_orig = marginal(psi.density(), {a, r});
  const double marg_pd = detail::pd_normalized(
      ar_after.matrix(), reorder(ar_orig, std::vector<std::string>{a, r}).matrix());
  t.metrics["witness_marginal_pd"] = marg_pd;
  if (marg_pd > eps + 1e-9) t.flags.push_back("witness_marginal_violation");
  if (w.smoothed) {
    const DensityOperator rac = marginal(psi.density(), {a, c, r});
    const Matrix ideal =
        kron(reorder(rac, std::vector<std::string>{a, c, r}).matrix(), w.ancilla.matrix());
    if (w.smoothed->dim() != std::size_t(ideal.rows()))
      throw DimensionError("smoothed witness has the wrong dimension");
    const double ball = detail::pd_normalized(w.smoothed->matrix(), ideal);
    t.metrics["witness_ball_pd"] = ball;
    if (ball > eps + 1e-9) t.flags.push_back("witness_ball_violation");
  }

  MergeInput in;
  in.dx = dx;
  in.dk = da * dr;
  in.db = db * dbb;
  in.v = reorder(after, std::vector<std::string>{"X", "A", "R", "B", "Bpp"}).vector();
  in.target = ordered_vector(psi, {a, r, b, c});
  in.dbt = db * dc;
  const double delta = (eps > 0.0 && eps < 1.0 / 6.0) ? eps : 0.1;
  const MergeOutcome o = run_merge(in, eps, delta, n_override);
  fill_transcript(t, o);
  t.log("send", std::to_string(t.comm_qubits) + " qubits");
  t.log("bob_decoder", "uhlmann");
  if (t.achieved_error > 3.0 * eps + 1e-9) t.flags.push_back("error_exceeds_3eps");
  return t;
}

}  // namespace catdec
