#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>

#include "catdec/sdp.hpp"

namespace catdec::sdp {

using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iter: return "max_iter";
  }
  return "unknown";
}

Matrix Solution::value(const Expr& e) const {
  Matrix m = e.constant_part();
  for (const auto& t : e.terms()) m(t.row, t.col) += t.coef * y[t.var];
  return m;
}

// ---------------------------------------------------------------------------
// Model

void Model::declare(std::size_t d) {
  declared_dim_ += d;
  if (declared_dim_ > kMaxVariableDim)
    throw CapacityError("total variable dimension " +
                        std::to_string(declared_dim_) + " exceeds " +
                        std::to_string(kMaxVariableDim));
}

Expr Model::hermitian(Eigen::Index d) {
  declare(static_cast<std::size_t>(d));
  Expr e(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) {
      if (i == j) {
        e.add_term(new_var(), i, i, 1.0);
        continue;
      }
      const int re = new_var();
      const int im = new_var();
      e.add_term(re, i, j, 1.0);
      e.add_term(re, j, i, 1.0);
      e.add_term(im, i, j, Complex(0, 1));
      e.add_term(im, j, i, Complex(0, -1));
    }
  return e;
}

Expr Model::complex_matrix(Eigen::Index rows, Eigen::Index cols) {
  declare(static_cast<std::size_t>(std::max(rows, cols)));
  Expr e(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      e.add_term(new_var(), i, j, 1.0);
      e.add_term(new_var(), i, j, Complex(0, 1));
    }
  return e;
}

Expr Model::real_scalar() {
  Expr e(1, 1);
  e.add_term(new_var(), 0, 0, 1.0);
  return e;
}

void Model::psd(const Expr& e) {
  if (e.rows() != e.cols()) throw DimensionError("PSD constraint must be square");
  cones_.push_back(e);
}

void Model::geq(const Expr& e, double rhs) {
  if (e.rows() != 1 || e.cols() != 1)
    throw DimensionError("scalar constraint needs a 1x1 expression");
  Expr s = e;
  s.mutable_constant()(0, 0) -= rhs;
  cones_.push_back(std::move(s));
}

void Model::leq(const Expr& e, double rhs) { geq(-1.0 * e, -rhs); }

void Model::equal(const Expr& e, const Matrix& rhs) {
  if (e.rows() != rhs.rows() || e.cols() != rhs.cols())
    throw DimensionError("equality shape mismatch");
  std::map<std::pair<Eigen::Index, Eigen::Index>,
           std::vector<std::pair<int, Complex>>>
      by_entry;
  for (const auto& t : e.terms()) by_entry[{t.col, t.row}].push_back({t.var, t.coef});
  for (Eigen::Index j = 0; j < e.cols(); ++j)
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      const Complex target = rhs(i, j) - e.constant_part()(i, j);
      auto it = by_entry.find({j, i});
      for (int part = 0; part < 2; ++part) {
        EqRow row;
        std::map<int, double> acc;
        if (it != by_entry.end())
          for (const auto& [v, c] : it->second)
            acc[v] += part == 0 ? c.real() : c.imag();
        for (const auto& [v, c] : acc)
          if (c != 0.0) row.coefs.push_back({v, c});
        row.rhs = part == 0 ? target.real() : target.imag();
        if (row.coefs.empty()) {
          if (std::abs(row.rhs) > 1e-12)
            throw StateError("equality constraint has no variables");
          continue;
        }
        eqs_.push_back(std::move(row));
      }
    }
}

void Model::equal(const Expr& e, double rhs) {
  equal(e, Matrix::Constant(1, 1, Complex(rhs)));
}

void Model::minimize(const Expr& e) {
  objective_ = e;
  maximize_ = false;
}

void Model::maximize(const Expr& e) {
  objective_ = e;
  maximize_ = true;
}

// ---------------------------------------------------------------------------
// Solver core: minimize c'y + c0 s.t. S_b = sum_i y_i F_bi - F_b0 >= 0, A y = b.

namespace {

struct Entry {
  Eigen::Index r, c;
  double v;
};

struct RealBlock {
  Eigen::Index n = 0;
  RMatrix f0;
  std::vector<int> vars;
  std::vector<std::vector<Entry>> entries;
};

RealBlock realify(const Expr& e) {
  const Eigen::Index d = e.rows();
  // Hermitian part of the constant and of each term.
  const Matrix h0 = 0.5 * (e.constant_part() + e.constant_part().adjoint());
  std::map<int, std::map<std::pair<Eigen::Index, Eigen::Index>, Complex>> hv;
  for (const auto& t : e.terms()) {
    hv[t.var][{t.row, t.col}] += 0.5 * t.coef;
    hv[t.var][{t.col, t.row}] += 0.5 * std::conj(t.coef);
  }
  bool real = h0.imag().cwiseAbs().maxCoeff() == 0.0;
  for (const auto& [v, m] : hv)
    for (const auto& [rc, x] : m)
      if (x.imag() != 0.0) real = false;

  RealBlock b;
  b.n = real ? d : 2 * d;
  b.f0 = RMatrix::Zero(b.n, b.n);
  if (real) {
    b.f0 = -h0.real();
  } else {
    b.f0.topLeftCorner(d, d) = -h0.real();
    b.f0.bottomRightCorner(d, d) = -h0.real();
    b.f0.topRightCorner(d, d) = h0.imag();
    b.f0.bottomLeftCorner(d, d) = -h0.imag();
  }
  for (const auto& [v, m] : hv) {
    std::vector<Entry> ent;
    for (const auto& [rc, x] : m) {
      const auto [i, j] = rc;
      if (x.real() != 0.0) {
        ent.push_back({i, j, x.real()});
        if (!real) ent.push_back({i + d, j + d, x.real()});
      }
      if (!real && x.imag() != 0.0) {
        ent.push_back({i, j + d, -x.imag()});
        ent.push_back({i + d, j, x.imag()});
      }
    }
    if (ent.empty()) continue;
    b.vars.push_back(v);
    b.entries.push_back(std::move(ent));
  }
  return b;
}

double frob_inner(const RMatrix& a, const RMatrix& b) {
  return a.cwiseProduct(b).sum();
}

// tr(F X) for a sparse symmetric F.
double trace_with(const std::vector<Entry>& f, const RMatrix& x) {
  double s = 0.0;
  for (const auto& e : f) s += e.v * x(e.c, e.r);
  return s;
}

RMatrix sym(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha in (0, 1] with x + alpha dx PSD, scaled by the fraction.
double step_length(const RMatrix& x, const RMatrix& dx, double fraction) {
  Eigen::LLT<RMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const RMatrix l = llt.matrixL();
  RMatrix t = llt.matrixL().solve(dx);
  t = llt.matrixL().solve(t.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return 1.0;
  return std::min(1.0, fraction * (-1.0 / lmin));
}

// G with G S G = Z: G = L^-T Q diag(sqrt(l)) Q^T L^-1 where S = L L^T and
// L^T Z L = Q diag(l) Q^T.
RMatrix nt_scaling(const RMatrix& s, const RMatrix& z) {
  Eigen::LLT<RMatrix> llt(s);
  const RMatrix l = llt.matrixL();
  const RMatrix t = l.transpose() * z * l;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym(t));
  const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  RMatrix linv_t = llt.matrixU().solve(es.eigenvectors());  // L^-T Q
  return sym(linv_t * root.asDiagonal() * linv_t.transpose());
}

RMatrix spd_inverse(const RMatrix& s) {
  Eigen::LLT<RMatrix> llt(s);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<RMatrix> ldlt(s);
    return sym(ldlt.solve(RMatrix::Identity(s.rows(), s.cols())));
  }
  return sym(llt.solve(RMatrix::Identity(s.rows(), s.cols())));
}

class LinearSolver {
 public:
  explicit LinearSolver(RMatrix m) : n_(m.rows()) {
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      use_llt_ = true;
      return;
    }
    const double reg =
        1e-12 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += reg;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      use_llt_ = true;
      return;
    }
    ldlt_.compute(m);
  }
  RMatrix solve(const RMatrix& b) const {
    return use_llt_ ? RMatrix(llt_.solve(b)) : RMatrix(ldlt_.solve(b));
  }

 private:
  Eigen::Index n_;
  bool use_llt_ = false;
  Eigen::LLT<RMatrix> llt_;
  Eigen::LDLT<RMatrix> ldlt_;
};

}  // namespace

Solution Model::solve(const Options& opt) const {
  const int m = num_vars_;
  Solution sol;
  sol.y.assign(static_cast<std::size_t>(m), 0.0);

  // Objective.
  RVector c = RVector::Zero(m);
  const double sign = maximize_ ? -1.0 : 1.0;
  double c0 = sign * objective_.constant_part()(0, 0).real();
  for (const auto& t : objective_.terms()) c(t.var) += sign * t.coef.real();

  std::vector<RealBlock> blocks;
  for (const auto& e : cones_) blocks.push_back(realify(e));
  Eigen::Index big_n = 0;
  for (const auto& b : blocks) big_n += b.n;

  // Equalities, with dependent rows removed.
  RMatrix a_full(static_cast<Eigen::Index>(eqs_.size()), m);
  RVector b_full(static_cast<Eigen::Index>(eqs_.size()));
  a_full.setZero();
  for (std::size_t k = 0; k < eqs_.size(); ++k) {
    for (const auto& [v, x] : eqs_[k].coefs)
      a_full(static_cast<Eigen::Index>(k), v) += x;
    b_full(static_cast<Eigen::Index>(k)) = eqs_[k].rhs;
  }
  RMatrix a;
  RVector bvec;
  if (a_full.rows() > 0) {
    Eigen::ColPivHouseholderQR<RMatrix> qr(a_full.transpose());
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    a.resize(rank, m);
    bvec.resize(rank);
    for (Eigen::Index k = 0; k < rank; ++k) {
      const auto row = qr.colsPermutation().indices()(k);
      a.row(k) = a_full.row(row);
      bvec(k) = b_full(row);
    }
  } else {
    a.resize(0, m);
    bvec.resize(0);
  }
  const Eigen::Index p = a.rows();

  // Starting point.
  double max_f = 0.0, max_f0 = 0.0;
  std::vector<double> fnorm(static_cast<std::size_t>(m), 0.0);
  for (const auto& b : blocks) {
    max_f0 = std::max(max_f0, b.f0.norm());
    for (std::size_t k = 0; k < b.vars.size(); ++k) {
      double s = 0.0;
      for (const auto& e : b.entries[k]) s += e.v * e.v;
      fnorm[static_cast<std::size_t>(b.vars[k])] += s;
    }
  }
  double xi = std::max(10.0, std::sqrt(double(big_n)));
  for (int i = 0; i < m; ++i) {
    const double fn = std::sqrt(fnorm[static_cast<std::size_t>(i)]);
    max_f = std::max(max_f, fn);
    xi = std::max(xi, std::sqrt(double(big_n)) * (1.0 + std::abs(c(i))) / (1.0 + fn));
  }
  const double eta = std::max({10.0, std::sqrt(double(big_n)), max_f0, max_f});

  RVector y = RVector::Zero(m), w = RVector::Zero(p);
  std::vector<RMatrix> S, Z;
  for (const auto& b : blocks) {
    S.push_back(eta * RMatrix::Identity(b.n, b.n));
    Z.push_back(xi * RMatrix::Identity(b.n, b.n));
  }

  auto sum_yf = [&](const RVector& yy, std::size_t bi) {
    const auto& b = blocks[bi];
    RMatrix out = RMatrix::Zero(b.n, b.n);
    for (std::size_t k = 0; k < b.vars.size(); ++k) {
      const double v = yy(b.vars[k]);
      if (v == 0.0) continue;
      for (const auto& e : b.entries[k]) out(e.r, e.c) += v * e.v;
    }
    return out;
  };

  const double norm_c = c.norm(), norm_b = bvec.size() ? bvec.norm() : 0.0;
  int stalls = 0, since_best = 0;
  double best_merit = std::numeric_limits<double>::infinity();
  const bool trace_ = std::getenv("CATDEC_SDP_TRACE") != nullptr;

  for (int it = 0; it <= opt.max_iter; ++it) {
    // Residuals.
    std::vector<RMatrix> rp(blocks.size());
    double rp_norm = 0.0, mu_num = 0.0, dobj = c0;
    RVector rd = c;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const auto& b = blocks[bi];
      rp[bi] = sum_yf(y, bi) - b.f0 - S[bi];
      rp_norm += rp[bi].squaredNorm();
      mu_num += frob_inner(S[bi], Z[bi]);
      dobj += frob_inner(b.f0, Z[bi]);
      for (std::size_t k = 0; k < b.vars.size(); ++k)
        rd(b.vars[k]) -= trace_with(b.entries[k], Z[bi]);
    }
    if (p > 0) {
      rd -= a.transpose() * w;
      dobj += bvec.dot(w);
    }
    RVector re = p > 0 ? RVector(bvec - a * y) : RVector();
    const double pobj = c.dot(y) + c0;
    const double pinf = std::max(std::sqrt(rp_norm) / (1.0 + max_f0),
                                 p > 0 ? re.norm() / (1.0 + norm_b) : 0.0);
    const double dinf = rd.norm() / (1.0 + norm_c);
    const double gap = std::abs(pobj - dobj);

    const double scale = std::max(1.0, std::abs(pobj));
    const double merit = std::max({gap / (opt.gap_tol * scale),
                                   mu_num / (opt.gap_tol * scale),
                                   pinf / opt.feas_tol, dinf / opt.feas_tol});
    if (merit < best_merit) {
      best_merit = merit;
      since_best = 0;
      sol.iterations = it;
      sol.primal_value = sign * pobj;
      sol.dual_value = sign * dobj;
      sol.gap = gap;
      sol.primal_infeasibility = pinf;
      sol.dual_infeasibility = dinf;
      for (int i = 0; i < m; ++i) sol.y[static_cast<std::size_t>(i)] = y(i);
    } else {
      ++since_best;
    }
    if (merit <= 1.0) {
      sol.status = Status::optimal;
      return sol;
    }
    // Divergence: normalized rays certify infeasibility of one side.
    if (dobj - c0 > 1e9 * std::max(1.0, norm_c) &&
        dinf * (1.0 + norm_c) < 1e-6 * (dobj - c0)) {
      sol.status = Status::infeasible;
      return sol;
    }
    if (-(pobj - c0) > 1e9 * std::max(1.0, max_f0) && pinf < 1e-6) {
      sol.status = Status::infeasible;
      return sol;
    }
    if (trace_) std::fprintf(stderr, "it %3d pobj %.10e dobj %.10e pinf %.2e dinf %.2e mu %.2e\n", it, pobj, dobj, pinf, dinf, mu_num / double(big_n));
    // Numerical breakdown near degenerate optima shows up as a long run
    // without improvement; the best iterate is returned.
    if (it == opt.max_iter || stalls > 30 || since_best > 15) break;

    const double mu = mu_num / double(big_n);

    // Schur complement matrix.
    // M_ij = tr(F_i L F_j R) with (L, R) = (S^-1, Z) for HKM and (G, G) for
    // NT, where G S G = Z.
    std::vector<RMatrix> sinv(blocks.size()), left(blocks.size()),
        right(blocks.size());
    RMatrix mm = RMatrix::Zero(m, m);
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const auto& b = blocks[bi];
      sinv[bi] = spd_inverse(S[bi]);
      if (opt.direction == Direction::nt) {
        left[bi] = nt_scaling(S[bi], Z[bi]);
        right[bi] = left[bi];
      } else {
        left[bi] = sinv[bi];
        right[bi] = Z[bi];
      }
      for (std::size_t kj = 0; kj < b.vars.size(); ++kj) {
        const auto& fj = b.entries[kj];
        std::vector<Eigen::Index> rows;
        for (const auto& e : fj) rows.push_back(e.r);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        RMatrix pj = RMatrix::Zero(static_cast<Eigen::Index>(rows.size()), b.n);
        for (const auto& e : fj) {
          const auto pos = std::lower_bound(rows.begin(), rows.end(), e.r) - rows.begin();
          pj.row(pos) += e.v * right[bi].row(e.c);
        }
        RMatrix sub(b.n, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k)
          sub.col(static_cast<Eigen::Index>(k)) = left[bi].col(rows[k]);
        const RMatrix q = sub * pj;
        const int j = b.vars[kj];
        for (std::size_t ki = 0; ki < b.vars.size(); ++ki)
          mm(b.vars[ki], j) += trace_with(b.entries[ki], q);
      }
    }
    mm = sym(mm);
    LinearSolver msolve(mm);
    RMatrix minv_at;
    LinearSolver* ksolve = nullptr;
    std::unique_ptr<LinearSolver> kholder;
    if (p > 0) {
      minv_at = msolve.solve(a.transpose());
      kholder = std::make_unique<LinearSolver>(sym(a * minv_at));
      ksolve = kholder.get();
    }

    struct Dir {
      RVector dy, dw;
      std::vector<RMatrix> ds, dz;
    };
    auto direction = [&](double sigma, const std::vector<RMatrix>* corr) {
      Dir d;
      RVector h = -rd;
      std::vector<RMatrix> base(blocks.size());
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const auto& b = blocks[bi];
        RMatrix g = left[bi] * rp[bi] * right[bi];
        if (corr) g += (*corr)[bi] * sinv[bi];
        base[bi] = sigma * mu * sinv[bi] - Z[bi];
        g = base[bi] - g;
        for (std::size_t k = 0; k < b.vars.size(); ++k)
          h(b.vars[k]) += trace_with(b.entries[k], g);
      }
      auto kkt_solve = [&](const RVector& r1, const RVector& r2, RVector& dy,
                           RVector& dw) {
        RVector minv_h = msolve.solve(r1);
        if (p > 0) {
          dw = ksolve->solve(r2 - a * minv_h);
          dy = minv_h + minv_at * dw;
        } else {
          dw = RVector();
          dy = minv_h;
        }
      };
      kkt_solve(h, re, d.dy, d.dw);
      // One step of iterative refinement on [M -A'; A 0].
      for (int ref = 0; ref < 2; ++ref) {
        RVector r1 = h - mm * d.dy;
        if (p > 0) r1 += a.transpose() * d.dw;
        RVector r2 = p > 0 ? RVector(re - a * d.dy) : RVector();
        RVector cy, cw;
        kkt_solve(r1, r2, cy, cw);
        d.dy += cy;
        if (p > 0) d.dw += cw;
      }
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        RMatrix ds = sum_yf(d.dy, bi) + rp[bi];
        RMatrix cz = left[bi] * ds * right[bi];
        if (corr) cz += (*corr)[bi] * sinv[bi];
        d.dz.push_back(sym(base[bi] - sym(cz)));
        d.ds.push_back(sym(ds));
      }
      return d;
    };

    auto steps = [&](const Dir& d, double fraction) {
      double ap = 1.0, ad = 1.0;
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        ap = std::min(ap, step_length(S[bi], d.ds[bi], fraction));
        ad = std::min(ad, step_length(Z[bi], d.dz[bi], fraction));
      }
      return std::pair{ap, ad};
    };

    const Dir pred = direction(0.0, nullptr);
    const auto [ap0, ad0] = steps(pred, 1.0);
    double mu_aff = 0.0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi)
      mu_aff += frob_inner(S[bi] + ap0 * pred.ds[bi], Z[bi] + ad0 * pred.dz[bi]);
    mu_aff /= double(big_n);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    std::vector<RMatrix> corr;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi)
      corr.push_back(pred.dz[bi] * pred.ds[bi]);
    const Dir d = direction(sigma, &corr);
    const auto [ap, ad] = steps(d, opt.step_fraction);

    y += ap * d.dy;
    if (p > 0) w += ad * d.dw;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      S[bi] = sym(S[bi] + ap * d.ds[bi]);
      Z[bi] = sym(Z[bi] + ad * d.dz[bi]);
    }
    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
  }
  sol.status = Status::max_iter;
  return sol;
}

}  // namespace catdec::sdp
