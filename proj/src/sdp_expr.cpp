#include <algorithm>
#include <map>
#include <tuple>

#include "catdec/sdp.hpp"

namespace catdec::sdp {

Expr::Expr(Eigen::Index rows, Eigen::Index cols)
    : constant_(Matrix::Zero(rows, cols)) {}

Expr Expr::constant(const Matrix& m) {
  Expr e(m.rows(), m.cols());
  e.constant_ = m;
  return e;
}

Expr& Expr::operator+=(const Expr& o) {
  if (rows() != o.rows() || cols() != o.cols())
    throw DimensionError("expression shapes differ");
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

Expr& Expr::operator-=(const Expr& o) {
  if (rows() != o.rows() || cols() != o.cols())
    throw DimensionError("expression shapes differ");
  constant_ -= o.constant_;
  for (const auto& t : o.terms_) terms_.push_back({t.var, t.row, t.col, -t.coef});
  return *this;
}

Expr& Expr::operator*=(Complex s) {
  constant_ *= s;
  for (auto& t : terms_) t.coef *= s;
  return *this;
}

Expr& Expr::compress() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
    return std::tie(a.var, a.col, a.row) < std::tie(b.var, b.col, b.row);
  });
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (!out.empty() && out.back().var == t.var && out.back().row == t.row &&
        out.back().col == t.col)
      out.back().coef += t.coef;
    else
      out.push_back(t);
  }
  std::erase_if(out, [](const Term& t) { return std::abs(t.coef) == 0.0; });
  terms_ = std::move(out);
  return *this;
}

Expr operator+(Expr a, const Expr& b) { return a += b; }
Expr operator-(Expr a, const Expr& b) { return a -= b; }
Expr operator+(Expr a, const Matrix& b) { return a += Expr::constant(b); }
Expr operator-(Expr a, const Matrix& b) { return a -= Expr::constant(b); }
Expr operator-(const Matrix& a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(Complex s, Expr a) { return a *= s; }
Expr operator*(double s, Expr a) { return a *= Complex(s); }

Expr adjoint(const Expr& e) {
  Expr out = Expr::constant(e.constant_part().adjoint());
  for (const auto& t : e.terms()) out.add_term(t.var, t.col, t.row, std::conj(t.coef));
  return out;
}

Expr transpose(const Expr& e) {
  Expr out = Expr::constant(e.constant_part().transpose());
  for (const auto& t : e.terms()) out.add_term(t.var, t.col, t.row, t.coef);
  return out;
}

Expr trace(const Expr& e) {
  Expr out(1, 1);
  out.mutable_constant()(0, 0) = e.constant_part().trace();
  for (const auto& t : e.terms())
    if (t.row == t.col) out.add_term(t.var, 0, 0, t.coef);
  return out.compress();
}

Expr kron(const Matrix& a, const Expr& e) {
  Expr out = Expr::constant(catdec::kron(a, e.constant_part()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) == Complex(0.0)) continue;
      for (const auto& t : e.terms())
        out.add_term(t.var, i * e.rows() + t.row, j * e.cols() + t.col,
                     a(i, j) * t.coef);
    }
  return out;
}

Expr kron(const Expr& e, const Matrix& b) {
  Expr out = Expr::constant(catdec::kron(e.constant_part(), b));
  for (const auto& t : e.terms())
    for (Eigen::Index k = 0; k < b.rows(); ++k)
      for (Eigen::Index l = 0; l < b.cols(); ++l) {
        if (b(k, l) == Complex(0.0)) continue;
        out.add_term(t.var, t.row * b.rows() + k, t.col * b.cols() + l,
                     t.coef * b(k, l));
      }
  return out;
}

Expr mul(const Matrix& l, const Expr& e, const Matrix& r) {
  if (l.cols() != e.rows() || e.cols() != r.rows())
    throw DimensionError("expression product shape mismatch");
  Expr out = Expr::constant(l * e.constant_part() * r);
  for (const auto& t : e.terms())
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      const Complex li = l(i, t.row) * t.coef;
      if (li == Complex(0.0)) continue;
      for (Eigen::Index j = 0; j < r.cols(); ++j) {
        const Complex v = li * r(t.col, j);
        if (v != Complex(0.0)) out.add_term(t.var, i, j, v);
      }
    }
  return out.compress();
}

Expr partial_trace(const Expr& e, std::span<const std::size_t> dims,
                   const std::vector<bool>& drop) {
  const std::size_t n = dims.size();
  std::size_t total = 1;
  for (std::size_t f = 0; f < n; ++f) total *= dims[f];
  if (static_cast<Eigen::Index>(total) != e.rows() || e.rows() != e.cols())
    throw DimensionError("partial trace dims do not match expression");
  // Split each flat index into (kept index, dropped index).
  std::vector<std::size_t> keep_idx(total), drop_idx(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t k = 0, t = 0;
    for (std::size_t f = 0; f < n; ++f) {
      if (drop[f])
        t = t * dims[f] + digit[f];
      else
        k = k * dims[f] + digit[f];
    }
    keep_idx[idx] = k;
    drop_idx[idx] = t;
    for (std::size_t f = n; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  Expr out = Expr::constant(partial_trace_raw(e.constant_part(), dims, drop));
  for (const auto& t : e.terms()) {
    const auto r = static_cast<std::size_t>(t.row);
    const auto c = static_cast<std::size_t>(t.col);
    if (drop_idx[r] != drop_idx[c]) continue;
    out.add_term(t.var, static_cast<Eigen::Index>(keep_idx[r]),
                 static_cast<Eigen::Index>(keep_idx[c]), t.coef);
  }
  return out.compress();
}

Expr blocks(const std::vector<std::vector<Expr>>& grid) {
  if (grid.empty() || grid[0].empty()) throw DimensionError("empty block grid");
  std::vector<Eigen::Index> row_off{0}, col_off{0};
  for (const auto& row : grid) {
    if (row.size() != grid[0].size()) throw DimensionError("ragged block grid");
    row_off.push_back(row_off.back() + row[0].rows());
  }
  for (const auto& cell : grid[0]) col_off.push_back(col_off.back() + cell.cols());
  Expr out(row_off.back(), col_off.back());
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < grid[i].size(); ++j) {
      const Expr& b = grid[i][j];
      if (b.rows() != row_off[i + 1] - row_off[i] ||
          b.cols() != col_off[j + 1] - col_off[j])
        throw DimensionError("inconsistent block sizes");
      out.mutable_constant().block(row_off[i], col_off[j], b.rows(), b.cols()) =
          b.constant_part();
      for (const auto& t : b.terms())
        out.add_term(t.var, row_off[i] + t.row, col_off[j] + t.col, t.coef);
    }
  return out;
}

Expr direct_sum(const Expr& a, const Expr& b) {
  return blocks({{a, Expr::zero(a.rows(), b.cols())},
                 {Expr::zero(b.rows(), a.cols()), b}});
}

Expr inner(const Matrix& m, const Expr& e) {
  if (m.rows() != e.rows() || m.cols() != e.cols())
    throw DimensionError("inner product shape mismatch");
  Expr out(1, 1);
  out.mutable_constant()(0, 0) = (m.adjoint() * e.constant_part()).trace();
  for (const auto& t : e.terms()) {
    const Complex v = std::conj(m(t.row, t.col)) * t.coef;
    if (v != Complex(0.0)) out.add_term(t.var, 0, 0, v);
  }
  return out.compress();
}

}  // namespace catdec::sdp
