#pragma once

#include <string>
#include <vector>

#include "catdec/qstate.hpp"

namespace catdec::sdp {

/// Coefficient of real variable `var` at entry (row, col).
struct Term {
  int var;
  Eigen::Index row, col;
  Complex coef;
};

/// Affine complex matrix expression: constant + sum of y_var * coef * E_{row,col}.
class Expr {
 public:
  Expr() = default;
  Expr(Eigen::Index rows, Eigen::Index cols);
  static Expr constant(const Matrix& m);
  static Expr zero(Eigen::Index rows, Eigen::Index cols) { return {rows, cols}; }

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Matrix& constant_part() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  Expr& operator*=(Complex s);
  /// Merges duplicate (var, row, col) terms and drops zeros.
  Expr& compress();

  void add_term(int var, Eigen::Index r, Eigen::Index c, Complex coef) {
    terms_.push_back({var, r, c, coef});
  }
  Matrix& mutable_constant() { return constant_; }

 private:
  Matrix constant_;
  std::vector<Term> terms_;
};

Expr operator+(Expr a, const Expr& b);
Expr operator-(Expr a, const Expr& b);
Expr operator+(Expr a, const Matrix& b);
Expr operator-(Expr a, const Matrix& b);
Expr operator-(const Matrix& a, const Expr& b);
Expr operator*(Complex s, Expr a);
Expr operator*(double s, Expr a);

Expr adjoint(const Expr& e);
Expr transpose(const Expr& e);
Expr trace(const Expr& e);
Expr kron(const Matrix& a, const Expr& e);
Expr kron(const Expr& e, const Matrix& b);
/// L * e * R with constant matrices.
Expr mul(const Matrix& l, const Expr& e, const Matrix& r);
Expr partial_trace(const Expr& e, std::span<const std::size_t> dims,
                   const std::vector<bool>& drop);
/// Block matrix from a grid of expressions with consistent sizes.
Expr blocks(const std::vector<std::vector<Expr>>& grid);
Expr direct_sum(const Expr& a, const Expr& b);
/// Re Tr(m^dagger e) as a 1x1 expression (real-valued on the real part).
Expr inner(const Matrix& m, const Expr& e);

enum class Status { optimal, infeasible, max_iter };
std::string to_string(Status s);

enum class Direction { nt, hkm };

struct Options {
  Direction direction = Direction::hkm;
  double gap_tol = 1e-7;
  double feas_tol = 1e-8;
  int max_iter = 500;
  double step_fraction = 0.98;
};

struct Solution {
  Status status = Status::max_iter;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::vector<double> y;

  Matrix value(const Expr& e) const;
  double scalar(const Expr& e) const { return value(e)(0, 0).real(); }
  bool optimal() const { return status == Status::optimal; }
};

/// Declarative SDP model over real variables. Hermitian constraints are
/// realified; scalar inequalities become 1x1 cone blocks.
class Model {
 public:
  /// Largest allowed sum of declared matrix-variable dimensions.
  static constexpr std::size_t kMaxVariableDim = 512;

  Expr hermitian(Eigen::Index d);
  Expr complex_matrix(Eigen::Index rows, Eigen::Index cols);
  Expr real_scalar();

  /// Hermitian part of e is PSD.
  void psd(const Expr& e);
  /// Re e >= rhs for a 1x1 expression.
  void geq(const Expr& e, double rhs);
  void leq(const Expr& e, double rhs);
  /// e == rhs entrywise (real and imaginary parts).
  void equal(const Expr& e, const Matrix& rhs);
  void equal(const Expr& e, double rhs);

  void minimize(const Expr& e);
  void maximize(const Expr& e);

  int num_vars() const { return num_vars_; }
  std::size_t declared_dim() const { return declared_dim_; }

  Solution solve(const Options& opt = {}) const;

 private:
  struct EqRow {
    std::vector<std::pair<int, double>> coefs;
    double rhs;
  };

  int new_var() { return num_vars_++; }
  void declare(std::size_t d);

  int num_vars_ = 0;
  std::size_t declared_dim_ = 0;
  std::vector<Expr> cones_;
  std::vector<EqRow> eqs_;
  Expr objective_ = Expr(1, 1);
  bool maximize_ = false;
};

}  // namespace catdec::sdp
