#pragma once

#include <string>
#include <vector>

#include "catdec/qstate.hpp"

namespace catdec::detail {

/// Square root clearing only eigenvalues at the round-off level of the
/// largest one.
Matrix sqrt_nonneg(const Matrix& h);
/// ||sqrt(a) sqrt(b)||_1 for PSD a, b.
double root_fidelity(const Matrix& a, const Matrix& b);
/// sqrt(1 - F^2) for normalized states.
double pd_normalized(const Matrix& a, const Matrix& b);

std::vector<std::string> copy_labels(const std::string& x, std::size_t n);
/// Matrix of rho with factors ordered as [rest..., x]; rest labels returned.
Matrix rest_then(const DensityOperator& rho, const std::string& x,
                 std::vector<std::string>& rest);
Matrix matrix_power_kron(const Matrix& s, std::size_t n);

/// Controlled transposition of n copies of dimension dx, conditioned on a
/// control of dimension m*m whose basis states >= n act trivially, followed
/// by the Bell rotation of the control. Input order (copies, control), output
/// order (copies, bell1, bell2).
Matrix catalytic_alice_unitary(std::size_t n, std::size_t dx, std::size_t m);

}  // namespace catdec::detail
