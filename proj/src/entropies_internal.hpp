#pragma once

#include "catdec/entropies.hpp"

namespace catdec::detail {

/// Matrix of the marginal on a then b, in that factor order.
Matrix ordered_matrix(const DensityOperator& rho, const Labels& a, const Labels& b);
SystemPartition ordered_partition(const DensityOperator& rho, const Labels& a,
                                  const Labels& b);
void require_normalized(const DensityOperator& rho);
/// Label not present in p, derived from `base`.
std::string fresh_label(const SystemPartition& p, const std::string& base);

/// Hermitian, eigenvalues clamped at zero, trace capped at one.
Matrix clean_psd(const Matrix& m);
DensityOperator as_state(const Matrix& m, const SystemPartition& p);

/// Columns W with W W^dagger = m (eigenvalues above tol::psd).
Matrix psd_factor(const Matrix& m);

/// Sub-normalized variable within purified distance eps of m (Tr m <= 1).
sdp::Expr ball_variable(sdp::Model& model, const Matrix& m, double eps);

/// Records status and gap; a non-optimal solve downgrades exact to `fallback`.
void attach_solution(EntropyValue& v, const sdp::Solution& s, BoundKind fallback);

}  // namespace catdec::detail
