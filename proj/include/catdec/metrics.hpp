#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catdec/qstate.hpp"

namespace catdec {

struct DistanceReport {
  double fidelity = 0.0;
  double purified = 0.0;
  double trace_dist = 0.0;
};

/// F = ||sqrt(rho) sqrt(sigma)||_1 + sqrt((1 - Tr rho)(1 - Tr sigma)).
double generalized_fidelity(const DensityOperator& rho,
                            const DensityOperator& sigma);
double generalized_fidelity(const Matrix& rho, const Matrix& sigma);
double purified_distance(const DensityOperator& rho,
                         const DensityOperator& sigma);
double purified_distance(const Matrix& rho, const Matrix& sigma);
/// 1/2 (||rho - sigma||_1 + |Tr(rho - sigma)|).
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);
double trace_distance(const Matrix& rho, const Matrix& sigma);
DistanceReport distance_report(const DensityOperator& rho,
                               const DensityOperator& sigma);

/// Isometry W from psi's reference factors to phi's reference factors with
/// |<phi|(1 (x) W)|psi>| = F(rho_A, sigma_A). The shared factors `a_labels`
/// must appear in both states; all other factors are references.
UnitaryOperator uhlmann_isometry(const PureState& psi, const PureState& phi,
                                 const std::vector<std::string>& a_labels);

struct ProductWitness {
  double distance = 1.0;
  DensityOperator omega1;
  DensityOperator omega2;
};

struct MinProductOptions {
  int restarts = 16;
  int max_rounds = 200;
  double improvement_tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Upper estimate of min over product states w1 (x) w2 of P(rho, w1 (x) w2)
/// across the cut (labels1 | rest). The returned distance is exact at the
/// returned witness.
ProductWitness min_product_distance(const DensityOperator& rho,
                                    const std::vector<std::string>& labels1,
                                    const MinProductOptions& opt = {});

/// rho_1 (x) rho_2 for the cut (labels1 | rest), factors in rho's order.
DensityOperator product_of_marginals(const DensityOperator& rho,
                                     const std::vector<std::string>& labels1);

/// P(rho, tau_{labels1} (x) rho_rest), the decoupling error against the
/// maximally mixed state on labels1.
double decoupling_error(const DensityOperator& rho,
                        const std::vector<std::string>& labels1);

}  // namespace catdec
