#pragma once

#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "catdec/harness.hpp"

namespace catdec::harness::detail {

using Row = std::vector<std::pair<std::string, Value>>;

/// Appends a row; the first row fixes the column list.
void add_row(RunRecord& rec, const Row& row);

/// Rows with a boolean "check_pass" column count as inequality checks.
void tally_checks(RunRecord& rec);

/// Runs f(trial) for every trial on `threads` workers and returns the rows
/// in trial order.
std::vector<std::vector<Row>> for_trials(int trials, int threads,
                                         const std::function<std::vector<Row>(int)>& f);

/// Role-labelled state for one trial: from the file when given, else drawn
/// from the ensemble with the trial's seed.
struct StateSource {
  const ExperimentConfig& config;
  std::vector<std::size_t> dims;
  std::vector<std::string> roles;
  std::optional<DensityOperator> file_state;

  StateSource(const ExperimentConfig& c, std::vector<std::size_t> default_dims,
              std::vector<std::string> roles);
  DensityOperator mixed(std::uint64_t seed) const;
  /// Mixed ensembles are drawn on all but the last role and purified into it.
  PureState pure(std::uint64_t seed) const;
};

std::uint64_t state_seed(std::uint64_t seed, int trial);
std::uint64_t protocol_seed(std::uint64_t seed, int trial);

/// Relabels the factors positionally, merging trailing factors into the
/// last role when there are more factors than roles.
DensityOperator with_roles(const DensityOperator& rho, const std::vector<std::string>& roles);
PureState to_pure(const DensityOperator& rho);

/// Lower bound on the smooth I_max(E;A) at eps: the larger of the two smooth
/// min-entropy bounds, floored at zero. Exact I_max when eps is zero.
EntropyValue imax_lower(const DensityOperator& rho, const Labels& e, const Labels& a,
                        double eps);

RunRecord task_entropy(const ExperimentConfig& c);
RunRecord task_decouple(const ExperimentConfig& c);
RunRecord task_convex_split(const ExperimentConfig& c);
RunRecord task_erase(const ExperimentConfig& c);
RunRecord task_merge(const ExperimentConfig& c);
RunRecord task_qsr(const ExperimentConfig& c);
RunRecord task_verify(const ExperimentConfig& c);
RunRecord task_sweep(const ExperimentConfig& c);

}  // namespace catdec::harness::detail
