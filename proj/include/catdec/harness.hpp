#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "catdec/io.hpp"

namespace catdec::harness {

enum class Task { entropy, decouple, convex_split, erase, merge, qsr, verify, sweep };
std::string to_string(Task t);
/// Accepts the CLI spelling ("convex-split") and the snake_case one.
Task parse_task(const std::string& s);

enum class Format { csv, json };

inline constexpr std::uint64_t kDefaultSeed = 24301;

/// Named state ensembles:
///   haar_pure              Haar-random pure state on all factors
///   hs_mixed(r)            Hilbert-Schmidt state of rank r (default full)
///   classically_correlated sum_i p_i |ii><ii| with Dirichlet(1) weights
///   werner(p)              p Phi_d + (1 - p) 1/d^2 on two equal factors
struct EnsembleSpec {
  std::string name;
  std::optional<double> param;
};
EnsembleSpec parse_ensemble(const std::string& s);
DensityOperator generate_state(const EnsembleSpec& e, const std::vector<std::size_t>& dims,
                               const std::vector<std::string>& labels, std::uint64_t seed);

struct ExperimentConfig {
  Task task = Task::verify;
  std::optional<std::string> state_file;
  std::string ensemble = "hs_mixed";
  /// Empty means the task default.
  std::vector<std::size_t> dims;
  double eps = 0.1;
  double delta = 0.1;
  std::optional<std::size_t> n;
  int trials = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  Format format = Format::csv;
  int threads = 1;
};

/// Canonical JSON of everything that affects results (not the output path,
/// format or thread count). State files enter through a content hash.
io::Json canonical_config(const ExperimentConfig& c);
/// FNV-1a 64 of the compact canonical config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

using Value = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, double, std::string>;

struct RunRecord {
  Task task = Task::verify;
  std::string config_hash;
  std::uint64_t seed = 0;
  io::Json config;
  std::vector<std::string> columns;
  /// One row per trial, in trial order.
  std::vector<std::vector<Value>> rows;
  std::map<std::string, double> summary;
  /// Inequality checks that feed the exit status. Each names its anchor.
  std::vector<std::string> failed_checks;
  int checks_run = 0;

  bool all_pass() const { return failed_checks.empty(); }
};

RunRecord run(const ExperimentConfig& config);

std::string to_csv(const RunRecord& r);
std::string to_json(const RunRecord& r);

struct SecondOrderOptions {
  /// Also compute the smooth min-entropy lower anchor (two extra SDPs per n).
  bool lower_anchor = true;
};
/// Per n <= n_max: I_max of rho^{(x)n} (exact), the smooth upper estimator,
/// the lower anchor and the Gaussian rate, all reported per copy and halved.
RunRecord second_order_experiment(const DensityOperator& rho, const std::string& a,
                                  const std::string& e, std::size_t n_max, double eps,
                                  const SecondOrderOptions& opt = {});

/// rho^{(x)n} with factors relabelled label+"1".."n", grouped as all copies
/// of the first factor, then of the second, and so on.
DensityOperator tensor_power(const DensityOperator& rho, std::size_t n);

}  // namespace catdec::harness
