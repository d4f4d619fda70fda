#include <iostream>

#include "CLI11.hpp"
#include "catdec/harness.hpp"

namespace {

constexpr int kExitCheckFailed = 2;
constexpr int kExitResource = 3;

struct Flags {
  std::uint64_t seed = catdec::harness::kDefaultSeed;
  double eps = 0.1;
  double delta = 0.1;
  std::size_t n = 0;
  int trials = 1;
  int threads = 1;
  std::string state;
  std::string ensemble = "hs_mixed";
  std::vector<std::size_t> dims;
  std::string out;
  std::string format = "csv";
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--seed", f.seed, "Run seed")->capture_default_str();
  sub->add_option("--eps", f.eps, "Smoothing / target error")->capture_default_str();
  sub->add_option("--delta", f.delta, "Convex split slack")->capture_default_str();
  sub->add_option("--n", f.n, "Copy number (sweep: largest n)");
  sub->add_option("--trials", f.trials, "Number of trials")->capture_default_str();
  sub->add_option("--threads", f.threads, "Worker threads")->capture_default_str();
  sub->add_option("--state", f.state, "State JSON file");
  sub->add_option("--ensemble", f.ensemble,
                  "haar_pure | hs_mixed[(rank)] | classically_correlated | werner(p)")
      ->capture_default_str();
  sub->add_option("--dims", f.dims, "Factor dimensions, e.g. --dims 2,2")->delimiter(',');
  sub->add_option("--out", f.out, "Output file (default stdout)");
  sub->add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

catdec::harness::ExperimentConfig to_config(const std::string& task, const Flags& f) {
  catdec::harness::ExperimentConfig c;
  c.task = catdec::harness::parse_task(task);
  c.seed = f.seed;
  c.eps = f.eps;
  c.delta = f.delta;
  if (f.n > 0) c.n = f.n;
  c.trials = f.trials;
  c.threads = f.threads;
  if (!f.state.empty()) c.state_file = f.state;
  c.ensemble = f.ensemble;
  c.dims = f.dims;
  if (!f.out.empty()) c.out = f.out;
  c.format = f.format == "json" ? catdec::harness::Format::json : catdec::harness::Format::csv;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catalytic decoupling toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(catdec::kVersion));
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> tasks{
      {"entropy", "One-shot entropies of a bipartite state A|E"},
      {"decouple", "Catalytic decoupling by convex split (and the embezzling route)"},
      {"convex-split", "Exact convex split error over a range of copy numbers"},
      {"erase", "Pauli erasure and the erasure/decoupling conversions"},
      {"merge", "Catalytic state merging of A into B, reference R"},
      {"qsr", "State redistribution A|B|C|R with the trivial witness"},
      {"verify", "Theorem-check suite; exit 2 on any failure"},
      {"sweep", "Second-order sweep of I_max over tensor powers"}};
  for (const auto& [name, help] : tasks) add_flags(app.add_subcommand(name, help), flags);

  CLI11_PARSE(app, argc, argv);
  const std::string task = app.get_subcommands().front()->get_name();

  try {
    const auto config = to_config(task, flags);
    const auto record = catdec::harness::run(config);
    const std::string report = config.format == catdec::harness::Format::json
                                   ? catdec::harness::to_json(record)
                                   : catdec::harness::to_csv(record);
    if (config.out)
      catdec::io::write_file(*config.out, report);
    else
      std::cout << report;
    std::cerr << task << ": config " << record.config_hash << ", " << record.rows.size()
              << " rows, " << record.checks_run << " checks, " << record.failed_checks.size()
              << " failed\n";
    for (const auto& f : record.failed_checks) std::cerr << "  failed: " << f << "\n";
    if (config.task == catdec::harness::Task::verify && !record.all_pass())
      return kExitCheckFailed;
    return 0;
  } catch (const catdec::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kExitResource;
  } catch (const catdec::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitResource;
  } catch (const catdec::StateError& e) {
    std::cerr << "malformed state: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
