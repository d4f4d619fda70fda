#include "catdec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "harness_internal.hpp"

namespace catdec::harness {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = kFnvOffset) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex16(fnv1a(ss.str()));
}

// Portable uniform in (0, 1) from the seed stream.
double unit_uniform(std::uint64_t seed, std::uint64_t i) {
  return (double(derive_seed(seed, i) >> 11) + 0.5) * 0x1.0p-53;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_cell(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t> || std::is_same_v<T, std::uint64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          if (std::isnan(x)) return "nan";
          if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
          return io::format_double(x);
        } else {
          return csv_escape(x);
        }
      },
      v);
}

io::Json json_cell(const Value& v) {
  return std::visit(
      [](const auto& x) -> io::Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return nullptr;
        else
          return x;
      },
      v);
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::entropy: return "entropy";
    case Task::decouple: return "decouple";
    case Task::convex_split: return "convex-split";
    case Task::erase: return "erase";
    case Task::merge: return "merge";
    case Task::qsr: return "qsr";
    case Task::verify: return "verify";
    case Task::sweep: return "sweep";
  }
  return "unknown";
}

Task parse_task(const std::string& s) {
  for (Task t : {Task::entropy, Task::decouple, Task::convex_split, Task::erase, Task::merge,
                 Task::qsr, Task::verify, Task::sweep})
    if (s == to_string(t)) return t;
  if (s == "convex_split") return Task::convex_split;
  throw Error("unknown task '" + s + "'");
}

EnsembleSpec parse_ensemble(const std::string& s) {
  EnsembleSpec e;
  const auto open = s.find_first_of("(:");
  e.name = s.substr(0, open);
  if (open != std::string::npos) {
    std::string arg = s.substr(open + 1);
    if (s[open] == '(') {
      if (arg.empty() || arg.back() != ')') throw Error("malformed ensemble '" + s + "'");
      arg.pop_back();
    }
    try {
      std::size_t used = 0;
      e.param = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw Error("malformed ensemble parameter in '" + s + "'");
    }
  }
  if (e.name != "haar_pure" && e.name != "hs_mixed" && e.name != "classically_correlated" &&
      e.name != "werner")
    throw Error("unknown ensemble '" + e.name + "'");
  if (e.name == "werner" && !e.param) throw Error("werner needs a parameter, e.g. werner(0.5)");
  return e;
}

DensityOperator generate_state(const EnsembleSpec& e, const std::vector<std::size_t>& dims,
                               const std::vector<std::string>& labels, std::uint64_t seed) {
  if (dims.size() != labels.size() || dims.empty())
    throw DimensionError("ensemble dims and labels differ in length");
  std::vector<Factor> f;
  std::size_t total = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) throw DimensionError("dimensions must be positive");
    total *= dims[i];
    check_capacity(total);
    f.push_back({labels[i], dims[i]});
  }
  const SystemPartition p(f);

  if (e.name == "haar_pure") return sample_pure(p, seed).density();
  if (e.name == "hs_mixed") {
    std::size_t rank = total;
    if (e.param) {
      if (*e.param < 1 || *e.param != std::floor(*e.param))
        throw Error("hs_mixed rank must be a positive integer");
      rank = std::min(total, std::size_t(*e.param));
    }
    return DensityOperator(sample_density(total, rank, seed).matrix(), p);
  }
  if (dims.size() != 2) throw DimensionError(e.name + " needs exactly two factors");
  if (e.name == "classically_correlated") {
    const std::size_t k = std::min(dims[0], dims[1]);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = -std::log(unit_uniform(seed, i));
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    Matrix m = Matrix::Zero(Eigen::Index(total), Eigen::Index(total));
    for (std::size_t i = 0; i < k; ++i) {
      const auto idx = Eigen::Index(i * dims[1] + i);
      m(idx, idx) = w[i] / s;
    }
    return DensityOperator(m, p);
  }
  // werner
  if (dims[0] != dims[1]) throw DimensionError("werner needs two equal factors");
  const double q = *e.param;
  if (q < 0.0 || q > 1.0) throw Error("werner parameter must lie in [0, 1]");
  const Matrix phi = maximally_entangled(dims[0], labels[0], labels[1]).density().matrix();
  const auto n = Eigen::Index(total);
  return DensityOperator(q * phi + (1 - q) * Matrix::Identity(n, n) / double(total), p);
}

io::Json canonical_config(const ExperimentConfig& c) {
  if (!c.seed) throw Error("a seed is required");
  io::Json j;
  j["task"] = to_string(c.task);
  if (c.state_file) {
    j["state_digest"] = file_digest(*c.state_file);
  } else {
    j["ensemble"] = c.ensemble;
  }
  j["dims"] = c.dims;
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["n"] = c.n ? io::Json(*c.n) : io::Json(nullptr);
  j["trials"] = c.trials;
  j["seed"] = *c.seed;
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  return hex16(fnv1a(io::dump(canonical_config(c), -1)));
}

RunRecord run(const ExperimentConfig& c) {
  if (!c.seed) throw Error("a seed is required");
  if (c.trials < 1) throw Error("trials must be positive");
  if (c.threads < 1) throw Error("threads must be positive");
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw Error("eps must lie in (0, 1)");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw Error("delta must lie in (0, 1)");
  std::size_t total = 1;
  for (auto d : c.dims) {
    if (d == 0) throw DimensionError("dimensions must be positive");
    total *= d;
    check_capacity(total);
  }
  RunRecord rec;
  switch (c.task) {
    case Task::entropy: rec = detail::task_entropy(c); break;
    case Task::decouple: rec = detail::task_decouple(c); break;
    case Task::convex_split: rec = detail::task_convex_split(c); break;
    case Task::erase: rec = detail::task_erase(c); break;
    case Task::merge: rec = detail::task_merge(c); break;
    case Task::qsr: rec = detail::task_qsr(c); break;
    case Task::verify: rec = detail::task_verify(c); break;
    case Task::sweep: rec = detail::task_sweep(c); break;
  }
  rec.task = c.task;
  rec.seed = *c.seed;
  rec.config = canonical_config(c);
  rec.config_hash = config_hash(c);
  detail::tally_checks(rec);
  return rec;
}

std::string to_csv(const RunRecord& r) {
  std::string out;
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(r.columns[i]);
  }
  out += '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const RunRecord& r) {
  io::Json j;
  j["version"] = kVersion;
  j["task"] = to_string(r.task);
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["config"] = r.config;
  j["columns"] = r.columns;
  io::Json rows = io::Json::array();
  for (const auto& row : r.rows) {
    io::Json o = io::Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = json_cell(row[i]);
    rows.push_back(o);
  }
  j["rows"] = rows;
  io::Json s = io::Json::object();
  for (const auto& [k, v] : r.summary) s[k] = v;
  j["summary"] = s;
  j["checks_run"] = r.checks_run;
  j["failed_checks"] = r.failed_checks;
  j["all_pass"] = r.all_pass();
  return io::dump(j) + "\n";
}

DensityOperator tensor_power(const DensityOperator& rho, std::size_t n) {
  if (n == 0) throw Error("tensor power needs n >= 1");
  const auto& f = rho.partition().factors();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    total *= rho.dim();
    check_capacity(total);
  }
  auto copy = [&](std::size_t j) {
    std::vector<Factor> g;
    for (const auto& x : f) g.push_back({x.label + std::to_string(j + 1), x.dim});
    return DensityOperator(rho.matrix(), SystemPartition(g), rho.trace_mode());
  };
  DensityOperator out = copy(0);
  for (std::size_t j = 1; j < n; ++j) out = tensor(out, copy(j));
  std::vector<std::string> order;
  for (const auto& x : f)
    for (std::size_t j = 0; j < n; ++j) order.push_back(x.label + std::to_string(j + 1));
  return reorder(out, order);
}

namespace detail {

void add_row(RunRecord& rec, const Row& row) {
  if (rec.columns.empty() && rec.rows.empty()) {
    for (const auto& [k, v] : row) rec.columns.push_back(k);
  } else {
    bool same = row.size() == rec.columns.size();
    for (std::size_t i = 0; same && i < row.size(); ++i) same = row[i].first == rec.columns[i];
    if (!same) throw std::logic_error("row columns differ from the table header");
  }
  std::vector<Value> vals;
  vals.reserve(row.size());
  for (const auto& [k, v] : row) vals.push_back(v);
  rec.rows.push_back(std::move(vals));
}

void tally_checks(RunRecord& rec) {
  const auto pass_it = std::find(rec.columns.begin(), rec.columns.end(), "check_pass");
  if (pass_it == rec.columns.end()) return;
  const auto pi = std::size_t(pass_it - rec.columns.begin());
  const auto ai = std::size_t(std::find(rec.columns.begin(), rec.columns.end(), "anchor") -
                              rec.columns.begin());
  rec.checks_run = 0;
  rec.failed_checks.clear();
  for (std::size_t r = 0; r < rec.rows.size(); ++r) {
    const auto* pass = std::get_if<bool>(&rec.rows[r][pi]);
    if (!pass) continue;
    ++rec.checks_run;
    if (!*pass) {
      std::string name = "row " + std::to_string(r);
      if (ai < rec.columns.size())
        if (const auto* a = std::get_if<std::string>(&rec.rows[r][ai])) name = *a + " (" + name + ")";
      rec.failed_checks.push_back(name);
    }
  }
}

std::vector<std::vector<Row>> for_trials(int trials, int threads,
                                         const std::function<std::vector<Row>(int)>& f) {
  std::vector<std::vector<Row>> out(static_cast<std::size_t>(trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        out[std::size_t(t)] = f(t);
      } catch (...) {
        errors[std::size_t(t)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(threads, trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::uint64_t state_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, 2 * std::uint64_t(trial));
}
std::uint64_t protocol_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, 2 * std::uint64_t(trial) + 1);
}

DensityOperator with_roles(const DensityOperator& rho, const std::vector<std::string>& roles) {
  const auto dims = rho.partition().dims();
  if (dims.size() < roles.size())
    throw DimensionError("state has " + std::to_string(dims.size()) + " factors, task needs " +
                         std::to_string(roles.size()));
  std::vector<Factor> f;
  for (std::size_t i = 0; i + 1 < roles.size(); ++i) f.push_back({roles[i], dims[i]});
  std::size_t last = 1;
  for (std::size_t i = roles.size() - 1; i < dims.size(); ++i) last *= dims[i];
  f.push_back({roles.back(), last});
  return DensityOperator(rho.matrix(), SystemPartition(f), rho.trace_mode());
}

EntropyValue imax_lower(const DensityOperator& rho, const Labels& e, const Labels& a,
                        double eps) {
  if (eps < 1e-9) return imax(rho, e, a);
  EntropyValue v;
  v.epsilon = eps;
  v.bound_kind = BoundKind::lower;
  v.value = std::max({0.0, -hmin_smooth(rho, a, e, eps).value, -hmin_smooth(rho, e, a, eps).value});
  return v;
}

PureState to_pure(const DensityOperator& rho) {
  const Eigh e = eigh(rho.matrix());
  const auto top = e.values.size() - 1;
  if (e.values(top) < 1.0 - 1e-8) throw StateError("task needs a pure state");
  return PureState(e.vectors.col(top).normalized(), rho.partition());
}

StateSource::StateSource(const ExperimentConfig& c, std::vector<std::size_t> default_dims,
                         std::vector<std::string> r)
    : config(c), dims(c.dims.empty() ? std::move(default_dims) : c.dims), roles(std::move(r)) {
  if (c.state_file) file_state = with_roles(io::read_state(*c.state_file), roles);
}

DensityOperator StateSource::mixed(std::uint64_t seed) const {
  if (file_state) return *file_state;
  if (dims.size() != roles.size())
    throw DimensionError("--dims needs " + std::to_string(roles.size()) + " entries");
  return generate_state(parse_ensemble(config.ensemble), dims, roles, seed);
}

PureState StateSource::pure(std::uint64_t seed) const {
  if (file_state) return to_pure(*file_state);
  if (dims.size() != roles.size())
    throw DimensionError("--dims needs " + std::to_string(roles.size()) + " entries");
  const auto e = parse_ensemble(config.ensemble);
  if (e.name == "haar_pure") return to_pure(generate_state(e, dims, roles, seed));
  std::vector<std::size_t> d(dims.begin(), dims.end() - 1);
  std::vector<std::string> l(roles.begin(), roles.end() - 1);
  return purify(generate_state(e, d, l, seed), roles.back());
}

}  // namespace detail
}  // namespace catdec::harness
