#include "catdec/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace catdec::io {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.17g", x);
  return buf;
}

namespace {

void write_json(std::ostream& os, const Json& j, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent >= 0) os << '\n' << std::string(std::size_t(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x))
        os << format_double(x);
      else
        os << "null";
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        os << Json(k).dump() << (indent >= 0 ? ": " : ":");
        write_json(os, v, indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Short numeric arrays (complex pairs, dims) stay on one line.
      const bool flat = j.size() <= 2 && std::all_of(j.begin(), j.end(),
                                                     [](const Json& e) { return e.is_number(); });
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << (flat && indent >= 0 ? ", " : ",");
        first = false;
        if (!flat) pad(depth + 1);
        write_json(os, v, indent, depth + 1);
      }
      if (!flat) pad(depth);
      os << ']';
      return;
    }
    default:
      os << j.dump();
  }
}

Json partition_json(const SystemPartition& p) {
  Json dims = Json::array(), labels = Json::array();
  for (const auto& f : p.factors()) {
    dims.push_back(f.dim);
    labels.push_back(f.label);
  }
  return Json{{"dims", dims}, {"labels", labels}};
}

SystemPartition partition_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dims") || !j.contains("data"))
    throw StateError("state JSON needs \"dims\" and \"data\"");
  const auto& dims = j.at("dims");
  if (!dims.is_array() || dims.empty()) throw StateError("\"dims\" must be a non-empty array");
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    for (const auto& l : j.at("labels")) {
      if (!l.is_string()) throw StateError("labels must be strings");
      labels.push_back(l.get<std::string>());
    }
    if (labels.size() != dims.size()) throw StateError("labels and dims differ in length");
  } else {
    for (std::size_t i = 0; i < dims.size(); ++i) labels.push_back("S" + std::to_string(i));
  }
  std::vector<Factor> f;
  std::size_t total = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!dims[i].is_number_integer() || dims[i].get<long long>() < 1)
      throw StateError("dims must be positive integers");
    const auto d = dims[i].get<std::size_t>();
    if (d > kMaxDim || total * d > kMaxDim)
      throw CapacityError("state dimension exceeds capacity " + std::to_string(kMaxDim));
    total *= d;
    f.push_back({labels[i], d});
  }
  return SystemPartition(std::move(f));
}

std::vector<Complex> data_from_json(const Json& j) {
  const auto& data = j.at("data");
  if (!data.is_array()) throw StateError("\"data\" must be an array");
  std::vector<Complex> out;
  out.reserve(data.size());
  for (const auto& e : data) {
    if (e.is_number()) {
      out.emplace_back(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    } else {
      throw StateError("data entries must be [re, im] pairs");
    }
  }
  return out;
}

Json data_json(const Complex* p, std::size_t n) {
  Json data = Json::array();
  for (std::size_t i = 0; i < n; ++i) data.push_back(Json::array({p[i].real(), p[i].imag()}));
  return data;
}

Json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StateError(path + ": " + e.what());
  }
}

Json labels_json(const std::vector<std::string>& v) { return Json(v); }

}  // namespace

std::string dump(const Json& j, int indent) {
  std::ostringstream os;
  write_json(os, j, indent, 0);
  return os.str();
}

Json to_json(const Matrix& m, const SystemPartition& p) {
  if (std::size_t(m.rows()) != p.total_dim() || m.rows() != m.cols())
    throw DimensionError("matrix does not match partition");
  Json j = partition_json(p);
  const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  j["data"] = data_json(r.data(), std::size_t(r.size()));
  return j;
}

Json to_json(const DensityOperator& rho) { return to_json(rho.matrix(), rho.partition()); }

Json to_json(const PureState& psi) {
  Json j = partition_json(psi.partition());
  j["data"] = data_json(psi.vector().data(), std::size_t(psi.vector().size()));
  return j;
}

DensityOperator density_from_json(const Json& j) {
  const auto p = partition_from_json(j);
  const auto data = data_from_json(j);
  const std::size_t d = p.total_dim();
  if (data.size() == d) return pure_from_json(j).density();
  if (data.size() != d * d) throw StateError("data length matches neither a vector nor a matrix");
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = data[std::size_t(r * n + c)];
  return DensityOperator(m, p);
}

PureState pure_from_json(const Json& j) {
  const auto p = partition_from_json(j);
  const auto data = data_from_json(j);
  if (data.size() != p.total_dim()) throw StateError("pure state data has the wrong length");
  Vector v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v(Eigen::Index(i)) = data[i];
  return PureState(v, p);
}

DensityOperator read_state(const std::string& path) { return density_from_json(parse_file(path)); }
PureState read_pure_state(const std::string& path) { return pure_from_json(parse_file(path)); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

Json to_json(const EntropyValue& v) {
  Json j;
  j["value_bits"] = v.infinite ? Json(nullptr) : Json(v.value);
  j["infinite"] = v.infinite;
  j["epsilon"] = v.epsilon;
  j["bound_kind"] = to_string(v.bound_kind);
  j["lower_bound_bits"] = v.lower_bound ? Json(*v.lower_bound) : Json(nullptr);
  j["certificate"] = v.certificate ? Json(*v.certificate) : Json(nullptr);
  j["solver_status"] = sdp::to_string(v.solver_status);
  return j;
}

Json to_json(const CheckReport& r) {
  Json j;
  j["anchor"] = r.anchor;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["pass"] = r.pass;
  j["flags"] = labels_json(r.flags);
  Json d = Json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  j["details"] = d;
  return j;
}

Json to_json(const ProtocolTranscript& t, bool wall_clock) {
  Json j;
  j["protocol"] = t.protocol;
  j["version"] = kVersion;
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(Json{{"op", s.op}, {"detail", s.detail}});
  j["steps"] = steps;
  j["remainder_bits"] = t.remainder_bits;
  j["achieved_error"] = t.achieved_error;
  j["comm_qubits"] = t.comm_qubits;
  if (t.catalyst) {
    j["catalyst"] = Json{{"sigma", to_json(t.catalyst->sigma)},
                         {"n", t.catalyst->n},
                         {"k", t.catalyst->k},
                         {"m", t.catalyst->m},
                         {"delta", t.catalyst->delta}};
  } else {
    j["catalyst"] = nullptr;
  }
  j["unitaries"] = labels_json(t.unitaries);
  j["prescribed_n"] = t.prescribed_n;
  j["used_n"] = t.used_n;
  j["seed"] = t.seed;
  Json metrics = Json::object();
  for (const auto& [k, v] : t.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  j["flags"] = labels_json(t.flags);
  j["a1_labels"] = labels_json(t.a1_labels);
  j["a2_labels"] = labels_json(t.a2_labels);
  if (wall_clock) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    j["wall_clock"] = buf;
  }
  return j;
}

}  // namespace catdec::io
