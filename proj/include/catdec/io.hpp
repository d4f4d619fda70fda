#pragma once

#include <string>

#include "json.hpp"

#include "catdec/entropies.hpp"
#include "catdec/protocols.hpp"
#include "catdec/qstate.hpp"

namespace catdec {

inline constexpr const char* kVersion = "0.1.0";

struct IoError : Error {
  using Error::Error;
};

namespace io {

using Json = nlohmann::ordered_json;

/// Fixed 17 significant digits, so doubles round-trip exactly.
std::string format_double(double x);
/// Serializes with every float written by format_double. Non-finite floats
/// become null.
std::string dump(const Json& j, int indent = 2);

/// {"dims": [...], "labels": [...], "data": [[re, im], ...]} with the
/// matrix in row-major order.
Json to_json(const Matrix& m, const SystemPartition& p);
Json to_json(const DensityOperator& rho);
/// Same layout with a length-d data list.
Json to_json(const PureState& psi);

/// Accepts either a state vector (d entries) or a density matrix (d*d).
DensityOperator density_from_json(const Json& j);
PureState pure_from_json(const Json& j);

DensityOperator read_state(const std::string& path);
PureState read_pure_state(const std::string& path);
void write_file(const std::string& path, const std::string& content);

Json to_json(const EntropyValue& v);
Json to_json(const CheckReport& r);
/// Adds the library version and, when requested, the wall-clock time.
Json to_json(const ProtocolTranscript& t, bool wall_clock = true);

}  // namespace io
}  // namespace catdec
