#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qdyn/activity.hpp"
#include "qdyn/bounds.hpp"
#include "qdyn/counting.hpp"

namespace qdyn::io {

/// Malformed model document; `pointer` is the JSON pointer of the offending value.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct ModelFile {
  LindbladModel model;
  TimeGrid grid{5.0, 500};
};

/// Parses the model schema. Structural problems raise SchemaError; physical
/// invariants are left to validate_model.
ModelFile parse_model(const nlohmann::json& doc);
ModelFile load_model(const std::filesystem::path& path);
nlohmann::json serialize_model(const ModelFile& file);

ComplexMatrix parse_matrix(const nlohmann::json& j, const std::string& pointer, int rows, int cols);
nlohmann::json serialize_matrix(const ComplexMatrix& a);

/// Built-in observables: sigma_x, sigma_y, sigma_z (d = 2), projector:k, total-jumps
/// (unit weights) and field (the model's weights). Returns nullopt for other names.
std::optional<Observable> builtin_observable(const std::string& name, const LindbladModel& m);
/// sigma_z for a qubit, projector:0 otherwise.
Observable default_system_observable(const LindbladModel& m);

std::uint64_t fnv1a64(const std::string& bytes);
/// Hash of the canonical serialization, as 16 hex digits.
std::string model_hash(const ModelFile& file);

/// Shortest decimal form that parses back to the same double (at most 17 significant digits).
std::string format_double(double x);

nlohmann::json report_summary(const BoundReport& r, const std::string& hash);
std::string report_csv(const BoundReport& r);
std::string activity_csv(const ActivityBundle& b);
std::string counting_csv(const CountingMoments& c);
std::string density_csv(const TimeSeries<ComplexMatrix>& rho);
nlohmann::json ensemble_summary(const TrajectoryEnsemble& e);

/// Writes through a temporary file in the same directory, then renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace qdyn::io
