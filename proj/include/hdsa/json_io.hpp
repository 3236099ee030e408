#pragma once

#include <hdsa/discrepancy.hpp>
#include <hdsa/fem_kit.hpp>
#include <hdsa/prior_model.hpp>

#include <json.hpp>

namespace hdsa {

using Json = nlohmann::json;

ScenarioConfig scenario_from_json(const Json& j);
Json to_json(const ScenarioConfig& c);

HyperParams hyper_from_json(const Json& j);
Json to_json(const HyperParams& h);
// Applies a partial update; unknown keys are a validation-error. Does not validate the result.
HyperParams apply_hyper_patch(const HyperParams& h, const Json& patch);

CalibrationDataset dataset_from_json(const Json& j);
Json to_json(const CalibrationDataset& d);

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// {"dim", "nodes", "values"}; transient values are time-major rows.
Json field_json(const FunctionSpace& space, const Vector& values);

Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace hdsa
