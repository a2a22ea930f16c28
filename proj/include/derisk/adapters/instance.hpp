#pragma once

#include "derisk/adapters/concentration.hpp"
#include "derisk/adapters/grid.hpp"
#include "derisk/adapters/interdiction.hpp"
#include "derisk/adapters/queueing.hpp"
#include "derisk/json_io.hpp"

#include <memory>

namespace derisk {

json to_json(const QueueingInstance& inst);
json to_json(const InterdictionInstance& inst);
json to_json(const GridInstance& inst);
json to_json(const ConcentrationInstance& inst);

QueueingInstance read_queueing_instance(const json& j, const std::string& path = "");
InterdictionInstance read_interdiction_instance(const json& j, const std::string& path = "");
GridInstance read_grid_instance(const json& j, const std::string& path = "");
/// Either an explicit instance or {"generate": {...}} for concentration_generate.
ConcentrationInstance read_concentration_instance(const json& j, const std::string& path = "");

/// Builds the adapter named by j["kind"]. Schema problems throw SchemaError,
/// semantic ones (e.g. infeasible data) ModelError.
std::unique_ptr<FeatureModel> load_model(const json& j);

/// Reads a decision vector: a bare array, {"x": [...]}, or a solve
/// outcome file ({"outcome": {"solution": [...]}}). A vector covering only the
/// non-auxiliary variables is expanded and completed by the model.
Vector read_solution(const json& j, const FeatureModel& model);

}  // namespace derisk
