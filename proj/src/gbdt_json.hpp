#pragma once

#include <nlohmann/json.hpp>

#include "incidentlab/gbdt.hpp"

namespace incidentlab {

nlohmann::json tree_ensemble_to_json(const TreeEnsemble& model);
TreeEnsemble tree_ensemble_from_json(const nlohmann::json& doc);

}  // namespace incidentlab
