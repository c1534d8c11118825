#pragma once

// Private JSON helpers shared by the serialization units.

#include <json.hpp>

#include "edl/net.hpp"

namespace edl::detail {

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

}  // namespace edl::detail
