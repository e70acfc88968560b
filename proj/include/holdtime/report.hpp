#pragma once

#include <json.hpp>

#include "holdtime/chain.hpp"

namespace holdtime {

// Full analysis of a spec: hitting/escape data, decay parameters, and either
// the transient limit or the phi/kappa solution with its limit vector.
// Non-finite numbers come out as null.
nlohmann::json analyze_report(const ChainSpec& spec);

}  // namespace holdtime
