#pragma once

#include <string>

#include "interceptsim/engine.hpp"
#include "interceptsim/workload.hpp"

namespace icept {

// JSON bindings for the two user-facing configuration blobs (see the C header
// for the schemas). Both throw ConfigError / ParseError on bad input.
WorkloadSpec workload_spec_from_json(const std::string& text);
std::string workload_spec_to_json(const WorkloadSpec& spec);

RunOptions run_options_from_json(const std::string& text);

std::string class_stats_to_json(const std::vector<ClassStats>& stats);

}  // namespace icept
