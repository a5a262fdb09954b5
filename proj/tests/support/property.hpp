#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nlsql/schema.hpp"

namespace nlsql::testing {

/// One randomized full-pipeline run against scripted backends, checking the
/// structural invariants: initial pool size, correction fan-out and depth,
/// selected-membership, stage-to-role routing, and byte-determinism across a
/// repeated run. Returns a failure description, or nothing when all hold.
std::optional<std::string> random_pipeline_trial(std::uint32_t seed, const std::string& db_path,
                                                 const DatabaseSchema& schema);

}  // namespace nlsql::testing
