#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace echo {

// Finds the first balanced top-level JSON object in free-form model output,
// skipping prose, code fences and brace-delimited text that is not JSON.
// Candidates that fail to parse get one repair pass (bare "..." placeholder
// lines and trailing commas removed) before moving on.
// With a key, the first object holding that key wins over earlier objects
// (prose such as 'use "{}" for names' parses as an empty object); when no
// object has it the first object is returned so the caller reports the
// schema problem.
// Throws Error(NoJsonFound); never throws anything else.
nlohmann::ordered_json extract_json_object(std::string_view text, std::string_view required_key = {});

}  // namespace echo
