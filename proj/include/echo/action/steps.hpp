#pragma once

#include <string_view>

#include "echo/action/action.hpp"
#include "echo/diagnostic.hpp"

namespace echo {

struct StepsParseResult {
  ActionStepList actions;
  Diagnostics diagnostics;
};

// Parses the provider's {"steps": [...]} payload. The JSON object is located
// tolerantly inside surrounding prose. Each step's "action_command" is the
// authority; "action", "selected_obj" and "key" are cross-checked and any
// disagreement is reported as a warning. Invalid steps are dropped with an
// error diagnostic rather than failing the whole list.
// Throws NoJsonFound or SchemaError (no "steps" array).
StepsParseResult parse_steps_json(std::string_view text);

}  // namespace echo
