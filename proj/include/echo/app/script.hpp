#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/engine/engine.hpp"

namespace echo {

// One line of a design script. See docs/scripts.md.
struct ScriptStep {
  enum class Kind { Instruction, Apply, ApplyAll, Undo, Reapply, Regenerate, ManualAdd,
                    ManualMutate, ManualDestroy, ManualUndo };
  Kind kind = Kind::Instruction;
  std::string text;           // instruction text, suggestion id or object name
  PipelineConfig config;      // Instruction only
  std::optional<int> session; // 1-based instruction ordinal; default is the latest
  ManualAdd add;
  std::vector<std::pair<Field, std::string>> changes;
};

struct Script {
  std::optional<std::string> scene_path;
  std::vector<ScriptStep> steps;
};

// Accepts a JSON array of steps or {"scene"?, "steps"}. Throws SchemaError.
Script parse_script(const nlohmann::ordered_json& j);
Script load_script(const std::string& path);

// Helpers shared with the HTTP layer. Vectors may be "(x, y, z)" strings or
// three-number arrays. Throws SchemaError or InvalidValue.
Vector3 vector_from_json(const nlohmann::ordered_json& j);
std::vector<std::pair<Field, std::string>> field_changes_from_json(const nlohmann::ordered_json& j);
ManualAdd manual_add_from_json(const nlohmann::ordered_json& j);

struct ScriptOutcome {
  std::string scene_id;
  std::vector<std::string> session_ids;
  std::size_t failed_entries = 0;     // entries left in Failed
  std::size_t session_errors = 0;     // error diagnostics on sessions
  bool ok() const { return failed_entries == 0 && session_errors == 0; }
};

// Runs the steps against scene_id in order. An apply that rolls back leaves
// its entry Failed and the script continues; unknown ids and illegal state
// changes throw (NotFound, WrongState).
ScriptOutcome run_script(Engine& engine, const std::string& scene_id, const Script& script);

}  // namespace echo
