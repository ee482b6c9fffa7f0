#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/action/action.hpp"
#include "echo/diagnostic.hpp"
#include "echo/scene/scene_graph.hpp"

namespace echo {

// Undo records. Objects are tracked by id; names are kept for messages and
// for re-creating destroyed objects.
struct RestoreField {
  ObjectId id;
  std::string name;
  FieldValue old_value;
  FieldValue new_value;  // what this patch's action wrote, for conflict detection
};
struct DeleteObject {
  ObjectId id;
  std::string name;
};
struct RestoreObject {
  RemovedObject removed;
};
using UndoRecord = std::variant<RestoreField, DeleteObject, RestoreObject>;

struct InversePatch {
  std::vector<UndoRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  void append(InversePatch other);
};

nlohmann::ordered_json patch_to_json(const InversePatch& patch);
InversePatch patch_from_json(const nlohmann::ordered_json& j);

// Neutral gray, used for Adds with no resolved catalog asset.
inline constexpr ColorRGB kPlaceholderColor{128, 128, 128};

struct ExecutionOptions {
  // Create a placeholder for a missing target instead of failing with
  // TargetMissing.
  bool auto_add_missing = false;
};

// State carried across one action sequence: Adds that had to be renamed on
// collision ("Sofa" -> "Sofa_2") redirect later actions on the same name.
struct ExecutionContext {
  ExecutionOptions options;
  std::map<std::string, std::string, std::less<>> renamed;
  Diagnostics diagnostics;

  std::string resolve(std::string_view target) const;
};

struct ExecutionResult {
  Revision revision;
  InversePatch patch;
};

// Executes one action as a single mutation batch. Add instantiates at the
// key position; Move sets the position; Rotate sets the rotation; Scale
// multiplies every scale component (results are kept >= 0.01); Color and
// Style set color and material; Destroy removes. Throws TargetMissing when
// a non-Add target is absent and the options do not allow a placeholder.
ExecutionResult execute(const Action& action, SceneGraph& scene, ExecutionContext& ctx);
ExecutionResult execute(const Action& action, SceneGraph& scene);

// Executes the list in order inside one batch and returns the concatenated
// patch. Stops at the first failure and rethrows; the caller owns rollback.
ExecutionResult execute_sequence(const ActionStepList& actions, SceneGraph& scene,
                                 ExecutionContext& ctx);

// Applies the undo records in reverse order as one batch. Conflicts are
// tolerated: a field changed since by someone else is still restored to this
// patch's pre-value, objects already gone are skipped, and re-created objects
// that now collide by name are suffixed. Each case is reported in diags.
Revision invert(const InversePatch& patch, SceneGraph& scene, Diagnostics* diags = nullptr);

}  // namespace echo
