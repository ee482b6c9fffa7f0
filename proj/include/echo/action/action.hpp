#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/diagnostic.hpp"
#include "echo/scene/types.hpp"

namespace echo {

enum class Verb { Add, Move, Rotate, Scale, Color, Style, Destroy };

std::string_view to_string(Verb v);
// Accepts the verb names plus "Delete" (Destroy) and "Change" (Style),
// case-insensitively.
std::optional<Verb> verb_from_string(std::string_view name);

struct ScaleFactor {
  double value = 1.0;
  bool operator==(const ScaleFactor&) const = default;
};

// Verb-dependent payload: Vector3 for Add/Move/Rotate, ScaleFactor for
// Scale, ColorRGB for Color, Material for Style, nothing for Destroy.
using ActionKey = std::variant<std::monostate, Vector3, ScaleFactor, ColorRGB, Material>;

bool key_matches_verb(Verb verb, const ActionKey& key);
// Text of the key as it appears in the steps JSON "key" field.
std::string key_to_string(const ActionKey& key);
// Parses a steps JSON "key" field for the verb. Throws the parse_command
// error kinds.
ActionKey parse_key(Verb verb, std::string_view text);

// Catalog asset chosen for an Add.
struct AssetBinding {
  std::string asset_id;
  std::string category;
  Vector3 default_scale{1.0, 1.0, 1.0};

  bool operator==(const AssetBinding&) const = default;
};

struct Action {
  Verb verb = Verb::Destroy;
  std::string target;  // selected_obj
  ActionKey key;
  std::string command_text;
  // Add only: description used for asset matching, and the match itself.
  std::string add_description;
  std::optional<AssetBinding> asset;

  // Identity is verb, target and key; the original text and the asset
  // resolution are carried along but not compared.
  bool operator==(const Action& o) const {
    return verb == o.verb && target == o.target && key == o.key;
  }
};

using ActionStepList = std::vector<Action>;

// Parses one command of the seven-verb grammar:
//   Add {N} to [(x, y, z)]        Move {N} to [(x, y, z)]
//   Rotate {N} [(x, y, z)]        Scale {N} [m] times
//   Color {N} to word[(r, g, b)]  Change {N} to [Material]
//   Destroy {N}
// Throws SyntaxError (with offset), UnknownVerb, MalformedVector,
// UnknownMaterial or NonPositiveScale. Material aliases are reported
// through diags when given.
Action parse_command(std::string_view text, Diagnostics* diags = nullptr);

// Canonical text; parse_command(format_command(a)) == a.
std::string format_command(const Action& action);

nlohmann::ordered_json action_to_json(const Action& a);
Action action_from_json(const nlohmann::ordered_json& j);

}  // namespace echo
