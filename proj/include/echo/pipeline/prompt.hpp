#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/scene/scene_graph.hpp"

namespace echo {

enum class Stage { SceneUnderstanding, SuggestionGen, ActionGen, CategorySelect, Labeling };

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view name);

struct ImagePayload {
  std::string mime_type;  // "image/x-portable-pixmap" for top views
  std::string base64;
};

using Slots = std::map<std::string, std::string, std::less<>>;

// One provider request. The image travels beside the text; the user text
// carries a marker line where the image belongs.
struct PromptBundle {
  Stage stage = Stage::SuggestionGen;
  std::string system_text;
  std::string user_text;
  std::optional<ImagePayload> image;
  Slots slots;  // the values substituted into the templates
};

// Which input channels reach the provider, plus request knobs.
struct PipelineConfig {
  bool include_vision = true;
  bool include_object_params = true;
  bool include_suggestions_stage = true;
  int suggestion_count_hint = 5;
  int image_resolution = 256;
  double temperature = 0.0;
  std::string model_name;

  // "V+OP+S", "V+S", "V+OP" or "OP+S". Throws InvalidArgument.
  static PipelineConfig from_condition(std::string_view condition);
  // The condition name when the channel flags match one, else "custom".
  std::string condition_name() const;

  bool operator==(const PipelineConfig&) const = default;
};

inline constexpr std::string_view kAblationConditions[] = {"V+OP+S", "V+S", "V+OP", "OP+S"};

nlohmann::ordered_json config_to_json(const PipelineConfig& c);
// Missing fields keep their defaults; a "condition" field sets the channel
// flags first. Throws InvalidArgument on unknown fields or bad values.
PipelineConfig config_from_json(const nlohmann::ordered_json& j);

// Fixed template texts.
namespace prompts {
extern const std::string_view kSceneUnderstandingSystem;
extern const std::string_view kSuggestionSystem;
extern const std::string_view kActionSystem;
extern const std::string_view kCategorySystem;
extern const std::string_view kLabelingSystem;
inline constexpr std::string_view kImageMarker = "[image attached]";
}  // namespace prompts

// Builds the request for a scene stage (SceneUnderstanding, SuggestionGen,
// ActionGen). Required slots: "instruction" for SuggestionGen, "suggestion"
// for ActionGen. The object list is included iff include_object_params and
// the top view iff include_vision. Throws MissingSlot or InvalidArgument for
// the non-scene stages.
PromptBundle build_prompt(Stage stage, const PipelineConfig& config, const SceneGraph& scene,
                          const Slots& slots);

// Category selection for an object about to be added. Throws MissingSlot
// when the name is blank or the list is empty.
PromptBundle build_category_prompt(std::string_view object_name,
                                   const std::vector<std::string>& categories);

// Thumbnail annotation. Throws MissingSlot when the name or image is empty.
PromptBundle build_label_prompt(std::string_view object_name, ImagePayload thumbnail);

}  // namespace echo
