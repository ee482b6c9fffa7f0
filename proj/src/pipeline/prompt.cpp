#include "echo/pipeline/prompt.hpp"

#include "echo/error.hpp"
#include "echo/scene/top_view.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace prompts {

const std::string_view kSceneUnderstandingSystem =
    "I will give you a list of objects in json format, includes the names, coordinate points, "
    "rotation vectors, sizes of the objects, and hexadecimal color codes of objects in the 3D "
    "scene, also I will provide you the top view picture of the 3D scene, please understand "
    "this scene, please understand this scene.";

const std::string_view kSuggestionSystem = R"P(As a VR scene designer, you are presented with a detailed information of a 3D space scene. Your task is to interpret abstract user instructions for modifying this VR scene. Based on the scene's current layout, objects' attributes, and user commands, propose several creative and feasible suggestions for adjustments. These suggestions may involve repositioning furniture, altering object colors, adjusting sizes, or introducing new elements to enhance the space's functionality and aesthetic appeal. Ensure your proposals are clear, specific, and aligned with the user's desires, providing a blend of practicality and innovative design. Please provide modification suggestions and solutions with JSON format. For example, if you provide some suggestions, the result is:

{
    "suggestions":[
        {
            "suggestion":"add something and move something, change color"
        },
        {
            "suggestion":"add something and change color, also, change style"
        },
        {
            "suggestion":"change color, destroy something"
        },
                                ....
        {
            "suggestion":"move something, rotate something"
                                }]
                            }

Each suggestions item can only include the suggestion, DO NOT include any other characters. Avoid extraneous text or characters outside the specified JSON format. The return format only includes JSON content, start with the first { of json.)P";

const std::string_view kActionSystem = R"P(Translate design suggestions into specific VR 3D space modifications based on JSON scene parameters. Output must strictly adhere to the JSON format below, detailing implementation steps for Add, Move, Rotate, Scale, Color, Style, and Destroy actions. You must remember DO NOT include other redundant text in the generated content, the return format only includes JSON content, start with the first "{" of JSON:

{
"steps": [{
    "action": "Specify_Action_Name",
    "action_command": "Action_Name {Object_Name} to [Modification_Value]",
    "selected_obj": "Object_Name",
    "key": "Modification_Value"
    },
    ...
    {
    "action": "Specify_Action_Name",
    "action_command": "Action_Name {Object_Name} to [Modification_Value]",
    "selected_obj": "Object_Name",
    "key": "Modification_Value"
    }]
}

Notes: For Add Command: Set 'action_name' to "Add", use the format "Add {Object} to [(Position)]", and provide "key" with Vector3 position in (0,0,0) format as "Modification_Value". For Move Command: Use "Move {Object_Name} to [(New_Position)]" format. For Rotate Command: Use "Rotate {Object} [(Angle)]" format, specifying Vector3 angle in (0,0,0) format in "key". Make sure the back of objects facing the nearest wall. For Scale Command: Use "Scale {TV} [1.2] times", should specify scaling extent as an integer in "key". For Color Command: Use "Color {Table} to red[(255, 0, 0)]", color require RGB Vector3 in (0,0,0) format for Modification_Value. For Style Command, Use "Change {Table} to [Wood]", "key" is the material type as a string, including Basket, Black_Plastic, Brick, Bronze_Metal, Copper_metal, Dark_Oak, Flow_Water, Flower_Pattern, Glass, Glass_Dark, Golden_metal_material, Grass, Leaf_Pattern, Leather, Marble, Rustic_Wood, Shiny_Metal. For Destroy Command: "Destroy {Cup}", need "selected_obj", action command and key. If the object you want to manipulate does not exist in the scene, you will need to "Add" this object before you manipulate it. Do not forget {} and () Avoid extraneous text or characters outside the specified JSON format, the return format only includes json content, start with the first "{" of JSON")P";

const std::string_view kCategorySystem = R"P(I will offer you a name of object, a list of categories, you should provide me with the perfect category that best fit the object and the description about the object, description should include the function, material, aesthetics and psychology of this object, please use at most three simple sentences to finish the description, try to keep description very concise.you give me categories you chosen and description as this JSON format:

{
"Category1":"Category1",
"Description":"description"
})P";

const std::string_view kLabelingSystem = R"P(Assume you're assisting users in automating picture labeling, You will receive a base64 code of a image. Based on all this data, generate the information of data as JSON format.

The format should like:

{
    "name":"object_name",
    "description":"object_description",
    "category":"object_category"
}.

Here, I will offer you the object_name, you should use it to generate the JSON. Description should only include the function, color, material, aesthetics and psychology of this object in the image, please use at most three simple sentences to finish the description, try to keep description very concise. Category is the category in reality of the object in the image. Categories such as "3D model", "3D shape" and so on are not be allowed. Do not generate extra string or information when you generate JSON.)P";

}  // namespace prompts

namespace {

constexpr std::string_view kStageNames[] = {"SceneUnderstanding", "SuggestionGen", "ActionGen",
                                            "CategorySelect", "Labeling"};

std::string required_slot(const Slots& slots, std::string_view name, Stage stage) {
  auto it = slots.find(name);
  if (it == slots.end() || trim(it->second).empty()) {
    throw Error(Errc::MissingSlot, "slot '" + std::string(name) + "' is required for " +
                                       std::string(to_string(stage)));
  }
  return it->second;
}

}  // namespace

std::string_view to_string(Stage s) { return kStageNames[static_cast<int>(s)]; }

std::optional<Stage> stage_from_string(std::string_view name) {
  for (int i = 0; i < 5; ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

PipelineConfig PipelineConfig::from_condition(std::string_view condition) {
  PipelineConfig c;
  if (condition == "V+OP+S") return c;
  if (condition == "V+S") {
    c.include_object_params = false;
  } else if (condition == "V+OP") {
    c.include_suggestions_stage = false;
  } else if (condition == "OP+S") {
    c.include_vision = false;
  } else {
    throw Error(Errc::InvalidArgument, "unknown condition '" + std::string(condition) + "'");
  }
  return c;
}

std::string PipelineConfig::condition_name() const {
  for (std::string_view name : kAblationConditions) {
    PipelineConfig c = from_condition(name);
    if (c.include_vision == include_vision && c.include_object_params == include_object_params &&
        c.include_suggestions_stage == include_suggestions_stage) {
      return std::string(name);
    }
  }
  return "custom";
}

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  return {{"condition", c.condition_name()},
          {"include_vision", c.include_vision},
          {"include_object_params", c.include_object_params},
          {"include_suggestions_stage", c.include_suggestions_stage},
          {"suggestion_count_hint", c.suggestion_count_hint},
          {"image_resolution", c.image_resolution},
          {"temperature", c.temperature},
          {"model_name", c.model_name}};
}

PipelineConfig config_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "config must be an object");
  PipelineConfig c;
  try {
    if (j.contains("condition")) {
      std::string name = j["condition"].get<std::string>();
      if (name != "custom") c = PipelineConfig::from_condition(name);
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "condition") continue;
      if (key == "include_vision") {
        c.include_vision = value.get<bool>();
      } else if (key == "include_object_params") {
        c.include_object_params = value.get<bool>();
      } else if (key == "include_suggestions_stage") {
        c.include_suggestions_stage = value.get<bool>();
      } else if (key == "suggestion_count_hint") {
        c.suggestion_count_hint = value.get<int>();
      } else if (key == "image_resolution") {
        c.image_resolution = value.get<int>();
      } else if (key == "temperature") {
        c.temperature = value.get<double>();
      } else if (key == "model_name") {
        c.model_name = value.get<std::string>();
      } else {
        throw Error(Errc::InvalidArgument, "unknown config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("config: ") + e.what());
  }
  if (c.suggestion_count_hint < 1) {
    throw Error(Errc::InvalidArgument, "suggestion_count_hint must be >= 1");
  }
  if (c.image_resolution < kMinTopViewResolution || c.image_resolution > kMaxTopViewResolution) {
    throw Error(Errc::InvalidArgument, "image_resolution out of range");
  }
  return c;
}

PromptBundle build_prompt(Stage stage, const PipelineConfig& config, const SceneGraph& scene,
                          const Slots& slots) {
  PromptBundle b;
  b.stage = stage;
  std::vector<std::string> blocks;
  switch (stage) {
    case Stage::SceneUnderstanding:
      b.system_text = std::string(prompts::kSceneUnderstandingSystem);
      break;
    case Stage::SuggestionGen: {
      std::string instruction = required_slot(slots, "instruction", stage);
      b.slots["instruction"] = instruction;
      b.system_text = std::string(prompts::kSceneUnderstandingSystem) + "\n\n" +
                      std::string(prompts::kSuggestionSystem);
      blocks.push_back("User Instruction : " + instruction);
      break;
    }
    case Stage::ActionGen: {
      std::string suggestion = required_slot(slots, "suggestion", stage);
      b.slots["suggestion"] = suggestion;
      b.system_text = std::string(prompts::kSceneUnderstandingSystem) + "\n\n" +
                      std::string(prompts::kActionSystem);
      blocks.push_back("Suggestion : " + suggestion);
      break;
    }
    case Stage::CategorySelect:
    case Stage::Labeling:
      throw Error(Errc::InvalidArgument,
                  std::string(to_string(stage)) + " prompts are not built from a scene");
  }

  if (config.include_object_params) {
    std::string params = serialize_parameters(scene);
    b.slots["object_list"] = params;
    blocks.push_back("Object list: " + params + ".");
  }
  if (config.include_vision) {
    TopViewImage img = render_top_view(scene, config.image_resolution);
    b.image = ImagePayload{"image/x-portable-pixmap", img.base64()};
    blocks.push_back("Top View Image: " + std::string(prompts::kImageMarker));
  }
  if (stage == Stage::SuggestionGen) {
    blocks.push_back("Propose about " + std::to_string(config.suggestion_count_hint) +
                     " suggestions.");
  }
  b.user_text = join(blocks, "\n\n");
  return b;
}

PromptBundle build_category_prompt(std::string_view object_name,
                                   const std::vector<std::string>& categories) {
  if (trim(object_name).empty()) {
    throw Error(Errc::MissingSlot, "slot 'object_name' is required for CategorySelect");
  }
  if (categories.empty()) {
    throw Error(Errc::MissingSlot, "slot 'categories' is required for CategorySelect");
  }
  PromptBundle b;
  b.stage = Stage::CategorySelect;
  b.system_text = std::string(prompts::kCategorySystem);
  std::string list = join(categories, ", ");
  b.slots["object_name"] = std::string(object_name);
  b.slots["categories"] = list;
  b.user_text = "The object is : " + std::string(object_name) + ".\n\nCategories include: " + list +
                ".";
  return b;
}

PromptBundle build_label_prompt(std::string_view object_name, ImagePayload thumbnail) {
  if (trim(object_name).empty()) {
    throw Error(Errc::MissingSlot, "slot 'object_name' is required for Labeling");
  }
  if (thumbnail.base64.empty()) {
    throw Error(Errc::MissingSlot, "a thumbnail image is required for Labeling");
  }
  PromptBundle b;
  b.stage = Stage::Labeling;
  b.system_text = std::string(prompts::kLabelingSystem);
  b.slots["object_name"] = std::string(object_name);
  b.user_text = "object_name: " + std::string(object_name) + "\n\nimage: " +
                std::string(prompts::kImageMarker);
  b.image = std::move(thumbnail);
  return b;
}

}  // namespace echo
