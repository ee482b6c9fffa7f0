#include "echo/pipeline/pipeline.hpp"

#include "echo/catalog/labeling.hpp"
#include "echo/error.hpp"
#include "echo/util/json_extract.hpp"
#include "echo/util/text.hpp"

namespace echo {

std::vector<SuggestionText> parse_suggestions(std::string_view text, std::string_view instruction,
                                              Diagnostics* diags) {
  nlohmann::ordered_json doc = extract_json_object(text, "suggestions");
  if (!doc.contains("suggestions") || !doc["suggestions"].is_array()) {
    throw Error(Errc::SchemaError, "provider output has no \"suggestions\" array");
  }
  std::vector<SuggestionText> out;
  const auto& list = doc["suggestions"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& item = list[i];
    std::string body;
    if (item.is_string()) {
      body = item.get<std::string>();
    } else if (item.is_object() && item.contains("suggestion") && item["suggestion"].is_string()) {
      body = item["suggestion"].get<std::string>();
    } else {
      throw Error(Errc::SchemaError, "suggestion " + std::to_string(i) + " has no \"suggestion\" string");
    }
    body = std::string(trim(body));
    if (body.empty()) {
      if (diags) diags->push_back(Diagnostic::warning("EmptySuggestion", "blank suggestion dropped", i));
      continue;
    }
    out.push_back({"s" + std::to_string(out.size() + 1), std::move(body), std::string(instruction)});
  }
  return out;
}

std::vector<SuggestionText> generate_suggestions(const PipelineConfig& config,
                                                 const SceneGraph& scene,
                                                 std::string_view instruction, Provider& provider,
                                                 Diagnostics* diags) {
  if (!config.include_suggestions_stage) {
    throw Error(Errc::InvalidArgument, "suggestion stage is disabled in condition " +
                                           config.condition_name());
  }
  PromptBundle bundle = build_prompt(Stage::SuggestionGen, config, scene,
                                     {{"instruction", std::string(instruction)}});
  return parse_suggestions(provider.complete(bundle), instruction, diags);
}

void resolve_assets(ActionStepList& actions, const AssetSource& assets, Provider& provider,
                    Diagnostics& diags) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Action& a = actions[i];
    if (a.verb != Verb::Add) continue;
    if (!assets.catalog || !assets.embedder || assets.catalog->empty()) {
      diags.push_back(Diagnostic::warning("AssetResolutionError",
                                          "no catalog; '" + a.target + "' added as a placeholder",
                                          i, a.command_text));
      continue;
    }
    try {
      Diagnostics notes;
      CategoryChoice choice =
          choose_category_and_description(a.target, *assets.catalog, provider, &notes);
      for (auto& n : notes) {
        n.step_index = i;
        diags.push_back(std::move(n));
      }
      auto hits = assets.catalog->search(*assets.embedder, choice.category, choice.description, 1);
      if (hits.empty()) throw Error(Errc::EmptyCatalog, "category '" + choice.category + "' is empty");
      const AssetRecord* rec = assets.catalog->find(hits.front().asset_id);
      a.add_description = choice.description;
      a.asset = AssetBinding{rec->asset_id, rec->category, rec->default_scale};
    } catch (const Error& e) {
      if (is_provider_failure(e.code())) throw;
      diags.push_back(Diagnostic::warning(
          "AssetResolutionError",
          "'" + a.target + "' added as a placeholder: " + std::string(to_string(e.code())) + ": " +
              e.what(),
          i, a.command_text));
    }
  }
}

StepsParseResult generate_actions(const PipelineConfig& config, const SceneGraph& scene,
                                  std::string_view suggestion, Provider& provider,
                                  const AssetSource& assets) {
  PromptBundle bundle =
      build_prompt(Stage::ActionGen, config, scene, {{"suggestion", std::string(suggestion)}});
  StepsParseResult result = parse_steps_json(provider.complete(bundle));
  resolve_assets(result.actions, assets, provider, result.diagnostics);
  return result;
}

nlohmann::ordered_json suggestion_to_json(const SuggestionText& s) {
  return {{"suggestion_id", s.suggestion_id},
          {"text", s.text},
          {"origin_instruction", s.origin_instruction}};
}

SuggestionText suggestion_from_json(const nlohmann::ordered_json& j) {
  try {
    return {j.at("suggestion_id").get<std::string>(), j.at("text").get<std::string>(),
            j.value("origin_instruction", "")};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("suggestion: ") + e.what());
  }
}

}  // namespace echo
