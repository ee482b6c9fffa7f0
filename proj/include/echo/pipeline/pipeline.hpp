#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/action/steps.hpp"
#include "echo/catalog/catalog.hpp"
#include "echo/pipeline/provider.hpp"

namespace echo {

struct SuggestionText {
  std::string suggestion_id;
  std::string text;
  std::string origin_instruction;

  bool operator==(const SuggestionText&) const = default;
};

// Reads {"suggestions":[{"suggestion": "..."}, ...]} out of provider text.
// Ids are "s1", "s2", ... in array order. Blank entries are dropped with a
// warning. Throws NoJsonFound or SchemaError.
std::vector<SuggestionText> parse_suggestions(std::string_view text, std::string_view instruction,
                                              Diagnostics* diags = nullptr);

std::vector<SuggestionText> generate_suggestions(const PipelineConfig& config,
                                                 const SceneGraph& scene,
                                                 std::string_view instruction, Provider& provider,
                                                 Diagnostics* diags = nullptr);

// Where Add steps find their assets. Either pointer may be null, in which case
// every Add becomes a placeholder.
struct AssetSource {
  const Catalog* catalog = nullptr;
  const Embedder* embedder = nullptr;
};

// Category selection, then search inside that category. Failures other than
// provider failures leave the Add unbound and add an AssetResolutionError
// warning.
void resolve_assets(ActionStepList& actions, const AssetSource& assets, Provider& provider,
                    Diagnostics& diags);

StepsParseResult generate_actions(const PipelineConfig& config, const SceneGraph& scene,
                                  std::string_view suggestion, Provider& provider,
                                  const AssetSource& assets);

nlohmann::ordered_json suggestion_to_json(const SuggestionText& s);
SuggestionText suggestion_from_json(const nlohmann::ordered_json& j);

}  // namespace echo
