#include "echo/catalog/labeling.hpp"

#include <algorithm>
#include <filesystem>

#include "echo/error.hpp"
#include "echo/util/json_extract.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace {

constexpr std::size_t kMaxSentences = 3;

struct Label {
  std::string name;
  std::string description;
  std::string category;
};

Label parse_label(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = extract_json_object(text);
  } catch (const Error& e) {
    throw Error(Errc::LabelSchemaError, std::string("label: ") + e.what());
  }
  Label label;
  for (auto [field, out] : {std::pair{"name", &label.name},
                            std::pair{"description", &label.description},
                            std::pair{"category", &label.category}}) {
    if (!j.contains(field) || !j[field].is_string()) {
      throw Error(Errc::LabelSchemaError,
                  std::string("label has no \"") + field + "\" string");
    }
    *out = std::string(trim(j[field].get<std::string>()));
  }
  if (label.category.empty()) throw Error(Errc::LabelSchemaError, "label category is empty");
  return label;
}

}  // namespace

AssetRecord annotate_asset(std::string_view object_name, const std::string& thumbnail_bytes,
                           std::string_view mime_type, Provider& provider, Diagnostics* diags) {
  if (thumbnail_bytes.empty()) {
    throw Error(Errc::InvalidArgument, "thumbnail for '" + std::string(object_name) + "' is empty");
  }
  PromptBundle bundle = build_label_prompt(
      object_name, ImagePayload{std::string(mime_type), base64_encode(thumbnail_bytes)});

  Label label = parse_label(provider.complete(bundle));
  if (is_banned_category(label.category)) {
    if (diags) {
      diags->push_back(Diagnostic::warning(
          "BannedCategory", "'" + label.category + "' rejected for " + std::string(object_name) +
                                "; asking again"));
    }
    bundle.user_text += "\n\nThe category \"" + label.category +
                        "\" is not allowed. Give the category of the object in reality.";
    label = parse_label(provider.complete(bundle));
    if (is_banned_category(label.category)) {
      throw Error(Errc::BannedCategory, "provider kept answering banned category '" +
                                            label.category + "' for " + std::string(object_name));
    }
  }
  if (diags && label.name != object_name) {
    diags->push_back(Diagnostic::warning(
        "NameMismatch", "label names '" + label.name + "'; keeping '" + std::string(object_name) + "'"));
  }

  AssetRecord r;
  r.asset_id = std::string(object_name);
  r.name = std::string(object_name);
  r.description = first_sentences(label.description, kMaxSentences);
  r.category = label.category;
  return r;
}

std::string thumbnail_mime(const std::string& path) {
  std::string ext = to_lower(std::filesystem::path(path).extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".ppm") return "image/x-portable-pixmap";
  return {};
}

Catalog build_catalog(const std::string& thumbnail_dir, Provider& provider,
                      const Embedder& embedder, Diagnostics* diags) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(thumbnail_dir, ec)) {
    throw Error(Errc::IoError, thumbnail_dir + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(thumbnail_dir)) {
    if (entry.is_regular_file() && !thumbnail_mime(entry.path().string()).empty()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  Catalog catalog(embedder.id());
  for (const auto& f : files) {
    AssetRecord r = annotate_asset(f.stem().string(), read_file(f.string()),
                                   thumbnail_mime(f.string()), provider, diags);
    r.thumbnail_ref = f.filename().string();
    r.embedding = embedder.embed(r.description.empty() ? r.name : r.description);
    catalog.add(std::move(r));
  }
  return catalog;
}

CategoryChoice choose_category_and_description(std::string_view object_name,
                                               const Catalog& catalog, Provider& provider,
                                               Diagnostics* diags) {
  std::vector<std::string> categories = catalog.categories();
  if (categories.empty()) throw Error(Errc::EmptyCatalog, "catalog has no categories");
  PromptBundle bundle = build_category_prompt(object_name, categories);

  auto attempt = [&]() -> std::optional<CategoryChoice> {
    std::string reply = provider.complete(bundle);
    nlohmann::ordered_json j;
    try {
      j = extract_json_object(reply);
    } catch (const Error& e) {
      if (diags) diags->push_back(Diagnostic::warning(std::string(to_string(e.code())), e.what()));
      return std::nullopt;
    }
    std::string chosen = j.contains("Category1") && j["Category1"].is_string()
                             ? std::string(trim(j["Category1"].get<std::string>()))
                             : std::string();
    std::string description = j.contains("Description") && j["Description"].is_string()
                                  ? first_sentences(j["Description"].get<std::string>(), kMaxSentences)
                                  : std::string();
    for (const auto& c : categories) {
      if (iequals(c, chosen)) {
        return CategoryChoice{c, description.empty() ? std::string(object_name) : description};
      }
    }
    if (diags) {
      diags->push_back(Diagnostic::warning(
          "CategoryNotInList", "'" + chosen + "' is not a catalog category for " +
                                   std::string(object_name)));
    }
    return std::nullopt;
  };

  if (auto c = attempt()) return *c;
  bundle.user_text += "\n\nThe category must be exactly one of: " + join(categories, ", ") + ".";
  if (auto c = attempt()) return *c;
  throw Error(Errc::CategoryNotInList,
              "no listed category chosen for '" + std::string(object_name) + "'");
}

}  // namespace echo
