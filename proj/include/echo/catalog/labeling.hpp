#pragma once

#include <string>
#include <string_view>

#include "echo/catalog/catalog.hpp"
#include "echo/diagnostic.hpp"
#include "echo/pipeline/provider.hpp"

namespace echo {

// Labels one thumbnail. The record's asset_id and name are object_name; the
// description is cut to three sentences and the embedding is left empty.
// A banned category gets one corrective retry. Throws LabelSchemaError,
// BannedCategory or the provider's errors.
AssetRecord annotate_asset(std::string_view object_name, const std::string& thumbnail_bytes,
                           std::string_view mime_type, Provider& provider,
                           Diagnostics* diags = nullptr);

// Mime type from a thumbnail file extension (png, jpg/jpeg, ppm), or empty.
std::string thumbnail_mime(const std::string& path);

// Labels every thumbnail in dir (sorted by file name; the stem is the object
// name) and embeds the results.
Catalog build_catalog(const std::string& thumbnail_dir, Provider& provider,
                      const Embedder& embedder, Diagnostics* diags = nullptr);

struct CategoryChoice {
  std::string category;
  std::string description;
};

// Asks the provider which catalog category fits an object about to be
// added, and for a short description to search with. An answer outside the
// list gets one corrective retry. Throws CategoryNotInList, EmptyCatalog or
// the provider's errors.
CategoryChoice choose_category_and_description(std::string_view object_name,
                                               const Catalog& catalog, Provider& provider,
                                               Diagnostics* diags = nullptr);

}  // namespace echo
