#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/catalog/embedder.hpp"
#include "echo/scene/types.hpp"

namespace echo {

struct AssetRecord {
  std::string asset_id;
  std::string name;
  std::string description;
  std::string category;
  Embedding embedding;  // empty until embedded
  std::string thumbnail_ref;
  Vector3 default_scale{1.0, 1.0, 1.0};
};

// "3D model" and "3D shape", compared case-insensitively.
bool is_banned_category(std::string_view category);

struct SearchHit {
  std::string asset_id;
  double score = 0.0;
};

// Labeled asset library with a category index. Records from label files
// carry no embedding and are embedded on first search. Searching is safe
// from several threads.
class Catalog {
 public:
  explicit Catalog(std::string embedder_id = std::string(HashNgramEmbedder::kId));
  Catalog(Catalog&&) = default;
  Catalog& operator=(Catalog&&) = default;

  const std::string& embedder_id() const { return embedder_id_; }
  const std::vector<AssetRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Throws InvalidArgument (blank or duplicate asset_id, blank category),
  // BannedCategory, or InvalidValue (embedding not unit length).
  void add(AssetRecord record);

  const AssetRecord* find(std::string_view asset_id) const;
  const AssetRecord* find_by_name(std::string_view name) const;
  // Sorted category names.
  std::vector<std::string> categories() const;
  bool has_category(std::string_view category) const;

  // Ranks candidates by cosine similarity to the description, highest
  // first, ties by ascending asset_id. With a category only that bucket is
  // searched. limit 0 returns every candidate. Throws EmptyCatalog,
  // UnknownCategory, EmbedderMismatch or EmptyText.
  std::vector<SearchHit> search(const Embedder& embedder, const std::optional<std::string>& category,
                                std::string_view description, std::size_t limit = 0) const;

  // Fills missing embeddings. Throws EmbedderMismatch when existing
  // embeddings come from another embedder.
  void embed_all(const Embedder& embedder) const;

  bool operator==(const Catalog& o) const;

 private:
  mutable std::string embedder_id_;
  mutable std::vector<AssetRecord> records_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> category_index_;
  mutable std::unique_ptr<std::mutex> embed_mu_ = std::make_unique<std::mutex>();
};

nlohmann::ordered_json record_to_json(const AssetRecord& r);
// Reads catalog records and label objects in the labeling prompt format
// ({"name", "description", "category"}); asset_id defaults to name.
AssetRecord record_from_json(const nlohmann::ordered_json& j);

// {"embedder_id": ..., "records": [...]}.
nlohmann::ordered_json catalog_to_json(const Catalog& c);
void save_catalog(const Catalog& c, const std::string& path);

// Accepts a catalog file, a JSON array of label objects, or a directory of
// label files (*.json, one label object each, read in name order). Label
// input has no embeddings; they are computed lazily. Throws IoError or
// SchemaError, plus the add() errors.
Catalog load_catalog(const std::string& path);

// Same inputs as load_catalog but without validation, for linting.
std::vector<AssetRecord> read_records(const std::string& path);

struct LintIssue {
  std::string asset_id;
  std::string kind;  // EmptyDescription, BannedCategory, EmptyCategory,
                     // DuplicateId, DuplicateName, DuplicateDescription,
                     // LongDescription
  std::string message;
};

std::vector<LintIssue> lint_records(const std::vector<AssetRecord>& records);

// First n sentences (terminated by '.', '!' or '?' followed by whitespace
// or the end), trimmed.
std::string first_sentences(std::string_view text, std::size_t n);

}  // namespace echo
