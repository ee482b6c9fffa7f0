#include "echo/catalog/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

bool is_banned_category(std::string_view category) {
  std::string_view c = trim(category);
  return iequals(c, "3D model") || iequals(c, "3D shape");
}

Catalog::Catalog(std::string embedder_id) : embedder_id_(std::move(embedder_id)) {}

void Catalog::add(AssetRecord record) {
  record.asset_id = std::string(trim(record.asset_id));
  record.category = std::string(trim(record.category));
  if (record.asset_id.empty()) throw Error(Errc::InvalidArgument, "asset_id is blank");
  if (find(record.asset_id)) {
    throw Error(Errc::InvalidArgument, "duplicate asset_id '" + record.asset_id + "'");
  }
  if (record.category.empty()) {
    throw Error(Errc::InvalidArgument, "asset '" + record.asset_id + "' has no category");
  }
  if (is_banned_category(record.category)) {
    throw Error(Errc::BannedCategory,
                "asset '" + record.asset_id + "' has banned category '" + record.category + "'");
  }
  if (!record.embedding.empty()) {
    double sum = 0.0;
    for (double x : record.embedding) sum += x * x;
    if (std::abs(std::sqrt(sum) - 1.0) > 1e-6) {
      throw Error(Errc::InvalidValue, "asset '" + record.asset_id + "' embedding is not unit length");
    }
  }
  category_index_[record.category].push_back(records_.size());
  records_.push_back(std::move(record));
}

const AssetRecord* Catalog::find(std::string_view asset_id) const {
  for (const auto& r : records_) {
    if (r.asset_id == asset_id) return &r;
  }
  return nullptr;
}

const AssetRecord* Catalog::find_by_name(std::string_view name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::vector<std::string> Catalog::categories() const {
  std::vector<std::string> out;
  for (const auto& [name, ids] : category_index_) out.push_back(name);
  return out;
}

bool Catalog::has_category(std::string_view category) const {
  return category_index_.find(category) != category_index_.end();
}

void Catalog::embed_all(const Embedder& embedder) const {
  std::lock_guard lock(*embed_mu_);
  bool any_embedded = std::any_of(records_.begin(), records_.end(),
                                  [](const AssetRecord& r) { return !r.embedding.empty(); });
  if (any_embedded && embedder_id_ != embedder.id()) {
    throw Error(Errc::EmbedderMismatch, "catalog embeddings come from '" + embedder_id_ +
                                            "' but the configured embedder is '" + embedder.id() +
                                            "'");
  }
  for (auto& r : records_) {
    if (r.embedding.empty()) r.embedding = embedder.embed(r.description);
  }
  embedder_id_ = embedder.id();
}

std::vector<SearchHit> Catalog::search(const Embedder& embedder,
                                       const std::optional<std::string>& category,
                                       std::string_view description, std::size_t limit) const {
  if (records_.empty()) throw Error(Errc::EmptyCatalog, "catalog is empty");
  std::vector<std::size_t> candidates;
  if (category) {
    auto it = category_index_.find(*category);
    if (it == category_index_.end()) {
      throw Error(Errc::UnknownCategory, "unknown category '" + *category + "'");
    }
    candidates = it->second;
  } else {
    candidates.resize(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) candidates[i] = i;
  }
  embed_all(embedder);
  Embedding query = embedder.embed(description);

  std::vector<SearchHit> hits;
  hits.reserve(candidates.size());
  for (std::size_t i : candidates) {
    hits.push_back({records_[i].asset_id, cosine(query, records_[i].embedding)});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.asset_id < b.asset_id;
  });
  if (limit > 0 && hits.size() > limit) hits.resize(limit);
  return hits;
}

bool Catalog::operator==(const Catalog& o) const {
  if (embedder_id_ != o.embedder_id_ || records_.size() != o.records_.size()) return false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& a = records_[i];
    const auto& b = o.records_[i];
    if (a.asset_id != b.asset_id || a.name != b.name || a.description != b.description ||
        a.category != b.category || a.embedding != b.embedding ||
        a.thumbnail_ref != b.thumbnail_ref || a.default_scale != b.default_scale) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// files

nlohmann::ordered_json record_to_json(const AssetRecord& r) {
  return {{"asset_id", r.asset_id},
          {"name", r.name},
          {"description", r.description},
          {"category", r.category},
          {"default_scale", r.default_scale.to_string()},
          {"thumbnail_ref", r.thumbnail_ref},
          {"embedding", r.embedding}};
}

AssetRecord record_from_json(const nlohmann::ordered_json& j) {
  AssetRecord r;
  try {
    r.name = j.at("name").get<std::string>();
    r.asset_id = j.contains("asset_id") ? j["asset_id"].get<std::string>() : r.name;
    r.description = j.value("description", "");
    r.category = j.value("category", "");
    if (j.contains("default_scale")) {
      r.default_scale = Vector3::parse(j["default_scale"].get<std::string>());
    }
    if (j.contains("thumbnail_ref") && !j["thumbnail_ref"].is_null()) {
      r.thumbnail_ref = j["thumbnail_ref"].get<std::string>();
    }
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      r.embedding = j["embedding"].get<Embedding>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("asset record: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::SchemaError, std::string("asset record: ") + e.what());
  }
  return r;
}

nlohmann::ordered_json catalog_to_json(const Catalog& c) {
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : c.records()) records.push_back(record_to_json(r));
  return {{"embedder_id", c.embedder_id()}, {"records", records}};
}

void save_catalog(const Catalog& c, const std::string& path) {
  write_file_atomic(path, catalog_to_json(c).dump(2) + "\n");
}

namespace {

nlohmann::ordered_json parse_json_file(const std::string& path) {
  try {
    return nlohmann::ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
}

struct RawCatalog {
  std::optional<std::string> embedder_id;
  std::vector<AssetRecord> records;
};

RawCatalog read_raw(const std::string& path) {
  namespace fs = std::filesystem;
  RawCatalog raw;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        raw.records.push_back(record_from_json(parse_json_file(f.string())));
      } catch (const Error& e) {
        throw Error(e.code(), f.string() + ": " + e.what());
      }
    }
    return raw;
  }
  nlohmann::ordered_json doc = parse_json_file(path);
  const nlohmann::ordered_json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("records")) throw Error(Errc::SchemaError, path + ": no \"records\" array");
    if (doc.contains("embedder_id")) raw.embedder_id = doc["embedder_id"].get<std::string>();
    list = &doc["records"];
  }
  if (!list->is_array()) throw Error(Errc::SchemaError, path + ": records must be an array");
  for (const auto& r : *list) raw.records.push_back(record_from_json(r));
  return raw;
}

}  // namespace

Catalog load_catalog(const std::string& path) {
  RawCatalog raw = read_raw(path);
  Catalog c(raw.embedder_id.value_or(std::string(HashNgramEmbedder::kId)));
  for (auto& r : raw.records) c.add(std::move(r));
  return c;
}

std::vector<AssetRecord> read_records(const std::string& path) { return read_raw(path).records; }

std::string first_sentences(std::string_view text, std::size_t n) {
  text = trim(text);
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool at_end = i + 1 == text.size();
    if (at_end || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      if (++count == n) return std::string(trim(text.substr(0, i + 1)));
    }
  }
  return std::string(text);
}

namespace {

std::size_t sentence_count(std::string_view text) {
  std::string_view t = trim(text);
  if (t.empty()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == t.size() || std::isspace(static_cast<unsigned char>(t[i + 1])))) {
      ++count;
    }
  }
  char last = t.back();
  if (last != '.' && last != '!' && last != '?') ++count;
  return count;
}

}  // namespace

std::vector<LintIssue> lint_records(const std::vector<AssetRecord>& records) {
  std::vector<LintIssue> issues;
  std::map<std::string, std::string> ids, names, descriptions;
  for (const auto& r : records) {
    if (trim(r.description).empty()) {
      issues.push_back({r.asset_id, "EmptyDescription", "description is empty"});
    } else if (sentence_count(r.description) > 3) {
      issues.push_back({r.asset_id, "LongDescription", "description has more than three sentences"});
    }
    if (trim(r.category).empty()) {
      issues.push_back({r.asset_id, "EmptyCategory", "category is empty"});
    } else if (is_banned_category(r.category)) {
      issues.push_back({r.asset_id, "BannedCategory", "category '" + r.category + "' is not allowed"});
    }
    if (auto [it, fresh] = ids.emplace(r.asset_id, r.asset_id); !fresh) {
      issues.push_back({r.asset_id, "DuplicateId", "asset_id appears more than once"});
    }
    if (auto [it, fresh] = names.emplace(r.name, r.asset_id); !fresh) {
      issues.push_back({r.asset_id, "DuplicateName", "same name as '" + it->second + "'"});
    }
    std::string key = to_lower(trim(r.description));
    if (!key.empty()) {
      if (auto [it, fresh] = descriptions.emplace(key, r.asset_id); !fresh) {
        issues.push_back(
            {r.asset_id, "DuplicateDescription", "same description as '" + it->second + "'"});
      }
    }
  }
  return issues;
}

}  // namespace echo
