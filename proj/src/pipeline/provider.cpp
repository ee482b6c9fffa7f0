#include "echo/pipeline/provider.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

// ---------------------------------------------------------------------------
// transcript

nlohmann::ordered_json entry_to_json(const TranscriptEntry& e) {
  using J = nlohmann::ordered_json;
  return {{"seq", e.seq},
          {"ts", e.ts},
          {"stage", std::string(to_string(e.stage))},
          {"system", e.system},
          {"user", e.user},
          {"image_sha256", e.image_sha256 ? J(*e.image_sha256) : J(nullptr)},
          {"response", e.response},
          {"error", e.error ? J(*e.error) : J(nullptr)}};
}

TranscriptEntry entry_from_json(const nlohmann::ordered_json& j) {
  TranscriptEntry e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.ts = j.value("ts", "");
    auto stage = stage_from_string(j.at("stage").get<std::string>());
    if (!stage) throw Error(Errc::SchemaError, "unknown stage in transcript");
    e.stage = *stage;
    e.system = j.value("system", "");
    e.user = j.value("user", "");
    if (j.contains("image_sha256") && !j["image_sha256"].is_null()) {
      e.image_sha256 = j["image_sha256"].get<std::string>();
    }
    e.response = j.value("response", "");
    if (j.contains("error") && !j["error"].is_null()) e.error = j["error"].get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::SchemaError, std::string("transcript entry: ") + ex.what());
  }
  return e;
}

Transcript::Transcript(std::string sink_path) : sink_path_(std::move(sink_path)) {}

void Transcript::append(TranscriptEntry entry) {
  std::lock_guard lock(mu_);
  entry.seq = entries_.size() + 1;
  if (!sink_path_.empty()) {
    std::ofstream out(sink_path_, std::ios::app | std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot append to " + sink_path_);
    out << entry_to_json(entry).dump() << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string Transcript::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : entries_) out += entry_to_json(e).dump() + "\n";
  return out;
}

std::vector<TranscriptEntry> Transcript::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<TranscriptEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(entry_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaError, path + ": bad transcript line: " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// provider base

std::string Provider::complete(const PromptBundle& bundle) {
  TranscriptEntry e;
  e.stage = bundle.stage;
  e.system = bundle.system_text;
  e.user = bundle.user_text;
  if (bundle.image) e.image_sha256 = sha256_hex(bundle.image->base64);
  try {
    e.response = do_complete(bundle);
  } catch (const Error& err) {
    e.ts = utc_timestamp();
    e.error = std::string(to_string(err.code())) + ": " + err.what();
    if (transcript_) transcript_->append(std::move(e));
    throw;
  } catch (const std::exception& err) {
    e.ts = utc_timestamp();
    e.error = std::string("ProviderError: ") + err.what();
    if (transcript_) transcript_->append(std::move(e));
    throw Error(Errc::ProviderError, err.what());
  }
  e.ts = utc_timestamp();
  std::string response = e.response;
  if (transcript_) transcript_->append(std::move(e));
  return response;
}

// ---------------------------------------------------------------------------
// mock

namespace {

const char* primary_slot(Stage stage) {
  switch (stage) {
    case Stage::SuggestionGen: return "instruction";
    case Stage::ActionGen: return "suggestion";
    case Stage::CategorySelect:
    case Stage::Labeling: return "object_name";
    case Stage::SceneUnderstanding: return "object_list";
  }
  return "";
}

std::string letters_only(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

// Longest listed category contained in the object name (or containing it),
// ignoring case and separators; the first category when none relates.
std::string best_category(const Slots& slots) {
  auto cats_it = slots.find("categories");
  if (cats_it == slots.end()) return {};
  std::vector<std::string> cats;
  std::istringstream in(cats_it->second);
  std::string item;
  while (std::getline(in, item, ',')) cats.emplace_back(trim(item));
  if (cats.empty()) return {};
  auto name_it = slots.find("object_name");
  std::string name = name_it == slots.end() ? std::string() : letters_only(name_it->second);
  std::string best;
  for (const auto& c : cats) {
    std::string key = letters_only(c);
    if (key.empty()) continue;
    bool related = name.find(key) != std::string::npos ||
                   (!name.empty() && key.find(name) != std::string::npos);
    if (related && key.size() > letters_only(best).size()) best = c;
  }
  return best.empty() ? cats.front() : best;
}

std::string json_escaped(std::string_view s) {
  std::string quoted = nlohmann::ordered_json(std::string(s)).dump();
  return quoted.substr(1, quoted.size() - 2);
}

std::string fill_template(std::string text, const Slots& slots, bool escape) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("{{", pos);
    if (open == std::string::npos) break;
    std::size_t close = text.find("}}", open + 2);
    if (close == std::string::npos) break;
    std::string name(trim(std::string_view(text).substr(open + 2, close - open - 2)));
    std::string value;
    if (name == "best_category") {
      value = best_category(slots);
    } else if (auto it = slots.find(name); it != slots.end()) {
      value = it->second;
    } else {
      out += text.substr(pos, close + 2 - pos);
      pos = close + 2;
      continue;
    }
    out += text.substr(pos, open - pos);
    out += escape ? json_escaped(value) : value;
    pos = close + 2;
  }
  out += text.substr(pos);
  return out;
}

}  // namespace

MockRuleTable parse_rule_table(const nlohmann::ordered_json& j) {
  MockRuleTable table;
  try {
    for (const auto& r : j.at("rules")) {
      MockRule rule;
      auto stage = stage_from_string(r.at("stage").get<std::string>());
      if (!stage) throw Error(Errc::SchemaError, "unknown stage '" + r["stage"].dump() + "'");
      rule.stage = *stage;
      if (r.contains("keywords")) {
        for (const auto& k : r["keywords"]) rule.keywords.push_back(k.get<std::string>());
      }
      const auto& resp = r.at("response");
      rule.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
      rule.delay_ms = r.value("delay_ms", 0);
      table.rules.push_back(std::move(rule));
    }
    if (j.contains("fallback")) {
      const auto& fb = j["fallback"];
      table.fallback = fb.is_string() ? fb.get<std::string>() : fb.dump();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("rule table: ") + e.what());
  }
  return table;
}

MockRuleTable load_rule_table(const std::string& path) {
  try {
    return parse_rule_table(nlohmann::ordered_json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
}

std::string MockProvider::do_complete(const PromptBundle& bundle) {
  auto slot = bundle.slots.find(primary_slot(bundle.stage));
  std::string_view subject = slot == bundle.slots.end() ? std::string_view() : slot->second;
  for (const MockRule& rule : table_.rules) {
    if (rule.stage != bundle.stage) continue;
    bool all = std::all_of(rule.keywords.begin(), rule.keywords.end(),
                           [&](const std::string& k) { return icontains(subject, k); });
    if (!all) continue;
    if (rule.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
    bool looks_json = !rule.response.empty() && rule.response.front() == '{';
    return fill_template(rule.response, bundle.slots, looks_json);
  }
  return table_.fallback;
}

// ---------------------------------------------------------------------------
// replay

ReplayProvider::ReplayProvider(std::vector<TranscriptEntry> entries)
    : entries_(std::move(entries)) {}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::string& path) {
  return std::make_unique<ReplayProvider>(Transcript::load(path));
}

std::size_t ReplayProvider::remaining() const {
  std::lock_guard lock(mu_);
  return entries_.size() - cursor_;
}

std::string ReplayProvider::do_complete(const PromptBundle& bundle) {
  TranscriptEntry e;
  {
    std::lock_guard lock(mu_);
    if (cursor_ >= entries_.size()) {
      throw Error(Errc::TranscriptExhausted, "transcript exhausted after " +
                                                 std::to_string(entries_.size()) + " entries");
    }
    const TranscriptEntry& next = entries_[cursor_];
    if (next.stage != bundle.stage) {
      throw Error(Errc::StageMismatch, "request for " + std::string(to_string(bundle.stage)) +
                                           " but entry " + std::to_string(next.seq) + " is " +
                                           std::string(to_string(next.stage)));
    }
    e = next;
    ++cursor_;
  }
  if (e.error) {
    std::string_view text = *e.error;
    auto colon = text.find(": ");
    Errc code = Errc::ProviderError;
    std::string message(text);
    if (colon != std::string_view::npos) {
      if (auto c = errc_from_string(text.substr(0, colon))) {
        code = *c;
        message = std::string(text.substr(colon + 2));
      }
    }
    throw Error(code, message);
  }
  return e.response;
}

}  // namespace echo
