#include "echo/util/json_extract.hpp"

#include <cctype>
#include <optional>
#include <string>

#include "echo/error.hpp"

namespace echo {

namespace {

// End offset (one past the closing brace) of the balanced object starting at
// `start`, or npos when the text ends first.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return c == '}' ? i + 1 : std::string_view::npos;
      if (depth < 0) return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

// Drops "..." / "…" placeholders and trailing or doubled commas outside
// strings. Model output copies these from prompt examples.
std::string repair(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (c == '.' && i + 2 < s.size() && s[i + 1] == '.' && s[i + 2] == '.') {
      while (i + 1 < s.size() && s[i + 1] == '.') ++i;
      continue;
    }
    if (s.compare(i, 3, "\xE2\x80\xA6") == 0) {  // U+2026
      i += 2;
      continue;
    }
    out += c;
  }

  // Second pass: commas followed only by whitespace and a closer or another
  // comma are dropped.
  std::string cleaned;
  cleaned.reserve(out.size());
  in_string = false;
  escaped = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    if (in_string) {
      cleaned += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < out.size() && std::isspace(static_cast<unsigned char>(out[j]))) ++j;
      if (j < out.size() && (out[j] == '}' || out[j] == ']' || out[j] == ',')) continue;
      // A comma right after an opener is also a leftover.
      std::size_t k = cleaned.find_last_not_of(" \t\r\n");
      if (k != std::string::npos && (cleaned[k] == '[' || cleaned[k] == '{')) continue;
    }
    cleaned += c;
  }
  return cleaned;
}

}  // namespace

nlohmann::ordered_json extract_json_object(std::string_view text, std::string_view required_key) {
  std::optional<nlohmann::ordered_json> first;
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    std::size_t end = balanced_end(text, start);
    if (end == std::string_view::npos) continue;
    std::string_view candidate = text.substr(start, end - start);
    auto parsed = nlohmann::ordered_json::parse(candidate, nullptr, false);
    if (parsed.is_discarded()) {
      parsed = nlohmann::ordered_json::parse(repair(candidate), nullptr, false);
    }
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    if (required_key.empty() || parsed.contains(std::string(required_key))) return parsed;
    if (!first) first = std::move(parsed);
    // Objects nested inside this one are never better candidates.
    start = end - 1;
  }
  if (first) return *first;
  throw Error(Errc::NoJsonFound, "no JSON object found in provider output");
}

}  // namespace echo
