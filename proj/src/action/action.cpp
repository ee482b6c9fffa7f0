#include "echo/action/action.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::Add: return "Add";
    case Verb::Move: return "Move";
    case Verb::Rotate: return "Rotate";
    case Verb::Scale: return "Scale";
    case Verb::Color: return "Color";
    case Verb::Style: return "Style";
    case Verb::Destroy: return "Destroy";
  }
  return "?";
}

std::optional<Verb> verb_from_string(std::string_view name) {
  std::string n = to_lower(trim(name));
  if (n == "add") return Verb::Add;
  if (n == "move") return Verb::Move;
  if (n == "rotate") return Verb::Rotate;
  if (n == "scale") return Verb::Scale;
  if (n == "color" || n == "colour") return Verb::Color;
  if (n == "style" || n == "change") return Verb::Style;
  if (n == "destroy" || n == "delete") return Verb::Destroy;
  return std::nullopt;
}

bool key_matches_verb(Verb verb, const ActionKey& key) {
  switch (verb) {
    case Verb::Add:
    case Verb::Move:
    case Verb::Rotate: return std::holds_alternative<Vector3>(key);
    case Verb::Scale: return std::holds_alternative<ScaleFactor>(key);
    case Verb::Color: return std::holds_alternative<ColorRGB>(key);
    case Verb::Style: return std::holds_alternative<Material>(key);
    case Verb::Destroy: return std::holds_alternative<std::monostate>(key);
  }
  return false;
}

std::string key_to_string(const ActionKey& key) {
  if (auto* v = std::get_if<Vector3>(&key)) return v->to_string();
  if (auto* s = std::get_if<ScaleFactor>(&key)) return format_number(s->value);
  if (auto* c = std::get_if<ColorRGB>(&key)) return c->to_vector();
  if (auto* m = std::get_if<Material>(&key)) return std::string(to_string(*m));
  return {};
}

namespace {

double parse_scale_factor(std::string_view text) {
  std::string_view t = trim(text);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw Error(Errc::MalformedVector, "bad scale factor '" + std::string(text) + "'");
  }
  if (v <= 0.0) {
    throw Error(Errc::NonPositiveScale, "scale factor must be > 0, got " + std::string(text));
  }
  return v;
}

Material parse_material_token(std::string_view text, Diagnostics* diags) {
  auto m = lookup_material(text, false);
  if (!m) throw Error(Errc::UnknownMaterial, "unknown material '" + std::string(trim(text)) + "'");
  if (m->via_alias && diags) {
    diags->push_back(Diagnostic::warning(
        "MaterialAlias", "material '" + std::string(trim(text)) + "' mapped to " +
                             std::string(to_string(m->material))));
  }
  return m->material;
}

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view word() {
    std::size_t start = pos_;
    while (!done() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) {
      throw Error(Errc::SyntaxError,
                  std::string("expected '") + c + "' at offset " + std::to_string(pos_), pos_);
    }
    ++pos_;
  }

  // Consumes the keyword if present (case-insensitive, whole word).
  bool accept_keyword(std::string_view kw) {
    skip_ws();
    std::size_t save = pos_;
    if (iequals(word(), kw)) return true;
    pos_ = save;
    return false;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) {
      throw Error(Errc::SyntaxError,
                  "expected '" + std::string(kw) + "' at offset " + std::to_string(pos_), pos_);
    }
  }

  // Text up to (not including) the terminator; errors on the stop chars.
  std::string_view until(char terminator, std::string_view forbidden) {
    std::size_t start = pos_;
    while (!done() && text_[pos_] != terminator) {
      if (forbidden.find(text_[pos_]) != std::string_view::npos) {
        throw Error(Errc::SyntaxError,
                    std::string("unexpected '") + text_[pos_] + "' at offset " +
                        std::to_string(pos_),
                    pos_);
      }
      ++pos_;
    }
    if (done()) {
      throw Error(Errc::SyntaxError,
                  std::string("missing '") + terminator + "' after offset " +
                      std::to_string(start),
                  pos_);
    }
    return text_.substr(start, pos_ - start);
  }

  std::string_view bracketed(std::string_view forbidden = "{}[\n") {
    expect('[');
    auto inner = until(']', forbidden);
    ++pos_;
    return inner;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ActionKey parse_key(Verb verb, std::string_view text) {
  switch (verb) {
    case Verb::Add:
    case Verb::Move:
    case Verb::Rotate: return Vector3::parse(text);
    case Verb::Scale: return ScaleFactor{parse_scale_factor(text)};
    case Verb::Color: {
      // Keys sometimes carry the color word too: "red(255, 0, 0)".
      std::string_view t = trim(text);
      auto paren = t.find('(');
      if (paren != std::string_view::npos) t.remove_prefix(paren);
      return ColorRGB::parse(t);
    }
    case Verb::Style: return parse_material_token(text, nullptr);
    case Verb::Destroy: return std::monostate{};
  }
  return std::monostate{};
}

Action parse_command(std::string_view text, Diagnostics* diags) {
  Cursor cur(text);
  cur.skip_ws();
  std::size_t verb_at = cur.pos();
  std::string_view verb_word = cur.word();
  if (verb_word.empty()) {
    throw Error(Errc::SyntaxError, "expected a verb at offset " + std::to_string(verb_at),
                verb_at);
  }
  auto verb = verb_from_string(verb_word);
  if (!verb) throw Error(Errc::UnknownVerb, "unknown verb '" + std::string(verb_word) + "'", verb_at);

  cur.expect('{');
  std::size_t name_at = cur.pos();
  std::string name(trim(cur.until('}', "{[]\n\r")));
  cur.expect('}');
  if (name.empty()) throw Error(Errc::SyntaxError, "empty object name", name_at);

  Action a;
  a.verb = *verb;
  a.target = std::move(name);
  a.command_text = std::string(text);

  switch (a.verb) {
    case Verb::Add:
    case Verb::Move: {
      cur.expect_keyword("to");
      a.key = Vector3::parse(cur.bracketed());
      break;
    }
    case Verb::Rotate: {
      cur.accept_keyword("to");
      a.key = Vector3::parse(cur.bracketed());
      break;
    }
    case Verb::Scale: {
      cur.accept_keyword("to");
      a.key = ScaleFactor{parse_scale_factor(cur.bracketed())};
      cur.accept_keyword("times");
      break;
    }
    case Verb::Color: {
      cur.expect_keyword("to");
      cur.skip_ws();
      cur.until('[', "{}]()\n");  // the color word is informational only
      a.key = ColorRGB::from_vector(cur.bracketed());
      break;
    }
    case Verb::Style: {
      cur.expect_keyword("to");
      a.key = parse_material_token(cur.bracketed("{}[()\n"), diags);
      break;
    }
    case Verb::Destroy: a.key = std::monostate{}; break;
  }

  cur.skip_ws();
  if (!cur.done()) {
    throw Error(Errc::SyntaxError, "unexpected trailing text at offset " + std::to_string(cur.pos()),
                cur.pos());
  }
  return a;
}

std::string format_command(const Action& a) {
  const std::string obj = "{" + a.target + "}";
  switch (a.verb) {
    case Verb::Add: return "Add " + obj + " to [" + key_to_string(a.key) + "]";
    case Verb::Move: return "Move " + obj + " to [" + key_to_string(a.key) + "]";
    case Verb::Rotate: return "Rotate " + obj + " [" + key_to_string(a.key) + "]";
    case Verb::Scale: return "Scale " + obj + " [" + key_to_string(a.key) + "] times";
    case Verb::Color: return "Color " + obj + " to rgb[" + key_to_string(a.key) + "]";
    case Verb::Style: return "Change " + obj + " to [" + key_to_string(a.key) + "]";
    case Verb::Destroy: return "Destroy " + obj;
  }
  return {};
}

nlohmann::ordered_json action_to_json(const Action& a) {
  nlohmann::ordered_json j = {
      {"verb", std::string(to_string(a.verb))},
      {"target", a.target},
      {"key", key_to_string(a.key)},
      {"command", a.command_text.empty() ? format_command(a) : a.command_text},
  };
  if (!a.add_description.empty()) j["description"] = a.add_description;
  if (a.asset) {
    j["asset"] = {{"asset_id", a.asset->asset_id},
                  {"category", a.asset->category},
                  {"default_scale", a.asset->default_scale.to_string()}};
  }
  return j;
}

Action action_from_json(const nlohmann::ordered_json& j) {
  try {
    auto verb = verb_from_string(j.at("verb").get<std::string>());
    if (!verb) throw Error(Errc::SchemaError, "unknown verb in stored action");
    Action a;
    a.verb = *verb;
    a.target = j.at("target").get<std::string>();
    a.key = parse_key(a.verb, j.at("key").get<std::string>());
    a.command_text = j.value("command", "");
    a.add_description = j.value("description", "");
    if (j.contains("asset")) {
      const auto& as = j["asset"];
      a.asset = AssetBinding{as.at("asset_id").get<std::string>(),
                             as.value("category", ""),
                             Vector3::parse(as.at("default_scale").get<std::string>())};
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("stored action: ") + e.what());
  }
}

}  // namespace echo
