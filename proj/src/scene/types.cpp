#include "echo/scene/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

double quantize(double v) {
  if (!std::isfinite(v)) {
    throw Error(Errc::InvalidValue, "non-finite component");
  }
  double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

Vector3::Vector3(double x_, double y_, double z_)
    : x(quantize(x_)), y(quantize(y_)), z(quantize(z_)) {}

std::string Vector3::to_string() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "(%.2f, %.2f, %.2f)", x, y, z);
  return buf;
}

namespace {

// Splits "(a, b, c)" into its three trimmed items. Throws MalformedVector.
std::array<std::string_view, 3> split_triple(std::string_view text) {
  std::string_view t = trim(text);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')') {
    throw Error(Errc::MalformedVector, "expected (a, b, c), got '" + std::string(text) + "'");
  }
  t = t.substr(1, t.size() - 2);
  std::array<std::string_view, 3> out;
  std::size_t n = 0;
  while (true) {
    auto comma = t.find(',');
    if (n == 3) {
      throw Error(Errc::MalformedVector, "too many components in '" + std::string(text) + "'");
    }
    out[n++] = trim(t.substr(0, comma));
    if (comma == std::string_view::npos) break;
    t.remove_prefix(comma + 1);
  }
  if (n != 3) {
    throw Error(Errc::MalformedVector, "expected 3 components in '" + std::string(text) + "'");
  }
  return out;
}

double parse_component(std::string_view s, std::string_view whole) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(Errc::MalformedVector, "bad number '" + std::string(s) + "' in '" +
                                           std::string(whole) + "'");
  }
  return v;
}

constexpr std::array<std::pair<Material, std::string_view>, kMaterialCount + 1> kMaterialNames{{
    {Material::Unset, "Unset"},
    {Material::Basket, "Basket"},
    {Material::Black_Plastic, "Black_Plastic"},
    {Material::Brick, "Brick"},
    {Material::Bronze_Metal, "Bronze_Metal"},
    {Material::Copper_metal, "Copper_metal"},
    {Material::Dark_Oak, "Dark_Oak"},
    {Material::Flow_Water, "Flow_Water"},
    {Material::Flower_Pattern, "Flower_Pattern"},
    {Material::Glass, "Glass"},
    {Material::Glass_Dark, "Glass_Dark"},
    {Material::Golden_metal_material, "Golden_metal_material"},
    {Material::Grass, "Grass"},
    {Material::Leaf_Pattern, "Leaf_Pattern"},
    {Material::Leather, "Leather"},
    {Material::Marble, "Marble"},
    {Material::Rustic_Wood, "Rustic_Wood"},
    {Material::Shiny_Metal, "Shiny_Metal"},
}};

// Names LLMs emit for materials outside the closed set.
constexpr std::array<std::pair<std::string_view, Material>, 3> kMaterialAliases{{
    {"wood", Material::Rustic_Wood},
    {"metal", Material::Shiny_Metal},
    {"darkglass", Material::Glass_Dark},
}};

}  // namespace

Vector3 Vector3::parse(std::string_view text) {
  auto parts = split_triple(text);
  return Vector3(parse_component(parts[0], text), parse_component(parts[1], text),
                 parse_component(parts[2], text));
}

Vector3 normalize_rotation(const Vector3& d) {
  auto wrap = [](double v) {
    double r = std::fmod(v, 360.0);
    if (r < 0) r += 360.0;
    r = quantize(r);
    return r >= 360.0 ? 0.0 : r;
  };
  return Vector3(wrap(d.x), wrap(d.y), wrap(d.z));
}

std::string ColorRGB::to_hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

std::string ColorRGB::to_vector() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "(%d, %d, %d)", r, g, b);
  return buf;
}

ColorRGB ColorRGB::from_hex(std::string_view text) {
  std::string_view t = trim(text);
  if (t.size() != 7 || t[0] != '#') {
    throw Error(Errc::InvalidValue, "expected #RRGGBB, got '" + std::string(text) + "'");
  }
  std::uint8_t ch[3];
  for (int i = 0; i < 3; ++i) {
    unsigned v = 0;
    auto s = t.substr(1 + 2 * i, 2);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + 2, v, 16);
    if (ec != std::errc() || ptr != s.data() + 2) {
      throw Error(Errc::InvalidValue, "bad hex color '" + std::string(text) + "'");
    }
    ch[i] = static_cast<std::uint8_t>(v);
  }
  return {ch[0], ch[1], ch[2]};
}

ColorRGB ColorRGB::from_vector(std::string_view text) {
  auto parts = split_triple(text);
  std::uint8_t ch[3];
  for (int i = 0; i < 3; ++i) {
    double v = parse_component(parts[i], text);
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
      throw Error(Errc::MalformedVector,
                  "color channel out of range 0-255 in '" + std::string(text) + "'");
    }
    ch[i] = static_cast<std::uint8_t>(v);
  }
  return {ch[0], ch[1], ch[2]};
}

ColorRGB ColorRGB::parse(std::string_view text) {
  std::string_view t = trim(text);
  if (!t.empty() && t.front() == '#') return from_hex(t);
  return from_vector(t);
}

std::string_view to_string(Material m) {
  return kMaterialNames[static_cast<std::size_t>(m)].second;
}

const std::array<Material, kMaterialCount>& assignable_materials() {
  static const auto all = [] {
    std::array<Material, kMaterialCount> a{};
    for (std::size_t i = 0; i < kMaterialCount; ++i) a[i] = kMaterialNames[i + 1].first;
    return a;
  }();
  return all;
}

std::optional<MaterialLookup> lookup_material(std::string_view name, bool allow_unset) {
  std::string key = to_lower(trim(name));
  for (const auto& [m, n] : kMaterialNames) {
    if (m == Material::Unset && !allow_unset) continue;
    if (to_lower(n) == key) return MaterialLookup{m, false};
  }
  for (const auto& [alias, m] : kMaterialAliases) {
    if (alias == key) return MaterialLookup{m, true};
  }
  return std::nullopt;
}

std::string_view to_string(Field f) {
  switch (f) {
    case Field::Position: return "position";
    case Field::Rotation: return "rotation";
    case Field::Scale: return "scale";
    case Field::Color: return "color";
    case Field::Material: return "material";
  }
  return "?";
}

std::optional<Field> field_from_string(std::string_view name) {
  for (Field f : {Field::Position, Field::Rotation, Field::Scale, Field::Color, Field::Material}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::string FieldValue::to_string() const {
  switch (field_) {
    case Field::Position:
    case Field::Rotation:
    case Field::Scale: return vector().to_string();
    case Field::Color: return color().to_hex();
    case Field::Material: return std::string(echo::to_string(material()));
  }
  return {};
}

FieldValue FieldValue::parse(Field field, std::string_view text) {
  switch (field) {
    case Field::Position: return position(Vector3::parse(text));
    case Field::Rotation: return rotation(Vector3::parse(text));
    case Field::Scale: return scale(Vector3::parse(text));
    case Field::Color: return color(ColorRGB::parse(text));
    case Field::Material: {
      auto m = lookup_material(text, true);
      if (!m || m->via_alias) {
        throw Error(Errc::UnknownMaterial, "unknown material '" + std::string(text) + "'");
      }
      return material(m->material);
    }
  }
  throw Error(Errc::InvalidValue, "unknown field");
}

FieldValue SceneObject::get(Field f) const {
  switch (f) {
    case Field::Position: return FieldValue::position(position);
    case Field::Rotation: return FieldValue::rotation(rotation);
    case Field::Scale: return FieldValue::scale(scale);
    case Field::Color: return FieldValue::color(color);
    case Field::Material: return FieldValue::material(material);
  }
  throw Error(Errc::InvalidValue, "unknown field");
}

void SceneObject::set(const FieldValue& v) {
  switch (v.field()) {
    case Field::Position: position = v.vector(); break;
    case Field::Rotation: rotation = v.vector(); break;
    case Field::Scale: scale = v.vector(); break;
    case Field::Color: color = v.color(); break;
    case Field::Material: material = v.material(); break;
  }
}

bool is_valid_object_name(std::string_view name) {
  if (trim(name).size() != name.size() || name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return c == '{' || c == '}' || c == '[' || c == ']' || c == '\n' || c == '\r';
  });
}

}  // namespace echo
