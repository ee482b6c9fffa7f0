#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace echo {

// Geometric values live on a 0.01 grid so that the fixed two-decimal text
// form used in prompts and on disk is lossless.
double quantize(double v);

struct Vector3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vector3() = default;
  // Components are quantized; non-finite input throws InvalidValue.
  Vector3(double x, double y, double z);

  bool operator==(const Vector3&) const = default;

  // "(x, y, z)" with two decimals.
  std::string to_string() const;
  // Parses "(x, y, z)"; whitespace tolerated. Throws MalformedVector.
  static Vector3 parse(std::string_view text);
};

// Each component mapped into [0, 360).
Vector3 normalize_rotation(const Vector3& degrees);

struct ColorRGB {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;

  bool operator==(const ColorRGB&) const = default;

  std::string to_hex() const;     // "#RRGGBB"
  std::string to_vector() const;  // "(r, g, b)"
  static ColorRGB from_hex(std::string_view text);
  static ColorRGB from_vector(std::string_view text);
  // Accepts either of the two forms above.
  static ColorRGB parse(std::string_view text);
};

enum class Material : std::uint8_t {
  Unset,
  Basket,
  Black_Plastic,
  Brick,
  Bronze_Metal,
  Copper_metal,
  Dark_Oak,
  Flow_Water,
  Flower_Pattern,
  Glass,
  Glass_Dark,
  Golden_metal_material,
  Grass,
  Leaf_Pattern,
  Leather,
  Marble,
  Rustic_Wood,
  Shiny_Metal,
};

inline constexpr std::size_t kMaterialCount = 17;

std::string_view to_string(Material m);
// The 17 assignable materials in declaration order (Unset excluded).
const std::array<Material, kMaterialCount>& assignable_materials();

struct MaterialLookup {
  Material material;
  bool via_alias = false;
};

// Case-insensitive match against the closed set, then the alias map.
// "Unset" is only accepted when allow_unset is true (scene documents).
std::optional<MaterialLookup> lookup_material(std::string_view name, bool allow_unset = false);

enum class Field : std::uint8_t { Position, Rotation, Scale, Color, Material };

std::string_view to_string(Field f);
std::optional<Field> field_from_string(std::string_view name);

// One field of a SceneObject with its value.
class FieldValue {
 public:
  using Value = std::variant<Vector3, ColorRGB, Material>;

  static FieldValue position(Vector3 v) { return {Field::Position, v}; }
  static FieldValue rotation(Vector3 v) { return {Field::Rotation, v}; }
  static FieldValue scale(Vector3 v) { return {Field::Scale, v}; }
  static FieldValue color(ColorRGB c) { return {Field::Color, c}; }
  static FieldValue material(Material m) { return {Field::Material, m}; }

  Field field() const { return field_; }
  const Value& value() const { return value_; }
  const Vector3& vector() const { return std::get<Vector3>(value_); }
  const ColorRGB& color() const { return std::get<ColorRGB>(value_); }
  Material material() const { return std::get<Material>(value_); }

  // Text form as it appears in the canonical scene JSON.
  std::string to_string() const;
  static FieldValue parse(Field field, std::string_view text);

  bool operator==(const FieldValue&) const = default;

 private:
  FieldValue(Field f, Value v) : field_(f), value_(std::move(v)) {}

  Field field_;
  Value value_;
};

using ObjectId = std::uint64_t;

struct SceneObject {
  ObjectId id = 0;  // 0 means "assign on insert"
  std::string name;
  Vector3 position;
  Vector3 rotation;
  Vector3 scale{1.0, 1.0, 1.0};
  ColorRGB color;
  Material material = Material::Unset;
  std::optional<std::string> asset_ref;

  bool operator==(const SceneObject&) const = default;

  FieldValue get(Field f) const;
  void set(const FieldValue& v);
};

// Names are grammar tokens: non-empty, no braces, brackets or line breaks.
bool is_valid_object_name(std::string_view name);

// Ground-plane room extents (X and Z, meters).
struct RoomBounds {
  double min_x = -4.0;
  double min_z = -4.0;
  double max_x = 4.0;
  double max_z = 4.0;

  bool operator==(const RoomBounds&) const = default;
  bool valid() const { return max_x > min_x && max_z > min_z; }
};

}  // namespace echo
