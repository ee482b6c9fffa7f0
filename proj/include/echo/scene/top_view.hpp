#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echo/scene/scene_graph.hpp"

namespace echo {

inline constexpr int kMinTopViewResolution = 64;
inline constexpr int kMaxTopViewResolution = 2048;

struct TopViewImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  ColorRGB pixel(int x, int y) const;
  // Binary portable pixmap (P6).
  std::string ppm() const;
  std::string base64() const;
};

// Orthographic projection of the ground plane (X right, +Z toward the top
// row). Each object is its scale.x by scale.z footprint rotated by its yaw
// (rotation.y), filled with its color over a white background; later objects
// paint over earlier ones. The room bounds span the whole canvas.
// Throws InvalidResolution outside [64, 2048].
TopViewImage render_top_view(const SceneGraph& scene, int resolution);

// Parses a P6 pixmap as produced by TopViewImage::ppm(). Throws InvalidValue.
TopViewImage parse_ppm(const std::string& bytes);

}  // namespace echo
