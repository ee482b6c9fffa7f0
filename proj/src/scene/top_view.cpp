#include "echo/scene/top_view.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

ColorRGB TopViewImage::pixel(int x, int y) const {
  std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

std::string TopViewImage::ppm() const {
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

std::string TopViewImage::base64() const { return base64_encode(ppm()); }

TopViewImage render_top_view(const SceneGraph& scene, int resolution) {
  if (resolution < kMinTopViewResolution || resolution > kMaxTopViewResolution) {
    throw Error(Errc::InvalidResolution,
                "resolution must be in [64, 2048], got " + std::to_string(resolution));
  }
  TopViewImage img;
  img.width = img.height = resolution;
  img.rgb.assign(static_cast<std::size_t>(resolution) * resolution * 3, 255);

  const RoomBounds& b = scene.bounds();
  const double px_w = (b.max_x - b.min_x) / resolution;
  const double px_h = (b.max_z - b.min_z) / resolution;

  for (const SceneObject& obj : scene.objects()) {
    const double yaw = obj.rotation.y * std::numbers::pi / 180.0;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double half_w = obj.scale.x / 2.0;
    const double half_d = obj.scale.z / 2.0;
    // Local right axis maps to (c, -s) and local forward to (s, c) in XZ,
    // matching a left-handed, Y-up engine.
    const double reach = std::abs(half_w * c) + std::abs(half_d * s);
    const double reach_z = std::abs(half_w * s) + std::abs(half_d * c);

    int col0 = static_cast<int>(std::floor((obj.position.x - reach - b.min_x) / px_w));
    int col1 = static_cast<int>(std::ceil((obj.position.x + reach - b.min_x) / px_w));
    int row0 = static_cast<int>(std::floor((b.max_z - (obj.position.z + reach_z)) / px_h));
    int row1 = static_cast<int>(std::ceil((b.max_z - (obj.position.z - reach_z)) / px_h));
    col0 = std::max(col0, 0);
    row0 = std::max(row0, 0);
    col1 = std::min(col1, resolution - 1);
    row1 = std::min(row1, resolution - 1);

    for (int row = row0; row <= row1; ++row) {
      const double wz = b.max_z - (row + 0.5) * px_h;
      for (int col = col0; col <= col1; ++col) {
        const double wx = b.min_x + (col + 0.5) * px_w;
        const double dx = wx - obj.position.x;
        const double dz = wz - obj.position.z;
        const double u = dx * c - dz * s;  // along local right
        const double v = dx * s + dz * c;  // along local forward
        if (std::abs(u) < half_w && std::abs(v) < half_d) {
          std::size_t i = (static_cast<std::size_t>(row) * resolution + col) * 3;
          img.rgb[i] = obj.color.r;
          img.rgb[i + 1] = obj.color.g;
          img.rgb[i + 2] = obj.color.b;
        }
      }
    }
  }
  return img;
}

TopViewImage parse_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw Error(Errc::InvalidValue, "not a P6 pixmap");
  }
  in.get();  // single whitespace after the header
  TopViewImage img;
  img.width = w;
  img.height = h;
  std::size_t n = static_cast<std::size_t>(w) * h * 3;
  auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + n) throw Error(Errc::InvalidValue, "truncated pixmap");
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + n));
  return img;
}

}  // namespace echo
