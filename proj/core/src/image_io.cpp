#include "angiorecon/image_io.hpp"

#include "angiorecon/geometry_json.hpp"
#include "binary_io.hpp"

#include <cmath>
#include <fstream>

namespace angiorecon {

SilhouetteImage read_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_all(path);
  const auto tokens = detail::header_tokens(bytes, path);
  if (tokens.size() != 3 || tokens[0] != "AIM1") {
    throw FormatError(path.string() + ": not an AIM1 image file");
  }
  const long w = detail::parse_dim(tokens[1], path);
  const long h = detail::parse_dim(tokens[2], path);
  if (w > 65535 || h > 65535) throw FormatError(path.string() + ": image too large");
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  return SilhouetteImage(static_cast<int>(w), static_cast<int>(h),
                         detail::decode_payload(bytes, n, path));
}

void write_image(const SilhouetteImage& image, const std::filesystem::path& path) {
  detail::write_payload(path,
                        detail::make_header("AIM1 " + std::to_string(image.width()) + " " +
                                            std::to_string(image.height())),
                        image.values());
}

void write_pgm(const SilhouetteImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (double p : image.values()) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * p))));
  }
}

void write_image_sidecar(const std::filesystem::path& image_path, const ImagingGeometry& g,
                         const ViewAngles& view) {
  write_json_file(sidecar_path(image_path), to_json(g, view));
}

ImageSidecar read_image_sidecar(const std::filesystem::path& image_path) {
  const auto side = sidecar_path(image_path);
  if (!std::filesystem::exists(side)) {
    throw ValidationError("missing geometry sidecar " + side.string());
  }
  const auto j = read_json_file(side);
  return {geometry_from_json(j), view_from_json(j)};
}

}  // namespace angiorecon
