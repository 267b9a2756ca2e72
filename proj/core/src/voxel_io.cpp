#include "angiorecon/voxel_io.hpp"

#include "angiorecon/geometry_json.hpp"
#include "binary_io.hpp"

namespace angiorecon {

VoxelGrid read_grid(const std::filesystem::path& path) {
  const auto bytes = detail::read_all(path);
  const auto tokens = detail::header_tokens(bytes, path);
  if (tokens.size() != 2 || tokens[0] != "AVG1") {
    throw FormatError(path.string() + ": not an AVG1 grid file");
  }
  const long w = detail::parse_dim(tokens[1], path);
  if (w > 1024) throw FormatError(path.string() + ": resolution " + tokens[1] + " too large");
  const auto n = static_cast<std::size_t>(w) * w * w;
  return VoxelGrid(static_cast<int>(w), detail::decode_payload(bytes, n, path));
}

void write_grid(const VoxelGrid& grid, const std::filesystem::path& path) {
  detail::write_payload(path,
                        detail::make_header("AVG1 " + std::to_string(grid.resolution())),
                        grid.values());
}

void write_grid_with_sidecar(const VoxelGrid& grid, const ImagingGeometry& g,
                             const std::filesystem::path& path) {
  write_grid(grid, path);
  write_json_file(sidecar_path(path), to_json(g));
}

ImagingGeometry read_grid_sidecar(const std::filesystem::path& grid_path) {
  const auto side = sidecar_path(grid_path);
  if (!std::filesystem::exists(side)) {
    throw ValidationError("missing geometry sidecar " + side.string());
  }
  return geometry_from_json(read_json_file(side));
}

}  // namespace angiorecon
