#ifndef MAGMPM_RENDER_HPP
#define MAGMPM_RENDER_HPP

#include "magmpm/io.hpp"
#include "magmpm/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace magmpm {

/// Static vector-graphic output. Magnetization orientation maps to hue,
/// magnitude to saturation; topology to opacity.
struct RenderSpec {
    int canvas = 640;            // long-edge pixels
    bool show_boundaries = true;
    bool show_field_arrow = true;
    bool contact_shading = true;
    double br_reference = 0.0;   // saturation scale; 0 = infer from data
    double particle_radius = 0.0; // meters; 0 = infer
};

/// Renders one snapshot to SVG. 2D scenes produce `<base>.svg`; 3D scenes
/// produce `<base>_zview.svg` (x-y plane) and `<base>_xview.svg` (z-y plane).
/// Returns the written paths.
std::vector<std::string> render_snapshot_svg(const Snapshot& snap, const RenderSpec& spec,
                                             const std::string& out_base,
                                             const SceneSpec* scene = nullptr,
                                             const std::optional<Eigen::Vector3d>& B_applied =
                                                 std::nullopt);

} // namespace magmpm

#endif
