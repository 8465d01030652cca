#include "magmpm/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace magmpm {

namespace {

struct Rgb {
    int r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
    const double c = v * s;
    const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
    const double m = v - c;
    double r = 0, g = 0, b = 0;
    if (h < 60) { r = c; g = x; }
    else if (h < 120) { r = x; g = c; }
    else if (h < 180) { g = c; b = x; }
    else if (h < 240) { g = x; b = c; }
    else if (h < 300) { r = x; b = c; }
    else { r = c; b = x; }
    return {static_cast<int>(255 * (r + m)), static_cast<int>(255 * (g + m)),
            static_cast<int>(255 * (b + m))};
}

struct View {
    int ax, ay;         // world axes mapped to screen right / up
    std::string suffix; // file suffix
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

std::vector<std::string> render_snapshot_svg(const Snapshot& snap, const RenderSpec& spec,
                                             const std::string& out_base,
                                             const SceneSpec* scene,
                                             const std::optional<Eigen::Vector3d>& B_applied) {
    std::vector<View> views;
    if (snap.dim == 2) views.push_back({0, 1, ""});
    else {
        views.push_back({0, 1, "_zview"});
        views.push_back({2, 1, "_xview"});
    }

    double br_ref = spec.br_reference;
    if (br_ref <= 0.0 && scene) br_ref = scene->material.Br_max;
    if (br_ref <= 0.0) {
        for (const auto& r : snap.rows) br_ref = std::max(br_ref, r.br.norm());
        if (br_ref <= 0.0) br_ref = 1.0;
    }

    std::vector<std::string> written;
    for (const auto& view : views) {
        // world window: scene domain when known, else data bounding box
        double lo_x = 0, lo_y = 0, hi_x = 1, hi_y = 1;
        if (scene) {
            lo_x = 0; hi_x = scene->domain[view.ax];
            lo_y = 0; hi_y = scene->domain[view.ay];
        } else if (!snap.rows.empty()) {
            lo_x = hi_x = snap.rows[0].x[view.ax];
            lo_y = hi_y = snap.rows[0].x[view.ay];
            for (const auto& r : snap.rows) {
                lo_x = std::min(lo_x, r.x[view.ax]); hi_x = std::max(hi_x, r.x[view.ax]);
                lo_y = std::min(lo_y, r.x[view.ay]); hi_y = std::max(hi_y, r.x[view.ay]);
            }
            const double mx = 0.1 * (hi_x - lo_x) + 1e-9, my = 0.1 * (hi_y - lo_y) + 1e-9;
            lo_x -= mx; hi_x += mx; lo_y -= my; hi_y += my;
        }
        const double wx = hi_x - lo_x, wy = hi_y - lo_y;
        const double px_per_m = spec.canvas / std::max(wx, wy);
        const int W = static_cast<int>(std::lround(wx * px_per_m));
        const int H = static_cast<int>(std::lround(wy * px_per_m));
        auto X = [&](double x) { return (x - lo_x) * px_per_m; };
        auto Y = [&](double y) { return (hi_y - y) * px_per_m; }; // flip: SVG y is down

        double radius_m = spec.particle_radius;
        if (radius_m <= 0.0) {
            if (scene) radius_m = 0.35 * scene->particle_spacing();
            else radius_m = 0.01 * std::max(wx, wy);
        }
        const double r_px = std::max(0.5, radius_m * px_per_m);

        std::string svg;
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                      "viewBox=\"0 0 %d %d\">\n<rect width=\"%d\" height=\"%d\" fill=\"#fbfbf8\"/>\n",
                      W, H, W, H, W, H);
        svg += buf;

        if (spec.show_boundaries && scene) {
            for (const auto& b : scene->boundaries) {
                const char* fill =
                    (b.kind == BoundarySpec::Kind::Attached) ? "#b8b2a7" : "#d8d3c8";
                const auto& s = b.shape;
                if (s.kind == ShapeSpec::Kind::Box) {
                    std::snprintf(buf, sizeof buf,
                                  "<rect x=\"%s\" y=\"%s\" width=\"%s\" height=\"%s\" "
                                  "fill=\"%s\" stroke=\"#8a8478\" stroke-width=\"1\"/>\n",
                                  fmt(X(s.a[view.ax])).c_str(), fmt(Y(s.b[view.ay])).c_str(),
                                  fmt((s.b[view.ax] - s.a[view.ax]) * px_per_m).c_str(),
                                  fmt((s.b[view.ay] - s.a[view.ay]) * px_per_m).c_str(), fill);
                    svg += buf;
                } else if (s.kind == ShapeSpec::Kind::Sphere) {
                    std::snprintf(buf, sizeof buf,
                                  "<circle cx=\"%s\" cy=\"%s\" r=\"%s\" fill=\"%s\" "
                                  "stroke=\"#8a8478\" stroke-width=\"1\"/>\n",
                                  fmt(X(s.a[view.ax])).c_str(), fmt(Y(s.a[view.ay])).c_str(),
                                  fmt(s.r * px_per_m).c_str(), fill);
                    svg += buf;
                } else if (s.kind == ShapeSpec::Kind::HalfSpace) {
                    // shade the solid side of the plane within the window
                    const Eigen::Vector3d n = s.a, q = s.b;
                    // polygon: window corners with sdf <= 0 plus the clipped line
                    std::vector<std::pair<double, double>> poly;
                    const double cx[4] = {lo_x, hi_x, hi_x, lo_x};
                    const double cy[4] = {lo_y, lo_y, hi_y, hi_y};
                    auto sdf = [&](double x, double y) {
                        return n[view.ax] * (x - q[view.ax]) + n[view.ay] * (y - q[view.ay]);
                    };
                    for (int i = 0; i < 4; ++i) {
                        const int j = (i + 1) % 4;
                        if (sdf(cx[i], cy[i]) <= 0) poly.push_back({cx[i], cy[i]});
                        const double si = sdf(cx[i], cy[i]), sj = sdf(cx[j], cy[j]);
                        if ((si < 0) != (sj < 0)) {
                            const double f = si / (si - sj);
                            poly.push_back({cx[i] + f * (cx[j] - cx[i]),
                                            cy[i] + f * (cy[j] - cy[i])});
                        }
                    }
                    if (poly.size() >= 3) {
                        svg += "<polygon points=\"";
                        for (auto& pt : poly)
                            svg += fmt(X(pt.first)) + "," + fmt(Y(pt.second)) + " ";
                        svg += std::string("\" fill=\"") + fill +
                               "\" stroke=\"#8a8478\" stroke-width=\"1\"/>\n";
                    }
                } else if (s.kind == ShapeSpec::Kind::Cylinder) {
                    std::snprintf(buf, sizeof buf,
                                  "<rect x=\"%s\" y=\"%s\" width=\"%s\" height=\"%s\" "
                                  "fill=\"%s\" stroke=\"#8a8478\" stroke-width=\"1\"/>\n",
                                  fmt(X(s.a[view.ax] - (view.ax == s.axis ? s.h : s.r))).c_str(),
                                  fmt(Y(s.a[view.ay] + (view.ay == s.axis ? s.h : s.r))).c_str(),
                                  fmt(2 * (view.ax == s.axis ? s.h : s.r) * px_per_m).c_str(),
                                  fmt(2 * (view.ay == s.axis ? s.h : s.r) * px_per_m).c_str(),
                                  fill);
                    svg += buf;
                }
            }
        }

        for (const auto& row : snap.rows) {
            const double bx = row.br[view.ax], by = row.br[view.ay];
            const double mag = row.br.norm();
            const double hue = std::atan2(by, bx) * 180.0 / M_PI;
            const double sat = std::clamp(mag / br_ref, 0.0, 1.0);
            const Rgb c = hsv_to_rgb(hue, sat, 0.92);
            const double opacity = 0.15 + 0.85 * std::clamp(row.phi_bar, 0.0, 1.0);
            std::string stroke;
            if (spec.contact_shading && scene) {
                for (const auto& b : scene->boundaries) {
                    Eigen::Vector3d p3 = row.x;
                    const double sd = (scene->dimension == 2)
                                          ? shape_sdf<2>(b.shape, p3.head<2>())
                                          : shape_sdf<3>(b.shape, p3);
                    if (sd > -scene->dx && sd < 0.25 * scene->dx) {
                        stroke = " stroke=\"#4a443c\" stroke-width=\"1\"";
                        break;
                    }
                }
            }
            std::snprintf(buf, sizeof buf,
                          "<circle cx=\"%s\" cy=\"%s\" r=\"%s\" fill=\"rgb(%d,%d,%d)\" "
                          "fill-opacity=\"%s\"%s/>\n",
                          fmt(X(row.x[view.ax])).c_str(), fmt(Y(row.x[view.ay])).c_str(),
                          fmt(r_px).c_str(), c.r, c.g, c.b, fmt(opacity).c_str(),
                          stroke.c_str());
            svg += buf;
        }

        if (spec.show_field_arrow && B_applied) {
            const Eigen::Vector3d& B = *B_applied;
            const double mag = std::hypot(B[view.ax], B[view.ay]);
            if (mag > 0.0) {
                const double cx = 0.08 * W, cy = 0.12 * H, len = 0.06 * spec.canvas;
                const double ux = B[view.ax] / mag, uy = B[view.ay] / mag;
                const double x2 = cx + len * ux, y2 = cy - len * uy;
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"%s\" y1=\"%s\" x2=\"%s\" y2=\"%s\" stroke=\"#222\" "
                              "stroke-width=\"2\"/>\n<circle cx=\"%s\" cy=\"%s\" r=\"2.5\" "
                              "fill=\"#222\"/>\n",
                              fmt(cx).c_str(), fmt(cy).c_str(), fmt(x2).c_str(), fmt(y2).c_str(),
                              fmt(x2).c_str(), fmt(y2).c_str());
                svg += buf;
                std::snprintf(buf, sizeof buf,
                              "<text x=\"%s\" y=\"%s\" font-size=\"11\" fill=\"#222\">B = %.2f "
                              "mT</text>\n",
                              fmt(cx - 10).c_str(), fmt(cy + 22).c_str(), 1e3 * B.norm());
                svg += buf;
            }
        }

        svg += "</svg>\n";
        const std::string path = out_base + view.suffix + ".svg";
        write_text_file(path, svg);
        written.push_back(path);
    }
    return written;
}

} // namespace magmpm
