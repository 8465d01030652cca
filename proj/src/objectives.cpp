#include "magmpm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace magmpm {

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
    if (file.empty() || file.front() == '/') return file;
    if (dir.empty()) return file;
    return dir + "/" + file;
}

} // namespace

template <int D>
std::vector<std::pair<double, Vec<D>>> load_target_polyline(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open target-shape file: " + path);
    std::vector<std::pair<double, Vec<D>>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("s,", 0) == 0) continue; // header
        std::istringstream ls(line);
        double s;
        Vec<D> x;
        char comma;
        if (!(ls >> s)) throw ParseError("target-shape file " + path + ": bad line " +
                                         std::to_string(lineno));
        for (int a = 0; a < D; ++a)
            if (!(ls >> comma >> x[a]))
                throw ParseError("target-shape file " + path + ": bad line " +
                                 std::to_string(lineno));
        pts.emplace_back(s, x);
    }
    if (pts.size() < 2)
        throw ValidationError("target-shape file " + path + " needs at least two samples");
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return pts;
}

namespace {

/// Resample a polyline at fractions of its cumulative arc length.
template <int D>
std::vector<Vec<D>> resample_by_arclength(const std::vector<std::pair<double, Vec<D>>>& poly,
                                          int count) {
    std::vector<double> cum(poly.size(), 0.0);
    for (size_t i = 1; i < poly.size(); ++i)
        cum[i] = cum[i - 1] + (poly[i].second - poly[i - 1].second).norm();
    const double total = cum.back();
    std::vector<Vec<D>> out(count);
    for (int i = 0; i < count; ++i) {
        const double s = (count == 1) ? 0.0 : total * i / (count - 1);
        auto it = std::lower_bound(cum.begin(), cum.end(), s);
        size_t hi = std::min<size_t>(std::distance(cum.begin(), it), poly.size() - 1);
        if (hi == 0) hi = 1;
        const size_t lo = hi - 1;
        const double seg = cum[hi] - cum[lo];
        const double f = (seg > 0.0) ? (s - cum[lo]) / seg : 0.0;
        out[i] = (1.0 - f) * poly[lo].second + f * poly[hi].second;
    }
    return out;
}

} // namespace

template <int D>
CompiledTask<D> compile_task(const TaskSpec& task, const ParticleSet<D>& particles,
                             const SceneSpec& scene, const std::string& scene_dir) {
    CompiledTask<D> out;
    out.spec = task;
    out.name = task.name;
    out.roi = select_roi<D>(particles, task.roi, scene.dx, scene.particle_spacing());
    out.direction = task.direction.head<D>();
    if (task.kind == TaskSpec::Kind::ShapeMatch) {
        auto poly = load_target_polyline<D>(join_path(scene_dir, task.target_file));
        if (poly.size() == out.roi.size()) {
            out.target.resize(poly.size());
            for (size_t i = 0; i < poly.size(); ++i) out.target[i] = poly[i].second;
        } else {
            out.target = resample_by_arclength<D>(poly, static_cast<int>(out.roi.size()));
        }
    }
    if (task.kind == TaskSpec::Kind::LocomotionDistance &&
        task.average == TaskSpec::Average::Uniform && scene.topology_design) {
        std::fprintf(stderr,
                     "warning: uniform velocity averaging with active topology design "
                     "biases the objective toward total mass; prefer average=mass\n");
    }
    return out;
}

template std::vector<std::pair<double, Vec<2>>> load_target_polyline<2>(const std::string&);
template std::vector<std::pair<double, Vec<3>>> load_target_polyline<3>(const std::string&);
template CompiledTask<2> compile_task<2>(const TaskSpec&, const ParticleSet<2>&,
                                         const SceneSpec&, const std::string&);
template CompiledTask<3> compile_task<3>(const TaskSpec&, const ParticleSet<3>&,
                                         const SceneSpec&, const std::string&);

} // namespace magmpm
