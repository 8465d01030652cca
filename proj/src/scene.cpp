#include "magmpm/scene.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace magmpm {

using nlohmann::json;

double SceneSpec::cfl_limit() const {
    double pwave = std::sqrt((material.K + 4.0 * material.G / 3.0) / material.rho0);
    return dx / pwave;
}

namespace {

void require_keys(const json& j, const std::string& ctx,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
    if (!j.is_object())
        throw ParseError("expected an object for '" + ctx + "'");
    std::set<std::string> known(required.begin(), required.end());
    known.insert(optional.begin(), optional.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ParseError("unknown key '" + ctx + "." + it.key() + "'");
    std::string missing;
    for (const auto& k : required)
        if (!j.contains(k)) missing += (missing.empty() ? "" : ", ") + ctx + "." + k;
    if (!missing.empty())
        throw ParseError("missing required key(s): " + missing);
}

double get_num(const json& j, const std::string& ctx, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ParseError("key '" + ctx + "." + key + "' must be a number");
    return v.get<double>();
}

double get_num_or(const json& j, const std::string& ctx, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    return get_num(j, ctx, key);
}

Eigen::Vector3d get_vec(const json& j, const std::string& ctx, const std::string& key, int dim) {
    const auto& v = j.at(key);
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ParseError("key '" + ctx + "." + key + "' must be an array of " +
                         std::to_string(dim) + " numbers");
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (int k = 0; k < dim; ++k) {
        if (!v[k].is_number())
            throw ParseError("key '" + ctx + "." + key + "' must contain numbers");
        out[k] = v[k].get<double>();
    }
    return out;
}

ShapeSpec parse_shape(const json& j, const std::string& ctx, int dim, bool as_body) {
    ShapeSpec s;
    if (!j.contains("shape")) throw ParseError("missing required key(s): " + ctx + ".shape");
    std::string kind = j.at("shape").get<std::string>();
    if (kind == "box") {
        if (as_body) {
            require_keys(j, ctx, {"shape", "size", "position"}, {});
            Eigen::Vector3d size = get_vec(j, ctx, "size", dim);
            Eigen::Vector3d pos = get_vec(j, ctx, "position", dim);
            s.kind = ShapeSpec::Kind::Box;
            s.a = pos;
            s.b = pos + size;
            for (int k = 0; k < dim; ++k)
                if (size[k] <= 0.0)
                    throw ValidationError("body box size must be positive in every axis ('" +
                                          ctx + ".size')");
        } else {
            require_keys(j, ctx, {"shape", "min", "max"},
                         {"kind", "mu", "velocity"});
            s.kind = ShapeSpec::Kind::Box;
            s.a = get_vec(j, ctx, "min", dim);
            s.b = get_vec(j, ctx, "max", dim);
            for (int k = 0; k < dim; ++k)
                if (s.b[k] <= s.a[k])
                    throw ValidationError("boundary box must have max > min ('" + ctx + "')");
        }
    } else if (kind == "cylinder") {
        require_keys(j, ctx, {"shape", "axis", "center", "radius", "length"},
                     as_body ? std::vector<std::string>{}
                             : std::vector<std::string>{"kind", "mu", "velocity"});
        s.kind = ShapeSpec::Kind::Cylinder;
        std::string ax = j.at("axis").get<std::string>();
        if (ax == "x") s.axis = 0;
        else if (ax == "y") s.axis = 1;
        else if (ax == "z") s.axis = 2;
        else throw ParseError("key '" + ctx + ".axis' must be one of x, y, z");
        if (s.axis >= dim) throw ValidationError("cylinder axis outside scene dimension");
        s.a = get_vec(j, ctx, "center", dim);
        s.r = get_num(j, ctx, "radius");
        s.h = 0.5 * get_num(j, ctx, "length");
        if (s.r <= 0.0 || s.h <= 0.0)
            throw ValidationError("cylinder radius and length must be positive ('" + ctx + "')");
    } else if (kind == "sphere") {
        require_keys(j, ctx, {"shape", "center", "radius"},
                     as_body ? std::vector<std::string>{}
                             : std::vector<std::string>{"kind", "mu", "velocity"});
        s.kind = ShapeSpec::Kind::Sphere;
        s.a = get_vec(j, ctx, "center", dim);
        s.r = get_num(j, ctx, "radius");
        if (s.r <= 0.0) throw ValidationError("sphere radius must be positive ('" + ctx + "')");
    } else if (kind == "halfspace") {
        if (as_body) throw ParseError("half-spaces are boundary shapes, not body shapes ('" + ctx + "')");
        require_keys(j, ctx, {"shape", "normal", "point"}, {"kind", "mu", "velocity"});
        s.kind = ShapeSpec::Kind::HalfSpace;
        s.a = get_vec(j, ctx, "normal", dim);
        s.b = get_vec(j, ctx, "point", dim);
        double n = s.a.norm();
        if (std::abs(n - 1.0) > 1e-9)
            throw ValidationError("half-space normal must be unit length ('" + ctx + ".normal')");
    } else {
        throw ParseError("key '" + ctx + ".shape' must be one of box, cylinder, sphere, halfspace");
    }
    return s;
}

} // namespace

SceneSpec parse_scene(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene document is not valid JSON: ") + e.what());
    }

    require_keys(j, "scene",
                 {"dimension", "grid", "body", "material", "regions", "time", "tasks"},
                 {"gravity", "boundaries", "stimulus", "design", "optimizer", "name"});

    SceneSpec s;
    s.dimension = j.at("dimension").get<int>();
    if (s.dimension != 2 && s.dimension != 3)
        throw ValidationError("dimension must be 2 or 3");
    const int dim = s.dimension;
    s.name = j.value("name", std::string("scene"));

    // body first so the grid defaults can see it
    {
        const auto& jb = j.at("body");
        if (jb.is_array()) {
            int idx = 0;
            for (const auto& part : jb)
                s.body.push_back(parse_shape(part, "body[" + std::to_string(idx++) + "]", dim, true));
        } else {
            s.body.push_back(parse_shape(jb, "body", dim, true));
        }
        if (s.body.empty()) throw ValidationError("body must contain at least one shape");
    }

    Vec<3> bb_lo3 = Vec<3>::Zero(), bb_hi3 = Vec<3>::Zero();
    double min_feature;
    {
        if (dim == 2) {
            Vec<2> lo, hi;
            body_bounding_box<2>(s.body, lo, hi);
            bb_lo3.head<2>() = lo; bb_hi3.head<2>() = hi;
            min_feature = (hi - lo).minCoeff();
        } else {
            Vec<3> lo, hi;
            body_bounding_box<3>(s.body, lo, hi);
            bb_lo3 = lo; bb_hi3 = hi;
            min_feature = (hi - lo).minCoeff();
        }
    }

    {
        const auto& jg = j.at("grid");
        require_keys(jg, "grid", {"domain"}, {"dx", "particles_per_cell"});
        s.domain = get_vec(jg, "grid", "domain", dim);
        s.dx = get_num_or(jg, "grid", "dx", min_feature / 4.0);
        if (!(s.dx > 0.0)) throw ValidationError("grid.dx must be positive");
        s.particles_per_cell_axis = static_cast<int>(get_num_or(jg, "grid", "particles_per_cell", 2));
        if (s.particles_per_cell_axis < 1)
            throw ValidationError("grid.particles_per_cell must be >= 1");
        for (int k = 0; k < dim; ++k)
            if (!(s.domain[k] > 0.0)) throw ValidationError("grid.domain must be positive");
    }

    {
        const auto& jm = j.at("material");
        require_keys(jm, "material", {"G", "rho0"}, {"K", "damping", "mu0", "Brmax"});
        s.material.G = get_num(jm, "material", "G");
        s.material.K = get_num_or(jm, "material", "K", 1000.0 * s.material.G);
        s.material.rho0 = get_num(jm, "material", "rho0");
        s.material.damping = get_num_or(jm, "material", "damping", 0.0);
        s.material.mu0 = get_num_or(jm, "material", "mu0", 4.0e-7 * M_PI);
        s.material.Br_max = get_num_or(jm, "material", "Brmax", 0.0);
        if (!(s.material.G > 0.0)) throw ValidationError("material.G must be positive");
        if (!(s.material.K > 0.0)) throw ValidationError("material.K must be positive");
        if (!(s.material.rho0 > 0.0)) throw ValidationError("material.rho0 must be positive");
        if (!(s.material.mu0 > 0.0)) throw ValidationError("material.mu0 must be positive");
        if (s.material.damping < 0.0) throw ValidationError("material.damping must be >= 0");
        if (s.material.Br_max < 0.0) throw ValidationError("material.Brmax must be >= 0");
    }

    if (j.contains("gravity"))
        s.gravity = get_vec(j, "scene", "gravity", dim);

    if (j.contains("boundaries")) {
        const auto& ja = j.at("boundaries");
        if (!ja.is_array()) throw ParseError("key 'boundaries' must be an array");
        int idx = 0;
        for (const auto& jb : ja) {
            std::string ctx = "boundaries[" + std::to_string(idx++) + "]";
            BoundarySpec b;
            b.shape = parse_shape(jb, ctx, dim, false);
            std::string kind = jb.value("kind", std::string("friction"));
            if (kind == "friction") b.kind = BoundarySpec::Kind::Friction;
            else if (kind == "non-slip") b.kind = BoundarySpec::Kind::NoSlip;
            else if (kind == "attached") b.kind = BoundarySpec::Kind::Attached;
            else throw ParseError("key '" + ctx + ".kind' must be friction, non-slip, or attached");
            b.mu_f = jb.value("mu", 0.0);
            if (b.mu_f < 0.0) throw ValidationError("boundary friction coefficient must be >= 0 ('" + ctx + "')");
            if (jb.contains("velocity")) b.velocity = get_vec(jb, ctx, "velocity", dim);
            s.boundaries.push_back(b);
        }
    }

    {
        const auto& jr = j.at("regions");
        require_keys(jr, "regions", {}, {"nx", "ny", "nz", "particle_wise"});
        s.regions.particle_wise = jr.value("particle_wise", false);
        if (!s.regions.particle_wise) {
            if (!jr.contains("nx") || !jr.contains("ny"))
                throw ParseError("missing required key(s): regions.nx, regions.ny");
            s.regions.counts[0] = jr.at("nx").get<int>();
            s.regions.counts[1] = jr.at("ny").get<int>();
            s.regions.counts[2] = (dim == 3) ? jr.value("nz", 1) : 1;
            for (int k = 0; k < dim; ++k)
                if (s.regions.counts[k] < 1)
                    throw ValidationError("region counts must be >= 1");
        }
    }

    if (j.contains("stimulus")) {
        const auto& js = j.at("stimulus");
        require_keys(js, "stimulus", {"Bmax"}, {"fmin", "fmax", "harmonic"});
        s.stimulus.B_max = get_num(js, "stimulus", "Bmax");
        s.stimulus.f_min = get_num_or(js, "stimulus", "fmin", 0.0);
        s.stimulus.f_max = get_num_or(js, "stimulus", "fmax", 0.0);
        s.stimulus.harmonic = js.value("harmonic", false);
        if (s.stimulus.B_max < 0.0) throw ValidationError("stimulus.Bmax must be >= 0");
        if (s.stimulus.harmonic) {
            if (!(s.stimulus.f_min >= 0.0) || !(s.stimulus.f_max >= s.stimulus.f_min))
                throw ValidationError("stimulus must satisfy 0 <= fmin <= fmax for harmonic mode");
        }
    }

    {
        const auto& jt = j.at("time");
        require_keys(jt, "time", {"T"}, {"dt"});
        s.T = get_num(jt, "time", "T");
        double pwave = std::sqrt((s.material.K + 4.0 * s.material.G / 3.0) / s.material.rho0);
        s.dt = get_num_or(jt, "time", "dt", 0.3 * s.dx / pwave);
        if (!(s.dt > 0.0)) throw ValidationError("dt must be positive");
        if (!(s.T >= s.dt)) throw ValidationError("time.T must be >= dt");
    }

    {
        const auto& jt = j.at("tasks");
        if (!jt.is_array()) throw ParseError("key 'tasks' must be an array");
        int idx = 0;
        for (const auto& tj : jt) {
            std::string ctx = "tasks[" + std::to_string(idx++) + "]";
            require_keys(tj, ctx, {"kind"}, {"roi", "target", "direction", "average", "name"});
            TaskSpec t;
            std::string kind = tj.at("kind").get<std::string>();
            if (kind == "tip-height") t.kind = TaskSpec::Kind::TipHeight;
            else if (kind == "tip-left-reach") t.kind = TaskSpec::Kind::TipLeftReach;
            else if (kind == "shape-match") t.kind = TaskSpec::Kind::ShapeMatch;
            else if (kind == "locomotion-distance") t.kind = TaskSpec::Kind::LocomotionDistance;
            else throw ParseError("key '" + ctx + ".kind' must be tip-height, tip-left-reach, "
                                  "shape-match, or locomotion-distance");
            std::string roi_dflt =
                (t.kind == TaskSpec::Kind::ShapeMatch) ? "centerline" :
                (t.kind == TaskSpec::Kind::LocomotionDistance) ? "all" : "right-band";
            std::string roi = tj.value("roi", roi_dflt);
            if (roi == "right-band") t.roi = TaskSpec::Roi::RightBand;
            else if (roi == "centerline") t.roi = TaskSpec::Roi::Centerline;
            else if (roi == "all") t.roi = TaskSpec::Roi::All;
            else throw ParseError("key '" + ctx + ".roi' must be right-band, centerline, or all");
            if (t.kind == TaskSpec::Kind::ShapeMatch) {
                if (!tj.contains("target"))
                    throw ParseError("missing required key(s): " + ctx + ".target");
                t.target_file = tj.at("target").get<std::string>();
            }
            if (tj.contains("direction")) {
                t.direction = get_vec(tj, ctx, "direction", dim);
                double n = t.direction.norm();
                if (n <= 0.0) throw ValidationError("task direction must be nonzero ('" + ctx + "')");
                t.direction /= n;
            }
            std::string avg = tj.value("average", std::string("uniform"));
            if (avg == "uniform") t.average = TaskSpec::Average::Uniform;
            else if (avg == "mass") t.average = TaskSpec::Average::Mass;
            else throw ParseError("key '" + ctx + ".average' must be uniform or mass");
            t.name = tj.value("name", kind);
            s.tasks.push_back(t);
        }
    }

    if (j.contains("design")) {
        const auto& jd = j.at("design");
        require_keys(jd, "design", {},
                     {"topology", "filter_radius_factor", "phi", "mag_magnitude",
                      "mag_orientation", "stim_magnitude", "stim_frequency", "stim_orientation"});
        s.topology_design = jd.value("topology", false);
        s.filter_radius_factor = jd.value("filter_radius_factor", 2.5);
        if (!(s.filter_radius_factor > 0.0))
            throw ValidationError("design.filter_radius_factor must be positive");
        s.init.phi = jd.value("phi", 1.0);
        s.init.mag_magnitude = jd.value("mag_magnitude", 1.0);
        if (jd.contains("mag_orientation"))
            s.init.mag_orientation = get_vec(jd, "design", "mag_orientation", dim);
        s.init.stim_magnitude = jd.value("stim_magnitude", 0.5);
        s.init.stim_frequency = jd.value("stim_frequency", 0.5);
        if (jd.contains("stim_orientation"))
            s.init.stim_orientation = get_vec(jd, "design", "stim_orientation", dim);
    }

    if (j.contains("optimizer")) {
        const auto& jo = j.at("optimizer");
        require_keys(jo, "optimizer", {},
                     {"max_iters", "lr_topology", "lr_magnitude", "lr_orientation",
                      "lr_stimulus", "beta_start", "beta_period", "beta_cap", "threshold"});
        if (jo.contains("max_iters")) s.opt.max_iters = jo.at("max_iters").get<int>();
        if (jo.contains("lr_topology")) s.opt.lr_topology = jo.at("lr_topology").get<double>();
        if (jo.contains("lr_magnitude")) s.opt.lr_magnitude = jo.at("lr_magnitude").get<double>();
        if (jo.contains("lr_orientation")) s.opt.lr_orientation = jo.at("lr_orientation").get<double>();
        if (jo.contains("lr_stimulus")) s.opt.lr_stimulus = jo.at("lr_stimulus").get<double>();
        if (jo.contains("beta_start")) s.opt.beta_start = jo.at("beta_start").get<double>();
        if (jo.contains("beta_period")) s.opt.beta_period = jo.at("beta_period").get<int>();
        if (jo.contains("beta_cap")) s.opt.beta_cap = jo.at("beta_cap").get<double>();
        if (jo.contains("threshold")) s.opt.convergence_threshold = jo.at("threshold").get<double>();
    }

    // body must sit inside the domain with >= 3 cells of padding so the
    // quadratic kernel never touches the domain edge
    for (int k = 0; k < dim; ++k) {
        double pad = 3.0 * s.dx;
        if (bb_lo3[k] < pad - 1e-12 || bb_hi3[k] > s.domain[k] - pad + 1e-12)
            throw ValidationError("body must keep at least 3 grid cells of padding inside the "
                                  "domain on every side (axis " + std::to_string(k) + ")");
    }

    return s;
}

SceneSpec load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open scene file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

template <int D>
ParticleSet<D> seed_particles(const SceneSpec& spec) {
    ParticleSet<D> ps;
    const int k = spec.particles_per_cell_axis;
    const double dx = spec.dx;
    const double spacing = dx / k;
    const double vol = std::pow(spacing, D);

    Vec<D> lo, hi;
    body_bounding_box<D>(spec.body, lo, hi);
    ps.bbox_lo = lo;
    ps.bbox_hi = hi;

    // global sub-lattice: k points per grid cell per axis, cell-centered
    Eigen::Array<long, D, 1> i_lo, i_hi;
    for (int a = 0; a < D; ++a) {
        i_lo[a] = static_cast<long>(std::floor(lo[a] / spacing)) - 1;
        i_hi[a] = static_cast<long>(std::ceil(hi[a] / spacing)) + 1;
    }

    Eigen::Array<long, D, 1> it = i_lo;
    while (true) {
        Vec<D> p;
        for (int a = 0; a < D; ++a) p[a] = (static_cast<double>(it[a]) + 0.5) * spacing;
        if (body_contains<D>(spec.body, p)) {
            ps.x0.push_back(p);
            ps.volume.push_back(vol);
        }
        int a = 0;
        for (; a < D; ++a) {
            if (++it[a] <= i_hi[a]) break;
            it[a] = i_lo[a];
        }
        if (a == D) break;
    }

    if (ps.x0.empty())
        throw ValidationError("body geometry contains no lattice points; refine dx or enlarge the body");
    ps.region.assign(ps.x0.size(), 0);
    ps.n_regions = 1;
    return ps;
}

template <int D>
void assign_regions(ParticleSet<D>& particles, const SceneSpec& spec) {
    const int n_p = particles.size();
    if (spec.regions.particle_wise) {
        particles.n_regions = n_p;
        for (int p = 0; p < n_p; ++p) particles.region[p] = p;
        return;
    }
    Eigen::Array<int, D, 1> counts;
    for (int a = 0; a < D; ++a) counts[a] = spec.regions.counts[a];
    const Vec<D> lo = particles.bbox_lo;
    const Vec<D> size = particles.bbox_hi - particles.bbox_lo;
    int n_m = 1;
    for (int a = 0; a < D; ++a) n_m *= counts[a];
    particles.n_regions = n_m;

    std::vector<int> population(n_m, 0);
    for (int p = 0; p < n_p; ++p) {
        int idx = 0;
        for (int a = 0; a < D; ++a) {
            double frac = (particles.x0[p][a] - lo[a]) / size[a];
            int c = std::clamp(static_cast<int>(std::floor(frac * counts[a])), 0, counts[a] - 1);
            idx = idx * counts[a] + c;
        }
        particles.region[p] = idx;
        ++population[idx];
    }
    for (int m = 0; m < n_m; ++m)
        if (population[m] == 0)
            throw ValidationError("design region " + std::to_string(m) +
                                  " contains no particles; coarsen the region grid");
}

template ParticleSet<2> seed_particles<2>(const SceneSpec&);
template ParticleSet<3> seed_particles<3>(const SceneSpec&);
template void assign_regions<2>(ParticleSet<2>&, const SceneSpec&);
template void assign_regions<3>(ParticleSet<3>&, const SceneSpec&);

} // namespace magmpm
