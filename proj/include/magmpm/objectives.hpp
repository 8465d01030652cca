#ifndef MAGMPM_OBJECTIVES_HPP
#define MAGMPM_OBJECTIVES_HPP

#include "magmpm/common.hpp"
#include "magmpm/engine.hpp"
#include "magmpm/scene.hpp"

#include <string>
#include <vector>

namespace magmpm {

/// A task bound to a concrete particle set: region-of-interest indices,
/// resampled shape target, unit direction.
template <int D>
struct CompiledTask {
    TaskSpec spec;
    std::vector<int> roi;          // particle indices
    std::vector<Vec<D>> target;    // one point per roi particle (shape-match)
    Vec<D> direction = Vec<D>::Unit(0);
    std::string name;
};

/// Polyline sample `s,x,y[,z]` with s in [0,1] by arc length.
template <int D>
std::vector<std::pair<double, Vec<D>>> load_target_polyline(const std::string& path);

template <int D>
std::vector<int> select_roi(const ParticleSet<D>& particles, TaskSpec::Roi roi, double dx,
                            double spacing);

/// Bind a task to the seeded particles; loads and resamples shape targets.
template <int D>
CompiledTask<D> compile_task(const TaskSpec& task, const ParticleSet<D>& particles,
                             const SceneSpec& scene, const std::string& scene_dir);

/// Negated mean vertical tip displacement (minimize to raise the tip).
template <int D>
double tip_height_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                       const SimState<double, D>& final_state);

/// Mean horizontal tip displacement (minimize to push the tip left).
template <int D>
double tip_left_reach_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                           const SimState<double, D>& final_state);

template <int D>
double shape_match_loss(const CompiledTask<D>& task, const SimState<double, D>& final_state);

/// -sum_t vbar(t).e dt over the recorded trajectory; vbar per the task's
/// averaging mode.
template <int D>
double locomotion_loss(const CompiledTask<D>& task, const Trajectory<D>& traj);

template <int D>
double evaluate_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                     const Trajectory<D>& traj);

/// Unweighted sum by default; optional user weights.
inline double aggregate_multitask(const std::vector<double>& losses,
                                  const std::vector<double>& weights = {}) {
    double acc = 0.0;
    for (size_t i = 0; i < losses.size(); ++i)
        acc += (weights.empty() ? 1.0 : weights[i]) * losses[i];
    return acc;
}

/// Cotangent seeds consumed by the adjoint sweep.
template <int D>
struct AdjointSeeds {
    std::vector<Vec<D>> x_final;       // d(loss)/d x_p(T)
    bool per_step_velocity = false;    // locomotion losses
    std::vector<Vec<D>> v_step_coeff;  // added to vbar_p at every step
    bool mass_averaged = false;        // also contributes d(loss)/d m_p
    Vec<D> direction = Vec<D>::Zero();
    double dt = 0.0;
    double total_mass = 0.0;
};

template <int D>
AdjointSeeds<D> seed_cotangents(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                                const Trajectory<D>& traj);

// --- implementation -------------------------------------------------------

template <int D>
std::vector<int> select_roi(const ParticleSet<D>& particles, TaskSpec::Roi roi, double dx,
                            double spacing) {
    std::vector<int> out;
    const int n = particles.size();
    switch (roi) {
    case TaskSpec::Roi::All:
        out.resize(n);
        for (int p = 0; p < n; ++p) out[p] = p;
        break;
    case TaskSpec::Roi::RightBand: {
        const double cut = particles.bbox_hi[0] - dx;
        for (int p = 0; p < n; ++p)
            if (particles.x0[p][0] > cut) out.push_back(p);
        break;
    }
    case TaskSpec::Roi::Centerline: {
        const double mid = 0.5 * (particles.bbox_lo[1] + particles.bbox_hi[1]);
        for (int p = 0; p < n; ++p)
            if (std::abs(particles.x0[p][1] - mid) <= 0.5 * spacing + 1e-12)
                out.push_back(p);
        std::sort(out.begin(), out.end(), [&](int a, int b) {
            return particles.x0[a][0] < particles.x0[b][0];
        });
        break;
    }
    }
    if (out.empty())
        throw ValidationError("task region of interest selected no particles");
    return out;
}

template <int D>
double tip_height_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                       const SimState<double, D>& fs) {
    double acc = 0.0;
    for (int p : task.roi) acc += fs.x[p][1] - particles.x0[p][1];
    return -acc / static_cast<double>(task.roi.size());
}

template <int D>
double tip_left_reach_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                           const SimState<double, D>& fs) {
    double acc = 0.0;
    for (int p : task.roi) acc += fs.x[p][0] - particles.x0[p][0];
    return acc / static_cast<double>(task.roi.size());
}

template <int D>
double shape_match_loss(const CompiledTask<D>& task, const SimState<double, D>& fs) {
    if (task.target.size() != task.roi.size())
        throw ValidationError("shape target count does not match centerline particle count");
    double acc = 0.0;
    for (size_t i = 0; i < task.roi.size(); ++i)
        acc += (fs.x[task.roi[i]] - task.target[i]).squaredNorm();
    return acc / static_cast<double>(task.roi.size());
}

template <int D>
double locomotion_loss(const CompiledTask<D>& task, const Trajectory<D>& traj) {
    const auto& series = (task.spec.average == TaskSpec::Average::Mass) ? traj.mass_mean_v
                                                                        : traj.mean_v;
    double acc = 0.0;
    for (const auto& v : series) acc += v.dot(task.direction);
    return -acc * traj.dt;
}

template <int D>
double evaluate_loss(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                     const Trajectory<D>& traj) {
    switch (task.spec.kind) {
    case TaskSpec::Kind::TipHeight: return tip_height_loss<D>(task, particles, traj.final_state);
    case TaskSpec::Kind::TipLeftReach:
        return tip_left_reach_loss<D>(task, particles, traj.final_state);
    case TaskSpec::Kind::ShapeMatch: return shape_match_loss<D>(task, traj.final_state);
    case TaskSpec::Kind::LocomotionDistance: return locomotion_loss<D>(task, traj);
    }
    return 0.0;
}

template <int D>
AdjointSeeds<D> seed_cotangents(const CompiledTask<D>& task, const ParticleSet<D>& particles,
                                const Trajectory<D>& traj) {
    AdjointSeeds<D> seeds;
    const int n_p = particles.size();
    seeds.x_final.assign(n_p, Vec<D>::Zero());
    const double n_roi = static_cast<double>(task.roi.size());
    switch (task.spec.kind) {
    case TaskSpec::Kind::TipHeight:
        for (int p : task.roi) seeds.x_final[p][1] = -1.0 / n_roi;
        break;
    case TaskSpec::Kind::TipLeftReach:
        for (int p : task.roi) seeds.x_final[p][0] = 1.0 / n_roi;
        break;
    case TaskSpec::Kind::ShapeMatch:
        for (size_t i = 0; i < task.roi.size(); ++i)
            seeds.x_final[task.roi[i]] =
                2.0 / n_roi * (traj.final_state.x[task.roi[i]] - task.target[i]);
        break;
    case TaskSpec::Kind::LocomotionDistance: {
        seeds.per_step_velocity = true;
        seeds.direction = task.direction;
        seeds.dt = traj.dt;
        seeds.v_step_coeff.assign(n_p, Vec<D>::Zero());
        if (task.spec.average == TaskSpec::Average::Mass) {
            seeds.mass_averaged = true;
            seeds.total_mass = traj.total_mass;
            // per-particle coefficient depends on its (constant) mass; the
            // adjoint fills it in because masses live in the mapped field
        } else {
            const Vec<D> c = -task.direction * traj.dt / static_cast<double>(n_p);
            seeds.v_step_coeff.assign(n_p, c);
        }
        break;
    }
    }
    return seeds;
}

} // namespace magmpm

#endif
