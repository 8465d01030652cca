#ifndef MAGMPM_PROBLEM_HPP
#define MAGMPM_PROBLEM_HPP

#include "magmpm/adjoint.hpp"
#include "magmpm/design.hpp"
#include "magmpm/engine.hpp"
#include "magmpm/objectives.hpp"
#include "magmpm/scene.hpp"

#include <string>
#include <vector>

namespace magmpm {

/// A scene lowered to a fixed dimension and bound to its tasks; the single
/// entry point used by the optimizer, the gradient checker, and the CLI.
template <int D>
struct Problem {
    SceneSpec scene;
    ParticleSet<D> particles;
    EngineScene<D> es;
    FilterWeights filter;
    DesignLayout layout;
    std::vector<CompiledTask<D>> tasks;

    static Problem build(const SceneSpec& spec, const std::string& scene_dir = "") {
        Problem pr;
        pr.scene = spec;
        pr.particles = seed_particles<D>(spec);
        assign_regions<D>(pr.particles, spec);
        pr.es = EngineScene<D>::compile(spec, pr.particles);
        pr.filter = precompute_filter<D>(pr.particles,
                                         spec.filter_radius_factor * spec.particle_spacing());
        pr.layout.n_p = pr.particles.size();
        pr.layout.n_m = pr.particles.n_regions;
        pr.layout.n_tasks = static_cast<int>(spec.tasks.size());
        pr.layout.dim = D;
        for (const auto& t : spec.tasks)
            pr.tasks.push_back(compile_task<D>(t, pr.particles, spec, scene_dir));
        return pr;
    }

    MappedField<double, D> map(const VecX& design, double beta) const {
        return map_design<double, D>(design, layout, particles, filter, beta, scene.material,
                                     scene.topology_design);
    }

    std::function<Vec<D>(double)> stimulus_of(const VecX& design, int task) const {
        const double Ba = design[layout.stim_mag_index(task)];
        const double f = design[layout.stim_freq_index(task)];
        Vec<D> eta;
        for (int a = 0; a < D; ++a) eta[a] = design[layout.stim_dir_index(task, a)];
        StimulusSpec stim = scene.stimulus;
        return [Ba, f, eta, stim](double t) {
            return stimulus_field<double, D>(t, Ba, f, eta, stim);
        };
    }

    Trajectory<D> simulate_task(const VecX& design, double beta, int task,
                                RecordMode mode = RecordMode::Checkpoints,
                                const MappedField<double, D>* premapped = nullptr,
                                const FrameHook<D>& hook = nullptr, int hook_stride = 0) const {
        MappedField<double, D> local;
        if (!premapped) {
            local = map(design, beta);
            premapped = &local;
        }
        return simulate<D>(es, *premapped,
                           tasks.empty() ? std::function<Vec<D>(double)>()
                                         : stimulus_of(design, task),
                           mode, 0, hook, hook_stride);
    }

    /// Forward-only objective; fills per-task losses when requested.
    double eval_loss(const VecX& design, double beta,
                     std::vector<double>* per_task = nullptr) const {
        const MappedField<double, D> mat = map(design, beta);
        std::vector<double> losses;
        for (size_t l = 0; l < tasks.size(); ++l) {
            Trajectory<D> traj = simulate<D>(es, mat, stimulus_of(design, static_cast<int>(l)),
                                             RecordMode::None);
            losses.push_back(evaluate_loss<D>(tasks[l], particles, traj));
        }
        if (per_task) *per_task = losses;
        return aggregate_multitask(losses);
    }

    /// Forward + adjoint over all tasks. Shared (topology/material) gradients
    /// sum across tasks; stimulus slices stay per task.
    VecX gradient(const VecX& design, double beta, double* loss_out = nullptr,
                  std::vector<double>* per_task = nullptr) const {
        const MappedField<double, D> mat = map(design, beta);
        VecX grad = VecX::Zero(layout.size());
        std::vector<double> losses;
        for (size_t l = 0; l < tasks.size(); ++l) {
            const int task = static_cast<int>(l);
            Trajectory<D> traj = simulate<D>(es, mat, stimulus_of(design, task),
                                             RecordMode::Checkpoints);
            losses.push_back(evaluate_loss<D>(tasks[l], particles, traj));
            const AdjointSeeds<D> seeds = seed_cotangents<D>(tasks[l], particles, traj);
            grad += backward_task<D>(es, particles, mat, layout, design, task, filter, beta,
                                     scene.material, scene.topology_design, scene.stimulus,
                                     traj, seeds);
        }
        if (per_task) *per_task = losses;
        if (loss_out) *loss_out = aggregate_multitask(losses);
        return grad;
    }
};

} // namespace magmpm

#endif
