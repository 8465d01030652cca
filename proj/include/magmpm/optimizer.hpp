#ifndef MAGMPM_OPTIMIZER_HPP
#define MAGMPM_OPTIMIZER_HPP

#include "magmpm/problem.hpp"

#include <chrono>
#include <functional>
#include <string>
#include <vector>

namespace magmpm {

struct OptConfig {
    double lr_topology = 0.02;
    double lr_magnitude = 0.02;
    double lr_orientation = 0.05;
    double lr_stimulus = 0.02; // Ba and f; eta uses lr_orientation
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int max_iters = 300;
    int window = 10;
    double threshold = 1e-3;
    double beta_start = 1.0;
    int beta_period = 10;
    double beta_cap = 128.0;
    int design_snapshot_stride = 0; // iterations between design dumps; 0 = off

    static OptConfig from_scene(const SceneSpec& scene);
};

enum class OptMode { Stimulus, Material, Codesign, TopologyCodesign };

OptMode parse_opt_mode(const std::string& name); // throws ParseError listing valid modes
std::string opt_mode_name(OptMode mode);
bool group_active(OptMode mode, VariableGroup g);
double group_learning_rate(const OptConfig& cfg, VariableGroup g);

/// beta continuation: min(cap, start * 2^floor(iter/period)).
double update_beta(int iteration, const OptConfig& cfg);

/// Trailing-window rule: with >= 2*window entries, converged iff the relative
/// change between the last-window mean and the previous-window mean is below
/// the threshold.
bool check_convergence(const std::vector<double>& history, int window, double threshold);

struct AdamState {
    VecX m, v;
    int t = 0;
};

/// Masked Adam update with bias correction, then projection onto the box
/// bounds. Moments update only for active components.
void adam_step(VecX& design, const VecX& grad, AdamState& adam, const OptConfig& cfg,
               const DesignLayout& layout, OptMode mode);

struct OptIterRow {
    int iter = 0, task = 0;
    double objective = 0;
    double gnorm_phi = 0, gnorm_mat = 0, gnorm_stim = 0;
    double beta = 0;
    double seconds = 0;
};

struct OptRecord {
    std::vector<OptIterRow> rows;
    std::vector<double> history;
    VecX final_design;
    std::vector<double> final_task_losses;
    double final_objective = 0;
    bool converged = false;
    int iterations = 0;
    bool aborted = false;
    std::string abort_reason;
};

std::string convergence_log_csv(const OptRecord& rec);

using DesignSnapshotHook = std::function<void(int iter, const VecX& design)>;

template <int D>
OptRecord optimize(const Problem<D>& problem, VecX design, const OptConfig& cfg, OptMode mode,
                   const DesignSnapshotHook& snapshot_hook = nullptr) {
    OptRecord rec;
    clamp_design(design, problem.layout);
    rec.final_design = design;

    if (mode == OptMode::TopologyCodesign && !problem.scene.topology_design)
        throw ValidationError("mode topology-codesign requires a scene with design.topology=true");

    const bool continuation =
        problem.scene.topology_design && mode == OptMode::TopologyCodesign;

    if (cfg.max_iters == 0) {
        rec.final_objective = problem.eval_loss(design, cfg.beta_start, &rec.final_task_losses);
        rec.history.push_back(rec.final_objective);
        for (size_t l = 0; l < problem.tasks.size(); ++l)
            rec.rows.push_back({0, static_cast<int>(l), rec.final_task_losses[l], 0, 0, 0,
                                cfg.beta_start, 0});
        return rec;
    }

    AdamState adam;
    adam.m = VecX::Zero(problem.layout.size());
    adam.v = VecX::Zero(problem.layout.size());
    const DesignLayout& L = problem.layout;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const double beta = continuation ? update_beta(iter, cfg) : cfg.beta_start;
        const auto t0 = std::chrono::steady_clock::now();
        double loss = 0;
        std::vector<double> per_task;
        VecX grad;
        try {
            grad = problem.gradient(design, beta, &loss, &per_task);
        } catch (const SimulationError& e) {
            rec.aborted = true;
            rec.abort_reason = e.what();
            rec.iterations = iter;
            return rec; // last valid design preserved in rec.final_design
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        double g_phi = 0, g_mat = 0;
        for (int p = 0; p < L.n_p; ++p) g_phi += grad[L.phi_index(p)] * grad[L.phi_index(p)];
        for (int m = 0; m < L.n_m; ++m) {
            g_mat += grad[L.mag_index(m)] * grad[L.mag_index(m)];
            for (int a = 0; a < L.dim; ++a)
                g_mat += grad[L.dir_index(m, a)] * grad[L.dir_index(m, a)];
        }
        g_phi = std::sqrt(g_phi);
        g_mat = std::sqrt(g_mat);
        for (size_t l = 0; l < problem.tasks.size(); ++l) {
            double g_stim = 0;
            for (int k = 0; k < 2 + L.dim; ++k) {
                const double g = grad[L.stim_base(static_cast<int>(l)) + k];
                g_stim += g * g;
            }
            rec.rows.push_back({iter, static_cast<int>(l), per_task[l], g_phi, g_mat,
                                std::sqrt(g_stim), beta, seconds});
        }
        rec.history.push_back(loss);
        rec.final_design = design;
        rec.final_task_losses = per_task;
        rec.final_objective = loss;
        rec.iterations = iter + 1;
        if (snapshot_hook && cfg.design_snapshot_stride > 0 &&
            iter % cfg.design_snapshot_stride == 0)
            snapshot_hook(iter, design);

        // while beta still ramps the problem keeps changing; arm the
        // convergence rule only at the cap
        const bool armed = !continuation || beta >= cfg.beta_cap;
        if (armed && check_convergence(rec.history, cfg.window, cfg.threshold)) {
            rec.converged = true;
            break;
        }
        if (!grad.allFinite()) {
            int bad = -1;
            for (int i = 0; i < grad.size(); ++i)
                if (!std::isfinite(grad[i])) { bad = i; break; }
            rec.aborted = true;
            rec.abort_reason = "NaN gradient in component " + std::to_string(bad) + " (" +
                               group_name(component_group(L, bad)) + ")";
            break;
        }
        adam_step(design, grad, adam, cfg, L, mode);
    }
    return rec;
}

} // namespace magmpm

#endif
