#include "magmpm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace magmpm {

OptConfig OptConfig::from_scene(const SceneSpec& scene) {
    OptConfig cfg;
    const auto& o = scene.opt;
    if (o.max_iters) cfg.max_iters = *o.max_iters;
    if (o.lr_topology) cfg.lr_topology = *o.lr_topology;
    if (o.lr_magnitude) cfg.lr_magnitude = *o.lr_magnitude;
    if (o.lr_orientation) cfg.lr_orientation = *o.lr_orientation;
    if (o.lr_stimulus) cfg.lr_stimulus = *o.lr_stimulus;
    if (o.beta_start) cfg.beta_start = *o.beta_start;
    if (o.beta_period) cfg.beta_period = *o.beta_period;
    if (o.beta_cap) cfg.beta_cap = *o.beta_cap;
    if (o.convergence_threshold) cfg.threshold = *o.convergence_threshold;
    return cfg;
}

OptMode parse_opt_mode(const std::string& name) {
    if (name == "stimulus") return OptMode::Stimulus;
    if (name == "material") return OptMode::Material;
    if (name == "codesign") return OptMode::Codesign;
    if (name == "topology-codesign") return OptMode::TopologyCodesign;
    throw ParseError("unknown mode '" + name +
                     "': valid modes are stimulus, material, codesign, topology-codesign");
}

std::string opt_mode_name(OptMode mode) {
    switch (mode) {
    case OptMode::Stimulus: return "stimulus";
    case OptMode::Material: return "material";
    case OptMode::Codesign: return "codesign";
    case OptMode::TopologyCodesign: return "topology-codesign";
    }
    return "?";
}

bool group_active(OptMode mode, VariableGroup g) {
    const bool stim = g == VariableGroup::StimMagnitude || g == VariableGroup::StimFrequency ||
                      g == VariableGroup::StimOrientation;
    const bool mat = g == VariableGroup::MagMagnitude || g == VariableGroup::MagOrientation;
    const bool topo = g == VariableGroup::Topology;
    switch (mode) {
    case OptMode::Stimulus: return stim;
    case OptMode::Material: return mat;
    case OptMode::Codesign: return stim || mat;
    case OptMode::TopologyCodesign: return stim || mat || topo;
    }
    return false;
}

double group_learning_rate(const OptConfig& cfg, VariableGroup g) {
    switch (g) {
    case VariableGroup::Topology: return cfg.lr_topology;
    case VariableGroup::MagMagnitude: return cfg.lr_magnitude;
    case VariableGroup::MagOrientation: return cfg.lr_orientation;
    case VariableGroup::StimMagnitude: return cfg.lr_stimulus;
    case VariableGroup::StimFrequency: return cfg.lr_stimulus;
    case VariableGroup::StimOrientation: return cfg.lr_orientation;
    }
    return cfg.lr_stimulus;
}

double update_beta(int iteration, const OptConfig& cfg) {
    const double b = cfg.beta_start * std::pow(2.0, iteration / cfg.beta_period);
    return std::min(cfg.beta_cap, b);
}

bool check_convergence(const std::vector<double>& history, int window, double threshold) {
    const int n = static_cast<int>(history.size());
    if (n < 2 * window) return false;
    double a = 0.0, b = 0.0;
    for (int i = n - window; i < n; ++i) a += history[i];
    for (int i = n - 2 * window; i < n - window; ++i) b += history[i];
    a /= window;
    b /= window;
    const double denom = std::max(std::abs(b), 1e-30);
    return std::abs(a - b) / denom < threshold;
}

void adam_step(VecX& design, const VecX& grad, AdamState& adam, const OptConfig& cfg,
               const DesignLayout& layout, OptMode mode) {
    ++adam.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, adam.t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, adam.t);
    for (int i = 0; i < layout.size(); ++i) {
        const VariableGroup g = component_group(layout, i);
        if (!group_active(mode, g)) continue;
        adam.m[i] = cfg.beta1 * adam.m[i] + (1.0 - cfg.beta1) * grad[i];
        adam.v[i] = cfg.beta2 * adam.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = adam.m[i] / bc1;
        const double vhat = adam.v[i] / bc2;
        design[i] -= group_learning_rate(cfg, g) * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    clamp_design(design, layout);
}

std::string convergence_log_csv(const OptRecord& rec) {
    std::string out = "iter,task,objective,grad_norm_phi,grad_norm_mat,grad_norm_stim,beta,seconds\n";
    char buf[256];
    for (const auto& r : rec.rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.iter,
                      r.task, r.objective, r.gnorm_phi, r.gnorm_mat, r.gnorm_stim, r.beta,
                      r.seconds);
        out += buf;
    }
    return out;
}

} // namespace magmpm
