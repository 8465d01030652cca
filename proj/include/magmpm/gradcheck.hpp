#ifndef MAGMPM_GRADCHECK_HPP
#define MAGMPM_GRADCHECK_HPP

#include "magmpm/problem.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace magmpm {

struct FdOptions {
    double h_bounded = 1e-6;   // phi, magnitudes, Ba, f
    double h_orient = 1e-5;    // zeta, eta
    bool richardson = true;    // re-estimate at h/2 to flag noise
    double noise_rel = 0.01;   // gap between h and h/2 estimates that flags a component
};

struct FdComponent {
    int index = -1;
    double value = 0.0;   // finer estimate when Richardson is on
    double errbar = 0.0;
    bool noisy = false;
    bool failed = false;  // objective evaluation failed at a perturbed point
};

struct GradCheckRow {
    int index;
    std::string group;
    double adjoint, fd, rel_err;
    std::string flag;
};

struct GradCheckReport {
    bool pass = false;
    double cosine = 0.0;
    int n_checked = 0, n_significant = 0, n_within_tol = 0, n_flagged = 0;
    int worst_component = -1;
    double worst_rel_err = 0.0;
    std::vector<GradCheckRow> rows;
};

/// Components the optimizer would touch for this scene: everything except
/// topology when topology design is disabled.
inline std::vector<int> active_components(const DesignLayout& layout, bool topology_enabled) {
    std::vector<int> out;
    for (int i = 0; i < layout.size(); ++i) {
        if (!topology_enabled && component_group(layout, i) == VariableGroup::Topology)
            continue;
        out.push_back(i);
    }
    return out;
}

/// Central-difference oracle with a per-group step schedule and a Richardson
/// noise check at h/2.
template <int D>
std::vector<FdComponent> finite_difference_gradient(const Problem<D>& problem,
                                                    const VecX& design, double beta,
                                                    const std::vector<int>& components,
                                                    const FdOptions& opt = {}) {
    std::vector<FdComponent> out;
    out.reserve(components.size());
    for (int idx : components) {
        FdComponent c;
        c.index = idx;
        const VariableGroup g = component_group(problem.layout, idx);
        const bool orient = (g == VariableGroup::MagOrientation ||
                             g == VariableGroup::StimOrientation);
        const double h = orient ? opt.h_orient : opt.h_bounded;
        auto central = [&](double hh, bool& ok) {
            VecX d = design;
            double fp = 0, fm = 0;
            ok = true;
            try {
                d[idx] = design[idx] + hh;
                fp = problem.eval_loss(d, beta);
                d[idx] = design[idx] - hh;
                fm = problem.eval_loss(d, beta);
            } catch (const std::exception&) {
                ok = false;
            }
            return (fp - fm) / (2.0 * hh);
        };
        bool ok1 = true, ok2 = true;
        const double d1 = central(h, ok1);
        if (!ok1) {
            c.failed = true;
            out.push_back(c);
            continue;
        }
        if (opt.richardson) {
            const double d2 = central(0.5 * h, ok2);
            if (!ok2) {
                c.value = d1;
                c.failed = false;
                c.noisy = true;
                out.push_back(c);
                continue;
            }
            c.value = d2;
            c.errbar = std::abs(d1 - d2) / 3.0;
            const double scale = std::max({std::abs(d1), std::abs(d2), 1e-300});
            c.noisy = std::abs(d1 - d2) / scale > opt.noise_rel;
        } else {
            c.value = d1;
        }
        out.push_back(c);
    }
    return out;
}

/// Compare an adjoint gradient against FD estimates. Pass requires cosine
/// similarity >= cosine_tol and >= 95% of significant, non-noisy components
/// within rel_tol.
inline GradCheckReport compare_gradients(const VecX& adjoint,
                                         const std::vector<FdComponent>& fd,
                                         const DesignLayout& layout, double rel_tol,
                                         double cosine_tol) {
    GradCheckReport rep;
    double amax = 0.0;
    for (const auto& c : fd)
        if (!c.failed) amax = std::max(amax, std::abs(adjoint[c.index]));

    double dot = 0.0, na = 0.0, nf = 0.0;
    for (const auto& c : fd) {
        if (c.failed) {
            rep.rows.push_back({c.index, group_name(component_group(layout, c.index)),
                                adjoint[c.index], 0.0, 0.0, "fd-failed"});
            ++rep.n_flagged;
            continue;
        }
        const double a = adjoint[c.index];
        const double f = c.value;
        dot += a * f;
        na += a * a;
        nf += f * f;
        const double denom = std::max(std::abs(a), std::abs(f));
        const double rel = (denom > 0.0) ? std::abs(a - f) / denom : 0.0;
        const bool significant = std::max(std::abs(a), std::abs(f)) > 1e-6 * amax;
        std::string flag;
        if (c.noisy) {
            flag = "noisy";
            ++rep.n_flagged;
        } else if (significant) {
            ++rep.n_significant;
            if (rel < rel_tol) {
                ++rep.n_within_tol;
            } else if (rel > rep.worst_rel_err) {
                rep.worst_rel_err = rel;
                rep.worst_component = c.index;
            }
        }
        rep.rows.push_back({c.index, group_name(component_group(layout, c.index)), a, f, rel,
                            flag.empty() ? (significant ? "" : "insignificant") : flag});
        ++rep.n_checked;
    }
    rep.cosine = (na > 0.0 && nf > 0.0) ? dot / std::sqrt(na * nf) : 1.0;
    const double frac = rep.n_significant > 0
                            ? static_cast<double>(rep.n_within_tol) / rep.n_significant
                            : 1.0;
    rep.pass = rep.cosine >= cosine_tol && frac >= 0.95;
    return rep;
}

template <int D>
GradCheckReport gradient_check(const Problem<D>& problem, const VecX& design, double beta,
                               double rel_tol = 1e-3, double cosine_tol = 0.999,
                               const FdOptions& opt = {},
                               std::vector<int> components = {}) {
    if (components.empty())
        components = active_components(problem.layout, problem.scene.topology_design);
    const VecX adjoint = problem.gradient(design, beta);
    const auto fd = finite_difference_gradient<D>(problem, design, beta, components, opt);
    return compare_gradients(adjoint, fd, problem.layout, rel_tol, cosine_tol);
}

/// CSV rows `component,group,adjoint,fd,rel_err,flag` plus a trailing summary
/// line with the cosine similarity.
std::string gradcheck_report_csv(const GradCheckReport& rep);

} // namespace magmpm

#endif
