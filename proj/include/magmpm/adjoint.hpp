#ifndef MAGMPM_ADJOINT_HPP
#define MAGMPM_ADJOINT_HPP

#include "magmpm/common.hpp"
#include "magmpm/engine.hpp"
#include "magmpm/objectives.hpp"

#include <cstring>
#include <vector>

namespace magmpm {

// Reverse-mode sweep through the recorded MLS-MPM steps. Grid-velocity
// overwrites (attached, inside-solid, non-slip, full-stick) contribute zero
// upstream gradient; the sliding-friction branch is differentiated exactly
// with subgradient 0 at the max(0,.) kink.

/// VJP of apply_boundary_velocity at input velocity v_in.
template <int D>
Vec<D> boundary_velocity_vjp(const BoundarySpec& b, const Vec<D>& v_in, const Vec<D>& xi,
                             double dx, const Vec<D>& cot) {
    const double sd = shape_sdf<D>(b.shape, xi);
    if (sd > 0.0) return cot;
    if (b.kind == BoundarySpec::Kind::Attached) return Vec<D>::Zero();
    if (sd < -dx) return Vec<D>::Zero();
    const Vec<D> n = shape_normal<D>(b.shape, xi);
    const Vec<D> vb = b.velocity.template head<D>();
    const Vec<D> vrel = v_in - vb;
    const double vn = n.dot(vrel);
    if (vn >= 0.0) return cot;
    if (b.kind == BoundarySpec::Kind::NoSlip) return Vec<D>::Zero();
    const Vec<D> vt = vrel - vn * n;
    const double tau = vt.norm();
    if (tau <= 0.0) return Vec<D>::Zero();
    const double slip = tau + b.mu_f * vn;
    if (slip <= 0.0) return Vec<D>::Zero();
    const Vec<D> that = vt / tau;
    const double tc = that.dot(cot);
    Vec<D> out = (that + b.mu_f * n) * tc;
    out += (slip / tau) * (cot - n * (n.dot(cot)) - that * tc);
    return out;
}

/// VJP of g2p: consumes cotangents of (v', C', x', F') held in `cot`, leaves
/// in `cot` the partial cotangents of (x, F) with v, C zeroed, and scatters
/// the grid-velocity cotangents into vel_bar.
template <int D>
void g2p_vjp(const EngineScene<D>& es, const SimState<double, D>& Sn,
             const Grid<double, D>& grid, SimState<double, D>& cot,
             std::vector<Vec<D>>& vel_bar) {
    const double k_affine = 4.0 * es.inv_dx * es.inv_dx;
    const double dt = es.dt;
    for (int p = 0; p < es.n_p; ++p) {
        const auto st = make_stencil<double, D>(Sn.x[p], es, p, 0.0);
        Mat<D> Cnew = Mat<D>::Zero();
        foreach_stencil_node<double, D>(
            st, es, Sn.x[p], [&](int node, double w, const Vec<D>&, const Vec<D>& dpos) {
                Cnew += (w * grid.vel[node]) * dpos.transpose();
            });
        Cnew *= k_affine;

        const Vec<D> vbar_tot = cot.v[p] + dt * cot.x[p];
        const Mat<D> Cbar_tot = cot.C[p] + dt * (cot.F[p] * Sn.F[p].transpose());
        const Mat<D> Fbar_new = (Mat<D>::Identity() + dt * Cnew).transpose() * cot.F[p];

        Vec<D> xbar = cot.x[p];
        foreach_stencil_node<double, D>(
            st, es, Sn.x[p], [&](int node, double w, const Vec<D>& gw, const Vec<D>& dpos) {
                const Vec<D>& vi = grid.vel[node];
                const Vec<D> cd = Cbar_tot * dpos;
                vel_bar[node] += w * vbar_tot + (k_affine * w) * cd;
                xbar += gw * (vi.dot(vbar_tot) + k_affine * vi.dot(cd));
                xbar -= (k_affine * w) * (Cbar_tot.transpose() * vi);
            });

        cot.x[p] = xbar;
        cot.F[p] = Fbar_new;
        cot.v[p].setZero();
        cot.C[p].setZero();
    }
}

/// VJP of grid_update: consumes vel_bar, produces mom_bar and mass_bar.
/// Overwritten velocities (resets, thresholded nodes) propagate nothing.
template <int D>
void grid_update_vjp(const EngineScene<D>& es, const Grid<double, D>& grid,
                     const std::vector<Vec<D>>& vel_bar, std::vector<Vec<D>>& mom_bar,
                     std::vector<double>& mass_bar) {
    const double retain = 1.0 - es.damping * es.dt;
    const int total = grid.total();
    const int nb = static_cast<int>(es.boundaries.size());
    std::vector<Vec<D>> chain(nb + 1);
    for (int i = 0; i < total; ++i) {
        if (grid.mass[i] < es.mass_threshold) {
            mom_bar[i].setZero();
            mass_bar[i] = 0.0;
            continue;
        }
        const Vec<D> xi = node_position<D>(es, i);
        const Vec<D> v_pre = grid.mom[i] / grid.mass[i];
        chain[0] = retain * v_pre + es.dt * es.gravity;
        for (int b = 0; b < nb; ++b)
            chain[b + 1] =
                apply_boundary_velocity<double, D>(es.boundaries[b], chain[b], xi, es.dx);
        Vec<D> vbar = vel_bar[i];
        for (int b = nb - 1; b >= 0; --b)
            vbar = boundary_velocity_vjp<D>(es.boundaries[b], chain[b], xi, es.dx, vbar);
        const Vec<D> vbar_pre = retain * vbar;
        mom_bar[i] = vbar_pre / grid.mass[i];
        mass_bar[i] = -v_pre.dot(vbar_pre) / grid.mass[i];
    }
}

/// VJP of p2g: consumes grid mass/momentum cotangents, accumulates particle
/// state cotangents into `cot` and design-field cotangents into `mcot` and
/// Bapp_bar.
template <int D>
void p2g_vjp(const EngineScene<D>& es, const SimState<double, D>& Sn,
             const MappedField<double, D>& mat, const Vec<D>& Bapp,
             const std::vector<Vec<D>>& mom_bar, const std::vector<double>& mass_bar,
             SimState<double, D>& cot, MappedCotangents<D>& mcot, Vec<D>& Bapp_bar) {
    const double k_stress = -4.0 * es.dt * es.inv_dx * es.inv_dx;
    for (int p = 0; p < es.n_p; ++p) {
        const auto st = make_stencil<double, D>(Sn.x[p], es, p, 0.0);
        const Mat<D> Pe = pk1_elastic<double, D>(Sn.F[p], es.G, es.K, p);
        const Mat<D> Pm = pk1_magnetic<double, D>(mat.remanence[p], Bapp, es.mu0);
        const Mat<D> P = mat.stiff_scale[p] * Pe + mat.mag_scale[p] * Pm;
        const double c = k_stress * es.volume[p];
        const Mat<D> A = mat.mass[p] * Sn.C[p] + c * (P * Sn.F[p].transpose());
        const Vec<D> mv = mat.mass[p] * Sn.v[p];

        Vec<D> M1 = Vec<D>::Zero();
        Mat<D> M2 = Mat<D>::Zero();
        double s1 = 0.0;
        Vec<D> xg = Vec<D>::Zero();
        foreach_stencil_node<double, D>(
            st, es, Sn.x[p], [&](int node, double w, const Vec<D>& gw, const Vec<D>& dpos) {
                const Vec<D>& mb = mom_bar[node];
                M1 += w * mb;
                M2 += (w * mb) * dpos.transpose();
                s1 += w * mass_bar[node];
                xg += gw * ((mv + A * dpos).dot(mb) + mat.mass[p] * mass_bar[node]);
            });

        cot.v[p] += mat.mass[p] * M1;
        cot.C[p] += mat.mass[p] * M2;
        cot.x[p] += xg - A.transpose() * M1;
        mcot.mass[p] += Sn.v[p].dot(M1) + frob_nc<double, D>(Sn.C[p], M2) + s1;

        const Mat<D> Pbar = c * (M2 * Sn.F[p]);
        cot.F[p] += c * (M2.transpose() * P);
        mcot.stiff_scale[p] += frob_nc<double, D>(Pbar, Pe);
        mcot.mag_scale[p] += frob_nc<double, D>(Pbar, Pm);
        cot.F[p] += mat.stiff_scale[p] * pk1_elastic_dir_deriv<D>(Sn.F[p], es.G, es.K, Pbar);
        const double magfac = -mat.mag_scale[p] / es.mu0;
        mcot.remanence[p] += magfac * (Pbar.transpose() * Bapp);
        Bapp_bar += magfac * (Pbar * mat.remanence[p]);
    }
}

template <int D>
struct StepAdjointWorkspace {
    Grid<double, D> grid;
    std::vector<Vec<D>> vel_bar;
    std::vector<Vec<D>> mom_bar;
    std::vector<double> mass_bar;
    void resize(const EngineScene<D>& es) {
        grid.resize(es.nodes);
        vel_bar.assign(grid.total(), Vec<D>::Zero());
        mom_bar.assign(grid.total(), Vec<D>::Zero());
        mass_bar.assign(grid.total(), 0.0);
    }
};

/// One reverse step: consumes cotangents of the post-step state, emits
/// cotangents of the pre-step state, accumulating design-field cotangents.
template <int D>
void step_adjoint(const EngineScene<D>& es, const SimState<double, D>& Sn,
                  const MappedField<double, D>& mat, const Vec<D>& Bapp, double t,
                  SimState<double, D>& cot, MappedCotangents<D>& mcot, Vec<D>& Bapp_bar,
                  StepAdjointWorkspace<D>& ws) {
    p2g<double, D>(es, Sn, mat, Bapp, ws.grid, t);
    grid_update<double, D>(es, ws.grid, t);
    std::fill(ws.vel_bar.begin(), ws.vel_bar.end(), Vec<D>::Zero());
    g2p_vjp<D>(es, Sn, ws.grid, cot, ws.vel_bar);
    grid_update_vjp<D>(es, ws.grid, ws.vel_bar, ws.mom_bar, ws.mass_bar);
    p2g_vjp<D>(es, Sn, mat, Bapp, ws.mom_bar, ws.mass_bar, cot, mcot, Bapp_bar);
}

template <int D>
bool states_bit_identical(const SimState<double, D>& a, const SimState<double, D>& b) {
    auto eq = [](const auto& u, const auto& v) {
        return u.size() == v.size() &&
               std::memcmp(u.data(), v.data(), u.size() * sizeof(u[0])) == 0;
    };
    return eq(a.x, b.x) && eq(a.v, b.v) && eq(a.C, b.C) && eq(a.F, b.F);
}

/// Full reverse sweep for one task. Returns the gradient of the task loss
/// with respect to the complete design vector. Within each checkpoint
/// segment the forward states are recomputed, verified bit-exact against the
/// next checkpoint, then consumed in reverse.
template <int D>
VecX backward_task(const EngineScene<D>& es, const ParticleSet<D>& particles,
                   const MappedField<double, D>& mat, const DesignLayout& layout,
                   const VecX& design, int task_index, const FilterWeights& fw, double beta,
                   const MaterialSpec& material, bool topology_enabled,
                   const StimulusSpec& stim, const Trajectory<D>& traj,
                   const AdjointSeeds<D>& seeds) {
    const int n = traj.n_steps;
    const int stride = traj.checkpoint_stride;
    const int n_p = es.n_p;

    VecX grad = VecX::Zero(layout.size());
    MappedCotangents<D> mcot;
    mcot.resize(n_p);

    SimState<double, D> cot;
    cot.resize_zero(n_p);
    for (int p = 0; p < n_p; ++p) cot.x[p] = seeds.x_final[p];

    std::vector<Vec<D>> v_coeff = seeds.v_step_coeff;
    if (seeds.per_step_velocity && seeds.mass_averaged) {
        for (int p = 0; p < n_p; ++p)
            v_coeff[p] = -seeds.direction * seeds.dt * mat.mass[p] / seeds.total_mass;
    }

    const double Ba = design[layout.stim_mag_index(task_index)];
    const double f = design[layout.stim_freq_index(task_index)];
    Vec<D> eta;
    for (int a = 0; a < D; ++a) eta[a] = design[layout.stim_dir_index(task_index, a)];
    auto stimulus = [&](double t) { return stimulus_field<double, D>(t, Ba, f, eta, stim); };
    double* stim_grad = grad.data() + layout.stim_base(task_index);

    StepAdjointWorkspace<D> ws;
    ws.resize(es);
    Grid<double, D> fwd_grid;
    fwd_grid.resize(es.nodes);

    std::vector<SimState<double, D>> buffer; // states seg_begin .. seg_end inclusive
    const int n_segments = (n + stride - 1) / stride;

    for (int seg = n_segments - 1; seg >= 0; --seg) {
        const int seg_begin = seg * stride;
        const int seg_end = std::min(n, seg_begin + stride);
        buffer.clear();
        buffer.push_back(traj.checkpoints.at(seg));
        for (int k = seg_begin; k < seg_end; ++k) {
            SimState<double, D> s = buffer.back();
            step<double, D>(es, s, fwd_grid, mat, stimulus(k * es.dt), k * es.dt);
            buffer.push_back(std::move(s));
        }
        const SimState<double, D>& expected =
            (seg == n_segments - 1) ? traj.final_state : traj.checkpoints.at(seg + 1);
        if (!states_bit_identical<D>(buffer.back(), expected))
            throw SimulationError(
                "checkpoint replay mismatch: forward pass is not deterministic (segment " +
                    std::to_string(seg) + ")",
                -1, seg_begin);

        for (int k = seg_end - 1; k >= seg_begin; --k) {
            const SimState<double, D>& S_next = buffer[k + 1 - seg_begin];
            if (seeds.per_step_velocity) {
                for (int p = 0; p < n_p; ++p) cot.v[p] += v_coeff[p];
                if (seeds.mass_averaged) {
                    const Vec<D>& vb = traj.mass_mean_v[k];
                    const double c = -seeds.dt / seeds.total_mass;
                    for (int p = 0; p < n_p; ++p)
                        mcot.mass[p] += c * seeds.direction.dot(S_next.v[p] - vb);
                }
            }
            Vec<D> Bapp_bar = Vec<D>::Zero();
            step_adjoint<D>(es, buffer[k - seg_begin], mat, stimulus(k * es.dt), k * es.dt,
                            cot, mcot, Bapp_bar, ws);
            accumulate_stimulus_gradient<D>(Bapp_bar, k * es.dt, Ba, f, eta, stim, stim_grad);

            if ((k & 255) == 0) {
                double probe = 0.0;
                for (int p = 0; p < n_p; ++p) probe += cot.x[p].sum() + cot.F[p].sum();
                if (!std::isfinite(probe))
                    throw SimulationError("NaN cotangent during backward sweep", -1, k);
            }
        }
    }

    backmap_gradients<D>(mcot, design, layout, particles, fw, beta, material,
                         topology_enabled, grad);
    return grad;
}

} // namespace magmpm

#endif
