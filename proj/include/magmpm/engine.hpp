#ifndef MAGMPM_ENGINE_HPP
#define MAGMPM_ENGINE_HPP

#include "magmpm/common.hpp"
#include "magmpm/constitutive.hpp"
#include "magmpm/design.hpp"
#include "magmpm/scene.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace magmpm {

template <typename S, int D>
struct SimState {
    std::vector<VecT<S, D>> x, v;
    std::vector<MatT<S, D>> C, F;
    /// Primal initialization: F = identity.
    void resize(int n) {
        x.assign(n, VecT<S, D>::Zero());
        v.assign(n, VecT<S, D>::Zero());
        C.assign(n, MatT<S, D>::Zero());
        F.assign(n, MatT<S, D>::Identity());
    }
    /// Cotangent initialization: every field zero, including F.
    void resize_zero(int n) {
        resize(n);
        F.assign(n, MatT<S, D>::Zero());
    }
    int size() const { return static_cast<int>(x.size()); }
};

/// Fixed background mesh. Node i_a lives at i_a * dx; mom holds the raw
/// transferred momentum, vel the post-update velocity.
template <typename S, int D>
struct Grid {
    Eigen::Array<int, D, 1> n = Eigen::Array<int, D, 1>::Zero();
    std::vector<S> mass;
    std::vector<VecT<S, D>> mom, vel;

    void resize(const Eigen::Array<int, D, 1>& nodes) {
        n = nodes;
        int total = 1;
        for (int a = 0; a < D; ++a) total *= n[a];
        mass.assign(total, S(0));
        mom.assign(total, VecT<S, D>::Zero());
        vel.assign(total, VecT<S, D>::Zero());
    }
    void clear() {
        std::fill(mass.begin(), mass.end(), S(0));
        std::fill(mom.begin(), mom.end(), VecT<S, D>::Zero());
    }
    int total() const { return static_cast<int>(mass.size()); }
};

/// Scene lowered to a fixed dimension: grid extents, material constants,
/// reference particle data, and step counts.
template <int D>
struct EngineScene {
    double dx = 0, inv_dx = 0, dt = 0, T = 0;
    int n_steps = 0;
    Eigen::Array<int, D, 1> nodes = Eigen::Array<int, D, 1>::Zero();
    Vec<D> gravity = Vec<D>::Zero();
    double damping = 0;
    double mass_threshold = 0;
    double G = 0, K = 0, mu0 = 0;
    double cfl_dt_limit = 0;
    std::vector<BoundarySpec> boundaries;
    std::vector<Vec<D>> x0;
    std::vector<double> volume;
    int n_p = 0;

    static EngineScene compile(const SceneSpec& spec, const ParticleSet<D>& particles) {
        EngineScene es;
        es.dx = spec.dx;
        es.inv_dx = 1.0 / spec.dx;
        es.dt = spec.dt;
        es.T = spec.T;
        es.n_steps = static_cast<int>(std::ceil(spec.T / spec.dt - 1e-9));
        for (int a = 0; a < D; ++a)
            es.nodes[a] = static_cast<int>(std::floor(spec.domain[a] / spec.dx + 0.5)) + 1;
        es.gravity = spec.gravity.head<D>();
        es.damping = spec.material.damping;
        es.mass_threshold = 1e-10 * spec.material.rho0 * std::pow(spec.particle_spacing(), D);
        es.G = spec.material.G;
        es.K = spec.material.K;
        es.mu0 = spec.material.mu0;
        es.cfl_dt_limit = spec.cfl_limit();
        es.boundaries = spec.boundaries;
        es.x0 = particles.x0;
        es.volume = particles.volume;
        es.n_p = particles.size();
        return es;
    }

    SimState<double, D> initial_state() const {
        SimState<double, D> s;
        s.resize(n_p);
        for (int p = 0; p < n_p; ++p) s.x[p] = x0[p];
        return s;
    }

};

// Quadratic B-spline stencil over the 3^D nodes nearest a particle.
template <typename S, int D>
struct Stencil {
    Eigen::Array<int, D, 1> base;
    S w[3][D];
    S dw[3][D]; // d/d(fx); multiply by 1/dx for spatial gradients
};

template <typename S, int D>
Stencil<S, D> make_stencil(const VecT<S, D>& xp, const EngineScene<D>& es,
                           long particle, double time) {
    Stencil<S, D> st;
    for (int a = 0; a < D; ++a) {
        const double xr = real_part(xp[a]) * es.inv_dx;
        const int base = static_cast<int>(std::floor(xr - 0.5));
        if (base < 0 || base + 2 >= es.nodes[a])
            throw SimulationError("particle left the padded domain (axis " + std::to_string(a) +
                                      ", t=" + std::to_string(time) + ")",
                                  particle);
        st.base[a] = base;
        const S fx = xp[a] * S(es.inv_dx) - S(base);
        st.w[0][a] = S(0.5) * (S(1.5) - fx) * (S(1.5) - fx);
        st.w[1][a] = S(0.75) - (fx - S(1)) * (fx - S(1));
        st.w[2][a] = S(0.5) * (fx - S(0.5)) * (fx - S(0.5));
        st.dw[0][a] = fx - S(1.5);
        st.dw[1][a] = S(-2) * (fx - S(1));
        st.dw[2][a] = fx - S(0.5);
    }
    return st;
}

/// Visits every stencil node with (linear index, weight, d(weight)/dx, node
/// position minus particle position).
template <typename S, int D, typename F>
inline void foreach_stencil_node(const Stencil<S, D>& st, const EngineScene<D>& es,
                                 const VecT<S, D>& xp, F&& fn) {
    if constexpr (D == 2) {
        const int ny = es.nodes[1];
        for (int i = 0; i < 3; ++i) {
            const double nx0 = (st.base[0] + i) * es.dx;
            for (int j = 0; j < 3; ++j) {
                const S w = st.w[i][0] * st.w[j][1];
                VecT<S, D> gw(st.dw[i][0] * st.w[j][1] * S(es.inv_dx),
                              st.w[i][0] * st.dw[j][1] * S(es.inv_dx));
                VecT<S, D> dpos(S(nx0) - xp[0], S((st.base[1] + j) * es.dx) - xp[1]);
                const int node = (st.base[0] + i) * ny + (st.base[1] + j);
                fn(node, w, gw, dpos);
            }
        }
    } else {
        const int ny = es.nodes[1], nz = es.nodes[2];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) {
                    const S w = st.w[i][0] * st.w[j][1] * st.w[k][2];
                    VecT<S, D> gw(st.dw[i][0] * st.w[j][1] * st.w[k][2] * S(es.inv_dx),
                                  st.w[i][0] * st.dw[j][1] * st.w[k][2] * S(es.inv_dx),
                                  st.w[i][0] * st.w[j][1] * st.dw[k][2] * S(es.inv_dx));
                    VecT<S, D> dpos(S((st.base[0] + i) * es.dx) - xp[0],
                                    S((st.base[1] + j) * es.dx) - xp[1],
                                    S((st.base[2] + k) * es.dx) - xp[2]);
                    const int node = ((st.base[0] + i) * ny + (st.base[1] + j)) * nz +
                                     (st.base[2] + k);
                    fn(node, w, gw, dpos);
                }
    }
}

template <int D>
Vec<D> node_position(const EngineScene<D>& es, int linear) {
    Eigen::Array<int, D, 1> iv;
    if constexpr (D == 2) {
        iv[1] = linear % es.nodes[1];
        iv[0] = linear / es.nodes[1];
    } else {
        iv[2] = linear % es.nodes[2];
        const int rest = linear / es.nodes[2];
        iv[1] = rest % es.nodes[1];
        iv[0] = rest / es.nodes[1];
    }
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = iv[a] * es.dx;
    return p;
}

/// Velocity correction for one boundary at one node. Attached regions pin
/// the velocity; friction follows the Coulomb projection of the relative
/// velocity when the node approaches the surface.
template <typename S, int D>
VecT<S, D> apply_boundary_velocity(const BoundarySpec& b, const VecT<S, D>& v,
                                   const Vec<D>& xi, double dx) {
    const double sd = shape_sdf<D>(b.shape, xi);
    if (sd > 0.0) return v;
    const Vec<D> vb = b.velocity.template head<D>();
    const VecT<S, D> vbS = vb.template cast<S>();
    if (b.kind == BoundarySpec::Kind::Attached) return vbS;
    if (sd < -dx) return vbS; // strictly inside the solid
    const Vec<D> n = shape_normal<D>(b.shape, xi);
    const VecT<S, D> nS = n.template cast<S>();
    const VecT<S, D> vrel = v - vbS;
    const S vn = dot_nc<S, D>(nS, vrel);
    if (real_part(vn) >= 0.0) return v; // separating or sliding along
    if (b.kind == BoundarySpec::Kind::NoSlip) return vbS;
    const VecT<S, D> vt = vrel - vn * nS;
    using std::sqrt;
    const S tau2 = sqnorm_nc<S, D>(vt);
    if (real_part(tau2) <= 0.0) return vbS;
    const S tau = sqrt(tau2);
    const S slip = tau + b.mu_f * vn; // vn < 0, so this is |v_t| - mu |v_n|
    if (real_part(slip) <= 0.0) return vbS;
    return vbS + (slip / tau) * vt;
}

template <typename S, int D>
VecT<S, D> apply_all_boundaries(const EngineScene<D>& es, const VecT<S, D>& v,
                                const Vec<D>& xi) {
    VecT<S, D> out = v;
    for (const auto& b : es.boundaries)
        out = apply_boundary_velocity<S, D>(b, out, xi, es.dx);
    return out;
}

template <typename S, int D>
void p2g(const EngineScene<D>& es, const SimState<S, D>& s,
         const MappedField<S, D>& mat, const VecT<S, D>& Bapp, Grid<S, D>& g,
         double time = 0.0) {
    g.clear();
    const double k_stress = -4.0 * es.dt * es.inv_dx * es.inv_dx;
    for (int p = 0; p < es.n_p; ++p) {
        const auto st = make_stencil<S, D>(s.x[p], es, p, time);
        MatT<S, D> P = mat.stiff_scale[p] * pk1_elastic<S, D>(s.F[p], es.G, es.K, p) +
                       mat.mag_scale[p] * pk1_magnetic<S, D>(mat.remanence[p], Bapp, es.mu0);
        const MatT<S, D> A =
            mat.mass[p] * s.C[p] + (k_stress * es.volume[p]) * (P * s.F[p].transpose());
        const VecT<S, D> mv = mat.mass[p] * s.v[p];
        foreach_stencil_node<S, D>(st, es, s.x[p],
                                   [&](int node, const S& w, const VecT<S, D>&,
                                       const VecT<S, D>& dpos) {
                                       g.mass[node] += w * mat.mass[p];
                                       g.mom[node] += w * (mv + A * dpos);
                                   });
    }
}

template <typename S, int D>
void grid_update(const EngineScene<D>& es, Grid<S, D>& g, double /*t*/) {
    const double retain = 1.0 - es.damping * es.dt;
    const VecT<S, D> gdt = (es.gravity * es.dt).template cast<S>();
    const int total = g.total();
    for (int i = 0; i < total; ++i) {
        VecT<S, D> v;
        if (real_part(g.mass[i]) >= es.mass_threshold)
            v = (S(retain) / g.mass[i]) * g.mom[i] + gdt;
        else
            v = VecT<S, D>::Zero();
        if (!es.boundaries.empty())
            v = apply_all_boundaries<S, D>(es, v, node_position<D>(es, i));
        g.vel[i] = v;
    }
}

template <typename S, int D>
void g2p(const EngineScene<D>& es, const Grid<S, D>& g, SimState<S, D>& s,
         double time = 0.0) {
    const double k_affine = 4.0 * es.inv_dx * es.inv_dx;
    for (int p = 0; p < es.n_p; ++p) {
        const auto st = make_stencil<S, D>(s.x[p], es, p, time);
        VecT<S, D> vnew = VecT<S, D>::Zero();
        MatT<S, D> B = MatT<S, D>::Zero();
        foreach_stencil_node<S, D>(st, es, s.x[p],
                                   [&](int node, const S& w, const VecT<S, D>&,
                                       const VecT<S, D>& dpos) {
                                       vnew += w * g.vel[node];
                                       B += (w * g.vel[node]) * dpos.transpose();
                                   });
        const MatT<S, D> C = k_affine * B;
        s.v[p] = vnew;
        s.C[p] = C;
        s.x[p] += es.dt * vnew;
        s.F[p] = (MatT<S, D>::Identity() + es.dt * C) * s.F[p];
    }
}

template <typename S, int D>
void step(const EngineScene<D>& es, SimState<S, D>& s, Grid<S, D>& g,
          const MappedField<S, D>& mat, const VecT<S, D>& Bapp, double t) {
    p2g<S, D>(es, s, mat, Bapp, g, t);
    grid_update<S, D>(es, g, t);
    g2p<S, D>(es, g, s, t);
}

enum class RecordMode { None, Checkpoints, Full };

template <int D>
struct Trajectory {
    int n_steps = 0;
    double dt = 0;
    int checkpoint_stride = 1;
    std::vector<SimState<double, D>> checkpoints; // states at 0, K, 2K, ...
    SimState<double, D> final_state;
    std::vector<Vec<D>> mean_v;      // per step, uniform particle average
    std::vector<Vec<D>> mass_mean_v; // per step, mass-weighted average
    std::vector<double> kinetic;     // per step, post-update kinetic energy
    double total_mass = 0.0;
};

template <int D>
using FrameHook = std::function<void(int step, double t, const SimState<double, D>&)>;

/// Advance ceil(T/dt) steps. Deterministic: fixed particle/node order,
/// single-threaded.
template <int D>
Trajectory<D> simulate(const EngineScene<D>& es, const MappedField<double, D>& mat,
                       const std::function<Vec<D>(double)>& stimulus,
                       RecordMode mode = RecordMode::Checkpoints,
                       int checkpoint_stride = 0,
                       const FrameHook<D>& hook = nullptr, int hook_stride = 0) {
    if (es.dt > es.cfl_dt_limit * (1.0 + 1e-12))
        throw ValidationError("dt=" + std::to_string(es.dt) +
                              " exceeds the CFL limit dx/sqrt((K+4G/3)/rho0)=" +
                              std::to_string(es.cfl_dt_limit));
    Trajectory<D> traj;
    traj.n_steps = es.n_steps;
    traj.dt = es.dt;
    traj.total_mass = mat.total_mass_real();
    const int n = es.n_steps;
    int stride = checkpoint_stride;
    if (mode == RecordMode::Full) stride = 1;
    if (stride <= 0) stride = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(n)))));
    traj.checkpoint_stride = stride;

    SimState<double, D> s = es.initial_state();
    Grid<double, D> g;
    g.resize(es.nodes);

    traj.mean_v.reserve(n);
    traj.mass_mean_v.reserve(n);
    traj.kinetic.reserve(n);
    if (mode != RecordMode::None) traj.checkpoints.push_back(s);
    if (hook && hook_stride > 0) hook(0, 0.0, s);

    for (int k = 0; k < n; ++k) {
        const double t = k * es.dt;
        try {
            step<double, D>(es, s, g, mat, stimulus ? stimulus(t) : Vec<D>::Zero(), t);
        } catch (SimulationError& e) {
            throw SimulationError(std::string(e.what()) + " [step " + std::to_string(k) + "]",
                                  e.particle_index, k);
        }
        Vec<D> mv = Vec<D>::Zero(), mmv = Vec<D>::Zero();
        double ke = 0.0;
        for (int p = 0; p < es.n_p; ++p) {
            mv += s.v[p];
            mmv += mat.mass[p] * s.v[p];
            ke += 0.5 * mat.mass[p] * s.v[p].squaredNorm();
        }
        traj.mean_v.push_back(mv / es.n_p);
        traj.mass_mean_v.push_back(mmv / traj.total_mass);
        traj.kinetic.push_back(ke);
        if (mode != RecordMode::None && (k + 1) % stride == 0 && k + 1 < n)
            traj.checkpoints.push_back(s);
        if (hook && hook_stride > 0 && ((k + 1) % hook_stride == 0 || k + 1 == n))
            hook(k + 1, (k + 1) * es.dt, s);
    }
    traj.final_state = std::move(s);
    return traj;
}

/// Design-scaled energy totals, for diagnostics output.
template <int D>
struct EnergyReport {
    double kinetic = 0, elastic = 0, magnetic = 0, mass = 0;
};

template <int D>
EnergyReport<D> energy_report(const EngineScene<D>& es, const SimState<double, D>& s,
                              const MappedField<double, D>& mat, const Vec<D>& Bapp) {
    EnergyReport<D> r;
    for (int p = 0; p < es.n_p; ++p) {
        r.kinetic += 0.5 * mat.mass[p] * s.v[p].squaredNorm();
        r.elastic += es.volume[p] * mat.stiff_scale[p] *
                     elastic_energy<double, D>(s.F[p], es.G, es.K, p);
        r.magnetic += es.volume[p] * mat.mag_scale[p] *
                      magnetic_energy<double, D>(s.F[p], mat.remanence[p], Bapp, es.mu0);
        r.mass += mat.mass[p];
    }
    return r;
}

} // namespace magmpm

#endif
