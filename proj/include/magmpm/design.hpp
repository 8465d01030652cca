#ifndef MAGMPM_DESIGN_HPP
#define MAGMPM_DESIGN_HPP

#include "magmpm/common.hpp"
#include "magmpm/scene.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace magmpm {

// Small-value guards shared by the design maps.
constexpr double kVoidStiffness = 1e-3;  // epsilon in the stiffness interpolation
constexpr double kOrientDelta = 1e-8;    // delta in the orientation normalizations
constexpr int kPenalization = 3;         // qw
constexpr double kMassFloorFactor = 1e-3;

/// Flat layout of the design vector:
///   [ phi (n_p) | mag magnitude (n_m) | mag orientation (n_m*d)
///     | per task: Ba, f, eta (2+d) ].
struct DesignLayout {
    int n_p = 0, n_m = 0, n_tasks = 0, dim = 2;
    int size() const { return n_p + n_m * (1 + dim) + n_tasks * (2 + dim); }
    int phi_index(int p) const { return p; }
    int mag_index(int m) const { return n_p + m; }
    int dir_index(int m, int axis) const { return n_p + n_m + m * dim + axis; }
    int stim_base(int l) const { return n_p + n_m * (1 + dim) + l * (2 + dim); }
    int stim_mag_index(int l) const { return stim_base(l); }
    int stim_freq_index(int l) const { return stim_base(l) + 1; }
    int stim_dir_index(int l, int axis) const { return stim_base(l) + 2 + axis; }
};

enum class VariableGroup { Topology, MagMagnitude, MagOrientation, StimMagnitude, StimFrequency, StimOrientation };

VariableGroup component_group(const DesignLayout& layout, int index);
std::string group_name(VariableGroup g);

/// Precomputed distance filter over reference positions. Self-neighbor with
/// weight 1 is always present.
struct FilterWeights {
    std::vector<int> offsets;     // CSR, size n_p + 1
    std::vector<int> neighbor;
    std::vector<double> weight;   // 1 - dist/R
    std::vector<double> sum_weight;
    int n_p = 0;
};

template <int D>
FilterWeights precompute_filter(const ParticleSet<D>& particles, double radius);

extern template FilterWeights precompute_filter<2>(const ParticleSet<2>&, double);
extern template FilterWeights precompute_filter<3>(const ParticleSet<3>&, double);

void filter_topology(const FilterWeights& fw, const double* phi, double* phi_tilde);
/// Transpose of filter_topology: scatters cotangents back to raw phi.
void filter_topology_transpose(const FilterWeights& fw, const double* cot_tilde, double* cot_phi);

inline double heaviside_project(double v, double beta) {
    const double t0 = std::tanh(0.5 * beta);
    return (t0 + std::tanh(beta * (v - 0.5))) / (2.0 * t0);
}

inline double heaviside_project_deriv(double v, double beta) {
    const double t0 = std::tanh(0.5 * beta);
    const double th = std::tanh(beta * (v - 0.5));
    return beta * (1.0 - th * th) / (2.0 * t0);
}

/// Region remanence vector: Brmax * mBr * zeta / sqrt(|zeta|^2 + delta).
template <typename S, int D>
VecT<S, D> magnetization_from_design(const S& mag, const VecT<S, D>& zeta,
                                     double Br_max, double delta = kOrientDelta) {
    using std::sqrt;
    const S denom = sqrt(sqnorm_nc<S, D>(zeta) + S(delta));
    return (Br_max * mag / denom) * zeta;
}

/// Applied field at time t for one task's stimulus variables. Quasi-static
/// mode drops the harmonic factor.
template <typename S, int D>
VecT<S, D> stimulus_field(double t, const S& Ba, const S& f, const VecT<S, D>& eta,
                          const StimulusSpec& bounds, double delta = kOrientDelta) {
    using std::sqrt;
    using std::sin;
    const S denom = sqrt(sqnorm_nc<S, D>(eta) + S(delta));
    S amp = bounds.B_max * Ba;
    if (bounds.harmonic) {
        const S fbar = (bounds.f_max - bounds.f_min) * f + S(bounds.f_min);
        amp *= sin(2.0 * M_PI * fbar * t);
    }
    return (amp / denom) * eta;
}

/// Per-particle simulation parameters produced from the design vector.
template <typename S, int D>
struct MappedField {
    std::vector<S> phi_bar;
    std::vector<S> stiff_scale;
    std::vector<S> mag_scale;
    std::vector<S> mass;
    std::vector<VecT<S, D>> remanence;
    double total_mass_real() const {
        double m = 0.0;
        for (const auto& v : mass) m += real_part(v);
        return m;
    }
};

/// Composes filter -> projection -> stiffness/magnetic/mass scalings and the
/// region remanence map. With topology design disabled, phi_bar == 1.
template <typename S, int D>
MappedField<S, D> map_design(const Eigen::Matrix<S, Eigen::Dynamic, 1>& design,
                             const DesignLayout& layout,
                             const ParticleSet<D>& particles,
                             const FilterWeights& fw, double beta,
                             const MaterialSpec& material, bool topology_enabled) {
    const int n_p = particles.size();
    MappedField<S, D> out;
    out.phi_bar.assign(n_p, S(1));
    out.stiff_scale.assign(n_p, S(1));
    out.mag_scale.assign(n_p, S(1));
    out.mass.resize(n_p);
    out.remanence.resize(n_p);

    if (topology_enabled) {
        // filter then Heaviside projection, done on the scalar type S
        const double t0 = std::tanh(0.5 * beta);
        for (int p = 0; p < n_p; ++p) {
            S acc = S(0);
            for (int k = fw.offsets[p]; k < fw.offsets[p + 1]; ++k)
                acc += fw.weight[k] * design[layout.phi_index(fw.neighbor[k])];
            S phit = acc / S(fw.sum_weight[p]);
            using std::tanh;
            S phib = (S(t0) + tanh(beta * (phit - S(0.5)))) / S(2.0 * t0);
            out.phi_bar[p] = phib;
            S pq = phib * phib * phib; // qw = 3
            out.stiff_scale[p] = S(kVoidStiffness) + (1.0 - kVoidStiffness) * pq;
            out.mag_scale[p] = pq;
        }
    }

    std::vector<VecT<S, D>> region_Br(particles.n_regions);
    for (int m = 0; m < particles.n_regions; ++m) {
        VecT<S, D> zeta;
        for (int a = 0; a < D; ++a) zeta[a] = design[layout.dir_index(m, a)];
        region_Br[m] = magnetization_from_design<S, D>(design[layout.mag_index(m)], zeta,
                                                       material.Br_max);
    }

    for (int p = 0; p < n_p; ++p) {
        const double full = material.rho0 * particles.volume[p];
        if (topology_enabled) {
            S m = out.phi_bar[p] * full;
            const double floor_mass = kMassFloorFactor * full;
            if (real_part(m) < floor_mass) m = S(floor_mass);
            out.mass[p] = m;
        } else {
            out.mass[p] = S(full);
        }
        out.remanence[p] = region_Br[particles.region[p]];
    }
    return out;
}

/// Cotangents of the mapped per-particle fields, accumulated by the adjoint.
template <int D>
struct MappedCotangents {
    std::vector<double> mass, stiff_scale, mag_scale;
    std::vector<Vec<D>> remanence;
    void resize(int n_p) {
        mass.assign(n_p, 0.0);
        stiff_scale.assign(n_p, 0.0);
        mag_scale.assign(n_p, 0.0);
        remanence.assign(n_p, Vec<D>::Zero());
    }
};

/// Chain rule from a cotangent of B_applied(t) into one task's stimulus
/// design variables. grad points at the (2+d)-long slice for the task.
template <int D>
void accumulate_stimulus_gradient(const Vec<D>& Bapp_cot, double t,
                                  double Ba, double f, const Vec<D>& eta,
                                  const StimulusSpec& bounds, double* grad,
                                  double delta = kOrientDelta) {
    const double n2 = eta.squaredNorm() + delta;
    const double denom = std::sqrt(n2);
    const Vec<D> b = eta / denom;

    double sine = 1.0, dsine_df = 0.0;
    if (bounds.harmonic) {
        const double fbar = (bounds.f_max - bounds.f_min) * f + bounds.f_min;
        const double phase = 2.0 * M_PI * fbar * t;
        sine = std::sin(phase);
        dsine_df = std::cos(phase) * 2.0 * M_PI * (bounds.f_max - bounds.f_min) * t;
    }
    const double bdot = b.dot(Bapp_cot);
    grad[0] += bounds.B_max * sine * bdot;                 // d/dBa
    grad[1] += bounds.B_max * Ba * dsine_df * bdot;        // d/df
    const double amp = bounds.B_max * Ba * sine;
    // d(eta_i/denom)/deta_j = delta_ij/denom - eta_i eta_j/denom^3
    const double edot = eta.dot(Bapp_cot);
    for (int a = 0; a < D; ++a)
        grad[2 + a] += amp * (Bapp_cot[a] / denom - eta[a] * edot / (denom * n2));
}

/// Exact chain rule from mapped-field cotangents back to the raw design
/// vector (topology, magnetization). Stimulus entries are accumulated
/// separately per step via accumulate_stimulus_gradient.
template <int D>
void backmap_gradients(const MappedCotangents<D>& mcot, const VecX& design,
                       const DesignLayout& layout, const ParticleSet<D>& particles,
                       const FilterWeights& fw, double beta,
                       const MaterialSpec& material, bool topology_enabled,
                       VecX& grad) {
    const int n_p = particles.size();

    if (topology_enabled) {
        // recompute phi_tilde, phi_bar for the derivative factors
        std::vector<double> phi(n_p), phit(n_p), cot_tilde(n_p);
        for (int p = 0; p < n_p; ++p) phi[p] = design[layout.phi_index(p)];
        filter_topology(fw, phi.data(), phit.data());
        for (int p = 0; p < n_p; ++p) {
            const double pb = heaviside_project(phit[p], beta);
            double cb = mcot.stiff_scale[p] * (1.0 - kVoidStiffness) * 3.0 * pb * pb +
                        mcot.mag_scale[p] * 3.0 * pb * pb;
            const double full = material.rho0 * particles.volume[p];
            if (pb * full >= kMassFloorFactor * full)
                cb += mcot.mass[p] * full;
            cot_tilde[p] = cb * heaviside_project_deriv(phit[p], beta);
        }
        std::vector<double> cot_phi(n_p, 0.0);
        filter_topology_transpose(fw, cot_tilde.data(), cot_phi.data());
        for (int p = 0; p < n_p; ++p) grad[layout.phi_index(p)] += cot_phi[p];
    }

    std::vector<Vec<D>> region_cot(particles.n_regions, Vec<D>::Zero());
    for (int p = 0; p < n_p; ++p)
        region_cot[particles.region[p]] += mcot.remanence[p];

    for (int m = 0; m < particles.n_regions; ++m) {
        const double mag = design[layout.mag_index(m)];
        Vec<D> zeta;
        for (int a = 0; a < D; ++a) zeta[a] = design[layout.dir_index(m, a)];
        const double n2 = zeta.squaredNorm() + kOrientDelta;
        const double denom = std::sqrt(n2);
        const Vec<D> bhat = zeta / denom;
        const Vec<D>& cot = region_cot[m];
        grad[layout.mag_index(m)] += material.Br_max * bhat.dot(cot);
        const double zdot = zeta.dot(cot);
        for (int a = 0; a < D; ++a)
            grad[layout.dir_index(m, a)] +=
                material.Br_max * mag * (cot[a] / denom - zeta[a] * zdot / (denom * n2));
    }
}

/// Initial design per the scene's configured defaults.
VecX initial_design(const SceneSpec& scene, const DesignLayout& layout);

/// Componentwise projection onto the box bounds.
void clamp_design(VecX& design, const DesignLayout& layout);

/// Labeled-section text format; round-trips bit-exactly.
std::string serialize_design(const VecX& design, const DesignLayout& layout);
VecX parse_design(const std::string& text, const DesignLayout& layout);
void save_design_file(const std::string& path, const VecX& design, const DesignLayout& layout);
VecX load_design_file(const std::string& path, const DesignLayout& layout);

} // namespace magmpm

#endif
