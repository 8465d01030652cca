#ifndef MAGMPM_SCENE_HPP
#define MAGMPM_SCENE_HPP

#include "magmpm/common.hpp"
#include "magmpm/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace magmpm {

struct MaterialSpec {
    double G = 0.0;       // shear modulus (Pa)
    double K = 0.0;       // bulk modulus (Pa)
    double rho0 = 2000.0; // reference density (kg/m^3)
    double damping = 0.0; // mass-proportional damping (1/s)
    double mu0 = 4.0e-7 * M_PI; // vacuum permeability (T m/A)
    double Br_max = 0.0;  // remanence bound (T)
};

struct StimulusSpec {
    double B_max = 0.0; // applied-field bound (T)
    double f_min = 0.0; // Hz
    double f_max = 0.0; // Hz
    bool harmonic = false; // false: constant field, sine term dropped
};

struct BoundarySpec {
    enum class Kind { Friction, NoSlip, Attached };
    ShapeSpec shape;
    Kind kind = Kind::Friction;
    double mu_f = 0.0;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

struct TaskSpec {
    enum class Kind { TipHeight, TipLeftReach, ShapeMatch, LocomotionDistance };
    enum class Roi { RightBand, Centerline, All };
    enum class Average { Uniform, Mass };
    Kind kind = Kind::TipHeight;
    Roi roi = Roi::RightBand;
    std::string target_file;                     // shape-match polyline
    Eigen::Vector3d direction = Eigen::Vector3d::UnitX(); // locomotion
    Average average = Average::Uniform;
    std::string name;
};

struct RegionSpec {
    int counts[3] = {1, 1, 1};
    bool particle_wise = false;
};

/// Initial values for the optimizable quantities; recorded in every output.
struct DesignInit {
    double phi = 1.0;
    double mag_magnitude = 1.0;
    Eigen::Vector3d mag_orientation = Eigen::Vector3d::UnitX();
    double stim_magnitude = 0.5;
    double stim_frequency = 0.5;
    Eigen::Vector3d stim_orientation = Eigen::Vector3d::UnitY();
};

/// Per-scene optimizer overrides (all optional; defaults in OptConfig).
struct OptOverrides {
    std::optional<int> max_iters;
    std::optional<double> lr_topology, lr_magnitude, lr_orientation, lr_stimulus;
    std::optional<double> beta_start;
    std::optional<int> beta_period;
    std::optional<double> beta_cap;
    std::optional<double> convergence_threshold;
};

struct SceneSpec {
    int dimension = 2;
    double dx = 0.0;
    Eigen::Vector3d domain = Eigen::Vector3d::Zero();
    std::vector<ShapeSpec> body;
    int particles_per_cell_axis = 2;
    MaterialSpec material;
    Eigen::Vector3d gravity = Eigen::Vector3d::Zero();
    std::vector<BoundarySpec> boundaries;
    RegionSpec regions;
    StimulusSpec stimulus;
    double T = 0.0;
    double dt = 0.0;
    std::vector<TaskSpec> tasks;
    bool topology_design = false;
    double filter_radius_factor = 2.5; // times particle spacing
    DesignInit init;
    OptOverrides opt;
    std::string name;

    double particle_spacing() const { return dx / particles_per_cell_axis; }
    /// p-wave CFL limit dt_max = dx / sqrt((K + 4G/3)/rho0).
    double cfl_limit() const;
};

/// Reference (undeformed) particle data produced by lattice seeding.
template <int D>
struct ParticleSet {
    std::vector<Vec<D>> x0;
    std::vector<double> volume;
    std::vector<int> region;
    int n_regions = 0;
    Vec<D> bbox_lo = Vec<D>::Zero();
    Vec<D> bbox_hi = Vec<D>::Zero();
    int size() const { return static_cast<int>(x0.size()); }
};

/// Parse a JSON scene document. Throws ParseError / ValidationError.
SceneSpec parse_scene(const std::string& text);
SceneSpec load_scene_file(const std::string& path);

template <int D>
ParticleSet<D> seed_particles(const SceneSpec& spec);

/// Assign every particle the region cell of the scene's region grid that
/// contains its reference position. Throws on empty regions.
template <int D>
void assign_regions(ParticleSet<D>& particles, const SceneSpec& spec);

extern template ParticleSet<2> seed_particles<2>(const SceneSpec&);
extern template ParticleSet<3> seed_particles<3>(const SceneSpec&);
extern template void assign_regions<2>(ParticleSet<2>&, const SceneSpec&);
extern template void assign_regions<3>(ParticleSet<3>&, const SceneSpec&);

} // namespace magmpm

#endif
