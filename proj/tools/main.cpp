#include "magmpm/gradcheck.hpp"
#include "magmpm/io.hpp"
#include "magmpm/optimizer.hpp"
#include "magmpm/problem.hpp"
#include "magmpm/render.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace magmpm;

namespace {

std::string scene_dir_of(const std::string& scene_path) {
    return fs::path(scene_path).parent_path().string();
}

struct SimulateArgs {
    std::string scene, design, out;
    int task = 0;
    int snapshot_stride = 0; // 0 = ~20 frames
    int log_stride = 10;
    double beta = 0.0; // 0 = scene default
};

double default_beta(const SceneSpec& scene) {
    if (!scene.topology_design) return 1.0;
    return OptConfig::from_scene(scene).beta_cap;
}

template <int D>
int do_simulate(const SceneSpec& scene, const SimulateArgs& args) {
    auto problem = Problem<D>::build(scene, scene_dir_of(args.scene));
    VecX design = args.design.empty()
                      ? initial_design(scene, problem.layout)
                      : load_design_file(args.design, problem.layout);
    const double beta = args.beta > 0 ? args.beta : default_beta(scene);
    const auto mat = problem.map(design, beta);
    const int task = args.task;
    if (task < 0 || (task >= static_cast<int>(problem.tasks.size()) && !problem.tasks.empty())) {
        std::cerr << "error: --task " << task << " out of range (scene has "
                  << problem.tasks.size() << " tasks)\n";
        return 2;
    }
    auto stim = problem.tasks.empty() ? std::function<Vec<D>(double)>()
                                      : problem.stimulus_of(design, task);

    fs::create_directories(args.out);
    DiagnosticsLog diag(args.out + "/diagnostics.csv");
    int frame_stride = args.snapshot_stride;
    if (frame_stride <= 0) frame_stride = std::max(1, problem.es.n_steps / 20);
    int frame = 0;
    FrameHook<D> hook = [&](int, double t, const SimState<double, D>& s) {
        write_text_file(args.out + "/" + snapshot_filename(frame++, t),
                        snapshot_csv<D>(s, mat, problem.particles));
    };
    const int log_stride = std::max(1, args.log_stride);

    // frame hook also drives the diagnostics log
    FrameHook<D> combined = [&](int step, double t, const SimState<double, D>& s) {
        if (step % frame_stride == 0 || step == problem.es.n_steps) hook(step, t, s);
        if (step % log_stride == 0 || step == problem.es.n_steps) {
            const Vec<D> B = stim ? stim(t) : Vec<D>::Zero();
            const auto e = energy_report<D>(problem.es, s, mat, B);
            diag.row(step, t, e.kinetic, e.elastic, e.magnetic, e.mass);
        }
    };
    simulate<D>(problem.es, mat, stim, RecordMode::None, 0, combined, 1);
    std::cout << "simulated " << problem.es.n_steps << " steps, " << problem.particles.size()
              << " particles; outputs in " << args.out << "\n";
    return 0;
}

struct GradcheckArgs {
    std::string scene, design, out;
    double tol = 1e-3;
    double cosine_tol = 0.999;
};

template <int D>
int do_gradcheck(const SceneSpec& scene, const GradcheckArgs& args) {
    auto problem = Problem<D>::build(scene, scene_dir_of(args.scene));
    VecX design = args.design.empty()
                      ? initial_design(scene, problem.layout)
                      : load_design_file(args.design, problem.layout);
    const auto rep = gradient_check<D>(problem, design, default_beta(scene), args.tol,
                                       args.cosine_tol);
    fs::create_directories(args.out);
    write_text_file(args.out + "/gradcheck.csv", gradcheck_report_csv(rep));
    std::printf("gradient check: cosine=%.6f significant=%d within_tol=%d flagged=%d -> %s\n",
                rep.cosine, rep.n_significant, rep.n_within_tol, rep.n_flagged,
                rep.pass ? "PASS" : "FAIL");
    if (!rep.pass && rep.worst_component >= 0)
        std::printf("worst component %d (%s), rel_err=%.3g\n", rep.worst_component,
                    group_name(component_group(problem.layout, rep.worst_component)).c_str(),
                    rep.worst_rel_err);
    return rep.pass ? 0 : 1;
}

struct OptimizeArgs {
    std::string scene, mode, out, design;
    int max_iters = -1;
    int design_stride = 0;
};

template <int D>
int do_optimize(const SceneSpec& scene, const OptimizeArgs& args) {
    const OptMode mode = parse_opt_mode(args.mode);
    auto problem = Problem<D>::build(scene, scene_dir_of(args.scene));
    VecX design = args.design.empty()
                      ? initial_design(scene, problem.layout)
                      : load_design_file(args.design, problem.layout);
    OptConfig cfg = OptConfig::from_scene(scene);
    if (args.max_iters >= 0) cfg.max_iters = args.max_iters;
    cfg.design_snapshot_stride = args.design_stride;

    fs::create_directories(args.out);
    DesignSnapshotHook hook = [&](int iter, const VecX& d) {
        char name[64];
        std::snprintf(name, sizeof name, "design_iter_%05d.txt", iter);
        save_design_file(args.out + "/" + name, d, problem.layout);
    };

    const VecX initial = design;
    OptRecord rec = optimize<D>(problem, design, cfg, mode, hook);
    write_text_file(args.out + "/convergence.csv", convergence_log_csv(rec));
    save_design_file(args.out + "/design_final.txt", rec.final_design, problem.layout);

    // before/after renders of the settled states
    auto render_final = [&](const VecX& d, const std::string& tag) {
        const double beta = default_beta(scene);
        const auto mat = problem.map(d, beta);
        auto stim = problem.tasks.empty() ? std::function<Vec<D>(double)>()
                                          : problem.stimulus_of(d, 0);
        Trajectory<D> traj = simulate<D>(problem.es, mat, stim, RecordMode::None);
        write_text_file(args.out + "/" + tag + ".csv",
                        snapshot_csv<D>(traj.final_state, mat, problem.particles));
        Snapshot snap = read_snapshot_csv(args.out + "/" + tag + ".csv");
        std::optional<Eigen::Vector3d> B;
        if (stim) {
            Eigen::Vector3d b3 = Eigen::Vector3d::Zero();
            b3.head<D>() = stim(problem.es.T);
            B = b3;
        }
        render_snapshot_svg(snap, RenderSpec{}, args.out + "/" + tag, &scene, B);
    };
    render_final(initial, "state_initial_design");
    render_final(rec.final_design, "state_final_design");

    if (rec.aborted) {
        std::cerr << "optimization aborted at iterate " << rec.iterations << ": "
                  << rec.abort_reason << "\n";
        return 1;
    }
    std::printf("%s: %s after %d iterations, objective %.8g\n", opt_mode_name(mode).c_str(),
                rec.converged ? "converged" : "stopped at max iterations", rec.iterations,
                rec.final_objective);
    return 0;
}

struct RenderArgs {
    std::vector<std::string> snapshots;
    std::string out, scene, design;
    int task = 0;
    int canvas = 640;
    bool no_boundaries = false, no_arrow = false, no_contact = false;
};

int do_render(const RenderArgs& args) {
    std::optional<SceneSpec> scene;
    if (!args.scene.empty()) scene = load_scene_file(args.scene);
    RenderSpec spec;
    spec.canvas = args.canvas;
    spec.show_boundaries = !args.no_boundaries;
    spec.show_field_arrow = !args.no_arrow;
    spec.contact_shading = !args.no_contact;

    fs::create_directories(args.out);
    for (const auto& file : args.snapshots) {
        Snapshot snap = read_snapshot_csv(file);
        std::optional<Eigen::Vector3d> B;
        if (scene && !args.design.empty() && !scene->tasks.empty()) {
            // frame time is encoded in the file name: frame_XXXXXX_t<sec>.csv
            const std::string name = fs::path(file).stem().string();
            const auto tp = name.rfind("_t");
            if (tp != std::string::npos) {
                const double t = std::atof(name.substr(tp + 2).c_str());
                DesignLayout layout;
                layout.dim = scene->dimension;
                layout.n_tasks = static_cast<int>(scene->tasks.size());
                // particle counts are not needed for the stimulus slice when
                // the design file matches the scene
                if (scene->dimension == 2) {
                    auto problem = Problem<2>::build(*scene, scene_dir_of(args.scene));
                    VecX d = load_design_file(args.design, problem.layout);
                    Eigen::Vector3d b3 = Eigen::Vector3d::Zero();
                    b3.head<2>() = problem.stimulus_of(d, args.task)(t);
                    B = b3;
                } else {
                    auto problem = Problem<3>::build(*scene, scene_dir_of(args.scene));
                    VecX d = load_design_file(args.design, problem.layout);
                    Eigen::Vector3d b3 = problem.stimulus_of(d, args.task)(t);
                    B = b3;
                }
            }
        }
        const std::string base = args.out + "/" + fs::path(file).stem().string();
        render_snapshot_svg(snap, spec, base, scene ? &*scene : nullptr, B);
    }
    std::cout << "rendered " << args.snapshots.size() << " snapshot(s) into " << args.out
              << "\n";
    return 0;
}

SceneSpec load_scene_checked(const std::string& path) {
    if (!fs::exists(path))
        throw ParseError("scene file does not exist: " + path);
    SceneSpec scene = load_scene_file(path);
    if (scene.dt > scene.cfl_limit() * (1.0 + 1e-12))
        throw ValidationError("time.dt=" + std::to_string(scene.dt) +
                              " violates the CFL bound dx/sqrt((K+4G/3)/rho0)=" +
                              std::to_string(scene.cfl_limit()));
    return scene;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"magmpm: differentiable magneto-elastic MLS-MPM co-design"};
    app.require_subcommand(1);
    bool deterministic = true;
    app.add_flag("--deterministic,!--no-deterministic", deterministic,
                 "bit-reproducible execution (always on; flag kept for interface stability)");

    SimulateArgs sim;
    auto* csim = app.add_subcommand("simulate", "run a forward simulation, emit snapshots");
    csim->add_option("--scene", sim.scene, "scene file")->required();
    csim->add_option("--design", sim.design, "design file (defaults to the scene's initial design)");
    csim->add_option("--out", sim.out, "output directory")->required();
    csim->add_option("--task", sim.task, "task index whose stimulus drives the run");
    csim->add_option("--snapshot-stride", sim.snapshot_stride, "steps between snapshots (0=auto)");
    csim->add_option("--log-stride", sim.log_stride, "steps between diagnostics rows");
    csim->add_option("--beta", sim.beta, "projection sharpness override (0=scene default)");

    GradcheckArgs gc;
    auto* cgc = app.add_subcommand("gradcheck", "adjoint vs finite-difference gradient check");
    cgc->add_option("--scene", gc.scene, "scene file")->required();
    cgc->add_option("--design", gc.design, "design file");
    cgc->add_option("--out", gc.out, "output directory")->required();
    cgc->add_option("--tol", gc.tol, "componentwise relative tolerance");
    cgc->add_option("--cosine-tol", gc.cosine_tol, "cosine similarity threshold");

    OptimizeArgs opt;
    auto* copt = app.add_subcommand("optimize", "run the co-design loop");
    copt->add_option("--scene", opt.scene, "scene file")->required();
    copt->add_option("--mode", opt.mode,
                     "stimulus | material | codesign | topology-codesign")->required();
    copt->add_option("--out", opt.out, "output directory")->required();
    copt->add_option("--design", opt.design, "initial design file");
    copt->add_option("--max-iters", opt.max_iters, "iteration cap override");
    copt->add_option("--design-stride", opt.design_stride,
                     "iterations between design snapshots (0=off)");

    RenderArgs ren;
    auto* cren = app.add_subcommand("render", "render snapshot CSVs to SVG");
    cren->add_option("snapshots", ren.snapshots, "snapshot CSV files")->required();
    cren->add_option("--out", ren.out, "output directory")->required();
    cren->add_option("--scene", ren.scene, "scene file for boundaries and scaling");
    cren->add_option("--design", ren.design, "design file for the applied-field arrow");
    cren->add_option("--task", ren.task, "task index for the applied-field arrow");
    cren->add_option("--canvas", ren.canvas, "canvas long edge in pixels");
    cren->add_flag("--no-boundaries", ren.no_boundaries, "hide boundary shapes");
    cren->add_flag("--no-field-arrow", ren.no_arrow, "hide the applied-field arrow");
    cren->add_flag("--no-contact-shading", ren.no_contact, "disable contact shading");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (csim->parsed()) {
            const SceneSpec scene = load_scene_checked(sim.scene);
            return scene.dimension == 2 ? do_simulate<2>(scene, sim)
                                        : do_simulate<3>(scene, sim);
        }
        if (cgc->parsed()) {
            const SceneSpec scene = load_scene_checked(gc.scene);
            return scene.dimension == 2 ? do_gradcheck<2>(scene, gc)
                                        : do_gradcheck<3>(scene, gc);
        }
        if (copt->parsed()) {
            const SceneSpec scene = load_scene_checked(opt.scene);
            return scene.dimension == 2 ? do_optimize<2>(scene, opt)
                                        : do_optimize<3>(scene, opt);
        }
        if (cren->parsed()) return do_render(ren);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
