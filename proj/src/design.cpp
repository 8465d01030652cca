#include "magmpm/design.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace magmpm {

VariableGroup component_group(const DesignLayout& layout, int index) {
    if (index < layout.n_p) return VariableGroup::Topology;
    index -= layout.n_p;
    if (index < layout.n_m) return VariableGroup::MagMagnitude;
    index -= layout.n_m;
    if (index < layout.n_m * layout.dim) return VariableGroup::MagOrientation;
    index -= layout.n_m * layout.dim;
    const int within = index % (2 + layout.dim);
    if (within == 0) return VariableGroup::StimMagnitude;
    if (within == 1) return VariableGroup::StimFrequency;
    return VariableGroup::StimOrientation;
}

std::string group_name(VariableGroup g) {
    switch (g) {
    case VariableGroup::Topology: return "topology";
    case VariableGroup::MagMagnitude: return "mag_magnitude";
    case VariableGroup::MagOrientation: return "mag_orientation";
    case VariableGroup::StimMagnitude: return "stim_magnitude";
    case VariableGroup::StimFrequency: return "stim_frequency";
    case VariableGroup::StimOrientation: return "stim_orientation";
    }
    return "unknown";
}

template <int D>
FilterWeights precompute_filter(const ParticleSet<D>& particles, double radius) {
    if (!(radius > 0.0))
        throw ValidationError("filter radius must be positive");
    const int n_p = particles.size();
    FilterWeights fw;
    fw.n_p = n_p;
    fw.offsets.assign(n_p + 1, 0);

    // uniform-grid binning over reference positions
    Vec<D> lo = particles.bbox_lo.array() - radius;
    Vec<D> hi = particles.bbox_hi.array() + radius;
    Eigen::Array<int, D, 1> nb;
    for (int a = 0; a < D; ++a)
        nb[a] = std::max(1, static_cast<int>((hi[a] - lo[a]) / radius));
    auto bin_of = [&](const Vec<D>& x) {
        Eigen::Array<int, D, 1> c;
        for (int a = 0; a < D; ++a)
            c[a] = std::clamp(static_cast<int>((x[a] - lo[a]) / radius), 0, nb[a] - 1);
        int idx = 0;
        for (int a = 0; a < D; ++a) idx = idx * nb[a] + c[a];
        return idx;
    };
    int total_bins = 1;
    for (int a = 0; a < D; ++a) total_bins *= nb[a];
    std::vector<std::vector<int>> bins(total_bins);
    for (int p = 0; p < n_p; ++p) bins[bin_of(particles.x0[p])].push_back(p);

    std::vector<int> neigh;
    std::vector<double> wts;
    for (int p = 0; p < n_p; ++p) {
        Eigen::Array<int, D, 1> c;
        for (int a = 0; a < D; ++a)
            c[a] = std::clamp(static_cast<int>((particles.x0[p][a] - lo[a]) / radius), 0, nb[a] - 1);
        neigh.clear();
        wts.clear();
        Eigen::Array<int, D, 1> it;
        for (int a = 0; a < D; ++a) it[a] = std::max(0, c[a] - 1);
        Eigen::Array<int, D, 1> it_lo = it;
        while (true) {
            int idx = 0;
            for (int a = 0; a < D; ++a) idx = idx * nb[a] + it[a];
            for (int q : bins[idx]) {
                const double dist = (particles.x0[q] - particles.x0[p]).norm();
                if (dist < radius) {
                    neigh.push_back(q);
                    wts.push_back(1.0 - dist / radius);
                }
            }
            int a = 0;
            for (; a < D; ++a) {
                if (++it[a] <= std::min(nb[a] - 1, c[a] + 1)) break;
                it[a] = it_lo[a];
            }
            if (a == D) break;
        }
        double sw = 0.0;
        for (double w : wts) sw += w;
        fw.offsets[p + 1] = fw.offsets[p] + static_cast<int>(neigh.size());
        fw.neighbor.insert(fw.neighbor.end(), neigh.begin(), neigh.end());
        fw.weight.insert(fw.weight.end(), wts.begin(), wts.end());
        fw.sum_weight.push_back(sw);
    }
    return fw;
}

template FilterWeights precompute_filter<2>(const ParticleSet<2>&, double);
template FilterWeights precompute_filter<3>(const ParticleSet<3>&, double);

void filter_topology(const FilterWeights& fw, const double* phi, double* phi_tilde) {
    for (int p = 0; p < fw.n_p; ++p) {
        double acc = 0.0;
        for (int k = fw.offsets[p]; k < fw.offsets[p + 1]; ++k)
            acc += fw.weight[k] * phi[fw.neighbor[k]];
        phi_tilde[p] = acc / fw.sum_weight[p];
    }
}

void filter_topology_transpose(const FilterWeights& fw, const double* cot_tilde, double* cot_phi) {
    for (int p = 0; p < fw.n_p; ++p) {
        const double scaled = cot_tilde[p] / fw.sum_weight[p];
        for (int k = fw.offsets[p]; k < fw.offsets[p + 1]; ++k)
            cot_phi[fw.neighbor[k]] += fw.weight[k] * scaled;
    }
}

VecX initial_design(const SceneSpec& scene, const DesignLayout& layout) {
    VecX x(layout.size());
    for (int p = 0; p < layout.n_p; ++p) x[layout.phi_index(p)] = scene.init.phi;
    for (int m = 0; m < layout.n_m; ++m) {
        x[layout.mag_index(m)] = scene.init.mag_magnitude;
        for (int a = 0; a < layout.dim; ++a)
            x[layout.dir_index(m, a)] = scene.init.mag_orientation[a];
    }
    for (int l = 0; l < layout.n_tasks; ++l) {
        x[layout.stim_mag_index(l)] = scene.init.stim_magnitude;
        x[layout.stim_freq_index(l)] = scene.init.stim_frequency;
        for (int a = 0; a < layout.dim; ++a)
            x[layout.stim_dir_index(l, a)] = scene.init.stim_orientation[a];
    }
    clamp_design(x, layout);
    return x;
}

void clamp_design(VecX& design, const DesignLayout& layout) {
    for (int i = 0; i < layout.size(); ++i) {
        const VariableGroup g = component_group(layout, i);
        const bool orient = (g == VariableGroup::MagOrientation || g == VariableGroup::StimOrientation);
        const double lo = orient ? -1.0 : 0.0;
        design[i] = std::clamp(design[i], lo, 1.0);
    }
}

namespace {

void append_values(std::string& out, const VecX& design, int begin, int count, int per_line) {
    char buf[32];
    for (int i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", design[begin + i]);
        out += buf;
        out += ((i + 1) % per_line == 0) ? '\n' : ' ';
    }
    if (count % per_line != 0) out += '\n';
}

} // namespace

std::string serialize_design(const VecX& design, const DesignLayout& layout) {
    std::string out;
    out += "magmpm-design 1\n";
    out += "dim " + std::to_string(layout.dim) + "\n";
    out += "phi " + std::to_string(layout.n_p) + "\n";
    append_values(out, design, 0, layout.n_p, 1);
    out += "mag_magnitude " + std::to_string(layout.n_m) + "\n";
    append_values(out, design, layout.mag_index(0), layout.n_m, 1);
    out += "mag_orientation " + std::to_string(layout.n_m) + "\n";
    append_values(out, design, layout.dir_index(0, 0), layout.n_m * layout.dim, layout.dim);
    out += "stimulus " + std::to_string(layout.n_tasks) + "\n";
    if (layout.n_tasks > 0)
        append_values(out, design, layout.stim_base(0), layout.n_tasks * (2 + layout.dim),
                      2 + layout.dim);
    return out;
}

VecX parse_design(const std::string& text, const DesignLayout& layout) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "magmpm-design" || version != 1)
        throw ParseError("not a magmpm design file (expected header 'magmpm-design 1')");
    std::string key;
    int dim = 0;
    in >> key >> dim;
    if (key != "dim" || dim != layout.dim)
        throw ParseError("design file dimension does not match the scene");

    VecX x(layout.size());
    auto read_section = [&](const std::string& name, int expected, int begin, int count) {
        std::string got;
        int n = 0;
        in >> got >> n;
        if (got != name)
            throw ParseError("design file: expected section '" + name + "', found '" + got + "'");
        if (n != expected)
            throw ParseError("design file: section '" + name + "' has count " + std::to_string(n) +
                             ", scene requires " + std::to_string(expected));
        for (int i = 0; i < count; ++i)
            if (!(in >> x[begin + i]))
                throw ParseError("design file: section '" + name + "' is truncated");
    };
    read_section("phi", layout.n_p, 0, layout.n_p);
    read_section("mag_magnitude", layout.n_m, layout.mag_index(0), layout.n_m);
    read_section("mag_orientation", layout.n_m, layout.dir_index(0, 0), layout.n_m * layout.dim);
    read_section("stimulus", layout.n_tasks,
                 layout.n_tasks > 0 ? layout.stim_base(0) : layout.size(),
                 layout.n_tasks * (2 + layout.dim));
    return x;
}

void save_design_file(const std::string& path, const VecX& design, const DesignLayout& layout) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write design file: " + path);
    out << serialize_design(design, layout);
}

VecX load_design_file(const std::string& path, const DesignLayout& layout) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open design file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_design(ss.str(), layout);
}

} // namespace magmpm
