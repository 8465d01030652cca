#ifndef MAGMPM_IO_HPP
#define MAGMPM_IO_HPP

#include "magmpm/design.hpp"
#include "magmpm/engine.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace magmpm {

/// Snapshot CSV: px,py[,pz],vx,vy[,vz],phi_bar,brx,bry[,brz],region.
template <int D>
std::string snapshot_csv(const SimState<double, D>& s, const MappedField<double, D>& mat,
                         const ParticleSet<D>& particles) {
    std::string out = (D == 2) ? "px,py,vx,vy,phi_bar,brx,bry,region\n"
                               : "px,py,pz,vx,vy,vz,phi_bar,brx,bry,brz,region\n";
    char buf[512];
    for (int p = 0; p < particles.size(); ++p) {
        int n = 0;
        for (int a = 0; a < D; ++a)
            n += std::snprintf(buf + n, sizeof buf - n, "%.17g,", s.x[p][a]);
        for (int a = 0; a < D; ++a)
            n += std::snprintf(buf + n, sizeof buf - n, "%.17g,", s.v[p][a]);
        n += std::snprintf(buf + n, sizeof buf - n, "%.17g,", mat.phi_bar[p]);
        for (int a = 0; a < D; ++a)
            n += std::snprintf(buf + n, sizeof buf - n, "%.17g,", mat.remanence[p][a]);
        std::snprintf(buf + n, sizeof buf - n, "%d\n", particles.region[p]);
        out += buf;
    }
    return out;
}

/// Snapshot frame file name carrying the frame index and simulation time.
std::string snapshot_filename(int frame, double t);

struct SnapshotRow {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    Eigen::Vector3d br = Eigen::Vector3d::Zero();
    double phi_bar = 1.0;
    int region = 0;
};

struct Snapshot {
    int dim = 2;
    std::vector<SnapshotRow> rows;
};

/// Parses a snapshot CSV; malformed rows raise ParseError naming the line.
Snapshot read_snapshot_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Diagnostic log: step,time,kinetic_energy,elastic_energy,magnetic_energy,total_mass.
class DiagnosticsLog {
public:
    explicit DiagnosticsLog(const std::string& path);
    ~DiagnosticsLog();
    void row(long step, double t, double ke, double ee, double me, double mass);

private:
    std::FILE* f_ = nullptr;
};

} // namespace magmpm

#endif
