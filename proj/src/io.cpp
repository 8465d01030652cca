#include "magmpm/io.hpp"

#include <fstream>
#include <sstream>

namespace magmpm {

std::string snapshot_filename(int frame, double t) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "frame_%06d_t%.9f.csv", frame, t);
    return buf;
}

Snapshot read_snapshot_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open snapshot file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("snapshot file " + path + " is empty");
    Snapshot snap;
    if (line == "px,py,vx,vy,phi_bar,brx,bry,region") snap.dim = 2;
    else if (line == "px,py,pz,vx,vy,vz,phi_bar,brx,bry,brz,region") snap.dim = 3;
    else throw ParseError("snapshot file " + path + ": unrecognized header at line 1");

    const int d = snap.dim;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        SnapshotRow row;
        char comma;
        bool ok = true;
        for (int a = 0; a < d && ok; ++a) ok = bool(ls >> row.x[a] >> comma);
        for (int a = 0; a < d && ok; ++a) ok = bool(ls >> row.v[a] >> comma);
        if (ok) ok = bool(ls >> row.phi_bar >> comma);
        for (int a = 0; a < d && ok; ++a) ok = bool(ls >> row.br[a] >> comma);
        if (ok) ok = bool(ls >> row.region);
        if (!ok)
            throw ParseError("snapshot file " + path + ": malformed row at line " +
                             std::to_string(lineno));
        snap.rows.push_back(row);
    }
    return snap;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DiagnosticsLog::DiagnosticsLog(const std::string& path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw ParseError("cannot write diagnostics log: " + path);
    std::fputs("step,time,kinetic_energy,elastic_energy,magnetic_energy,total_mass\n", f_);
}

DiagnosticsLog::~DiagnosticsLog() {
    if (f_) std::fclose(f_);
}

void DiagnosticsLog::row(long step, double t, double ke, double ee, double me, double mass) {
    std::fprintf(f_, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", step, t, ke, ee, me, mass);
}

} // namespace magmpm
