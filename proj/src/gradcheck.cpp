#include "magmpm/gradcheck.hpp"

#include <cstdio>

namespace magmpm {

std::string gradcheck_report_csv(const GradCheckReport& rep) {
    std::string out = "component,group,adjoint,fd,rel_err,flag\n";
    char buf[256];
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.6g,%s\n", r.index, r.group.c_str(),
                      r.adjoint, r.fd, r.rel_err, r.flag.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "# cosine_similarity=%.12f significant=%d within_tol=%d flagged=%d pass=%d\n",
                  rep.cosine, rep.n_significant, rep.n_within_tol, rep.n_flagged,
                  rep.pass ? 1 : 0);
    out += buf;
    return out;
}

} // namespace magmpm
