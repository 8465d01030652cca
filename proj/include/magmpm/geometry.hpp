#ifndef MAGMPM_GEOMETRY_HPP
#define MAGMPM_GEOMETRY_HPP

#include "magmpm/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace magmpm {

/// Axis-aligned primitive. Parameters are stored 3D; the z entries are
/// ignored when the scene is two-dimensional.
struct ShapeSpec {
    enum class Kind { Box, Cylinder, Sphere, HalfSpace };
    Kind kind = Kind::Box;

    // Box: a = min corner, b = max corner.
    // Cylinder: a = center, radius r, half-length h along `axis`.
    // Sphere: a = center, radius r.
    // HalfSpace: a = unit outward normal, b = point on the plane.
    Eigen::Vector3d a = Eigen::Vector3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    double r = 0.0;
    double h = 0.0;
    int axis = 0;
};

template <int D>
Vec<D> head(const Eigen::Vector3d& v) {
    return v.template head<D>();
}

template <int D>
bool shape_contains(const ShapeSpec& s, const Vec<D>& p) {
    switch (s.kind) {
    case ShapeSpec::Kind::Box: {
        for (int k = 0; k < D; ++k)
            if (!(p[k] > s.a[k] && p[k] < s.b[k])) return false;
        return true;
    }
    case ShapeSpec::Kind::Cylinder: {
        if (std::abs(p[s.axis] - s.a[s.axis]) >= s.h) return false;
        double rho2 = 0.0;
        for (int k = 0; k < D; ++k)
            if (k != s.axis) rho2 += (p[k] - s.a[k]) * (p[k] - s.a[k]);
        return rho2 < s.r * s.r;
    }
    case ShapeSpec::Kind::Sphere: {
        Vec<D> d = p - head<D>(s.a);
        return d.squaredNorm() < s.r * s.r;
    }
    case ShapeSpec::Kind::HalfSpace:
        return head<D>(s.a).dot(p - head<D>(s.b)) < 0.0;
    }
    return false;
}

/// Signed distance: negative inside the solid, zero on its surface.
template <int D>
double shape_sdf(const ShapeSpec& s, const Vec<D>& p) {
    switch (s.kind) {
    case ShapeSpec::Kind::HalfSpace:
        return head<D>(s.a).dot(p - head<D>(s.b));
    case ShapeSpec::Kind::Sphere:
        return (p - head<D>(s.a)).norm() - s.r;
    case ShapeSpec::Kind::Box: {
        Vec<D> q;
        for (int k = 0; k < D; ++k)
            q[k] = std::max(s.a[k] - p[k], p[k] - s.b[k]);
        double inside = q.maxCoeff();
        if (inside <= 0.0) return inside;
        Vec<D> qp = q.cwiseMax(0.0);
        return qp.norm();
    }
    case ShapeSpec::Kind::Cylinder: {
        double ax = std::abs(p[s.axis] - s.a[s.axis]) - s.h;
        double rho = 0.0;
        for (int k = 0; k < D; ++k)
            if (k != s.axis) rho += (p[k] - s.a[k]) * (p[k] - s.a[k]);
        double rd = std::sqrt(rho) - s.r;
        if (ax <= 0.0 && rd <= 0.0) return std::max(ax, rd);
        double ox = std::max(ax, 0.0), orr = std::max(rd, 0.0);
        return std::sqrt(ox * ox + orr * orr);
    }
    }
    return 0.0;
}

/// Outward normal of the solid at p (unit length, valid near the surface).
template <int D>
Vec<D> shape_normal(const ShapeSpec& s, const Vec<D>& p) {
    switch (s.kind) {
    case ShapeSpec::Kind::HalfSpace:
        return head<D>(s.a);
    case ShapeSpec::Kind::Sphere: {
        Vec<D> d = p - head<D>(s.a);
        double n = d.norm();
        if (n < 1e-300) { Vec<D> e = Vec<D>::Zero(); e[D - 1] = 1.0; return e; }
        return d / n;
    }
    case ShapeSpec::Kind::Box: {
        Vec<D> qlo, qhi, q;
        for (int k = 0; k < D; ++k) {
            qlo[k] = s.a[k] - p[k];
            qhi[k] = p[k] - s.b[k];
            q[k] = std::max(qlo[k], qhi[k]);
        }
        if (q.maxCoeff() <= 0.0) {
            int kmax = 0;
            q.maxCoeff(&kmax);
            Vec<D> n = Vec<D>::Zero();
            n[kmax] = (qhi[kmax] > qlo[kmax]) ? 1.0 : -1.0;
            return n;
        }
        Vec<D> n;
        for (int k = 0; k < D; ++k) {
            double c = std::max(q[k], 0.0);
            n[k] = (qhi[k] > qlo[k]) ? c : -c;
        }
        double len = n.norm();
        return (len > 0.0) ? Vec<D>(n / len) : Vec<D>::Unit(D - 1);
    }
    case ShapeSpec::Kind::Cylinder: {
        double ax = std::abs(p[s.axis] - s.a[s.axis]) - s.h;
        Vec<D> radial = Vec<D>::Zero();
        double rho = 0.0;
        for (int k = 0; k < D; ++k)
            if (k != s.axis) { radial[k] = p[k] - s.a[k]; rho += radial[k] * radial[k]; }
        rho = std::sqrt(rho);
        double rd = rho - s.r;
        if (rd >= ax) {
            if (rho < 1e-300) return Vec<D>::Unit((s.axis + 1) % D);
            return radial / rho;
        }
        Vec<D> n = Vec<D>::Zero();
        n[s.axis] = (p[s.axis] > s.a[s.axis]) ? 1.0 : -1.0;
        return n;
    }
    }
    return Vec<D>::Unit(D - 1);
}

template <int D>
bool body_contains(const std::vector<ShapeSpec>& body, const Vec<D>& p) {
    for (const auto& s : body)
        if (shape_contains<D>(s, p)) return true;
    return false;
}

template <int D>
void body_bounding_box(const std::vector<ShapeSpec>& body, Vec<D>& lo, Vec<D>& hi) {
    lo = Vec<D>::Constant(std::numeric_limits<double>::infinity());
    hi = Vec<D>::Constant(-std::numeric_limits<double>::infinity());
    for (const auto& s : body) {
        Vec<D> slo, shi;
        switch (s.kind) {
        case ShapeSpec::Kind::Box:
            slo = head<D>(s.a); shi = head<D>(s.b);
            break;
        case ShapeSpec::Kind::Sphere:
            slo = head<D>(s.a).array() - s.r; shi = head<D>(s.a).array() + s.r;
            break;
        case ShapeSpec::Kind::Cylinder:
            for (int k = 0; k < D; ++k) {
                double e = (k == s.axis) ? s.h : s.r;
                slo[k] = s.a[k] - e; shi[k] = s.a[k] + e;
            }
            break;
        case ShapeSpec::Kind::HalfSpace:
            continue; // unbounded, not a body shape
        }
        lo = lo.cwiseMin(slo);
        hi = hi.cwiseMax(shi);
    }
}

/// Analytic volume (area in 2D) of a union of disjoint primitives.
template <int D>
double body_volume(const std::vector<ShapeSpec>& body) {
    double v = 0.0;
    for (const auto& s : body) {
        switch (s.kind) {
        case ShapeSpec::Kind::Box: {
            double e = 1.0;
            for (int k = 0; k < D; ++k) e *= s.b[k] - s.a[k];
            v += e;
            break;
        }
        case ShapeSpec::Kind::Sphere:
            v += (D == 2) ? M_PI * s.r * s.r : 4.0 / 3.0 * M_PI * s.r * s.r * s.r;
            break;
        case ShapeSpec::Kind::Cylinder:
            v += (D == 2) ? 2.0 * s.r * 2.0 * s.h : M_PI * s.r * s.r * 2.0 * s.h;
            break;
        case ShapeSpec::Kind::HalfSpace:
            break;
        }
    }
    return v;
}

} // namespace magmpm

#endif
