#ifndef MAGMPM_CONSTITUTIVE_HPP
#define MAGMPM_CONSTITUTIVE_HPP

#include "magmpm/common.hpp"

#include <cmath>

namespace magmpm {

// Neo-Hookean + ideal hard-magnetic energy, evaluated on the in-plane
// deformation gradient. 2D is treated as plane strain: the gradient is
// embedded with out-of-plane stretch 1, so I1 gains +1 and J = det(F_2x2).

template <typename S, int D>
S embedded_I1(const MatT<S, D>& F) {
    S i1 = frob_nc<S, D>(F, F);
    if constexpr (D == 2) i1 += S(1);
    return i1;
}

template <typename S, int D>
void check_not_inverted(const S& J, long particle = -1) {
    if (!(real_part(J) > 0.0))
        throw SimulationError("inverted element: det F <= 0", particle);
}

template <typename S, int D>
S elastic_energy(const MatT<S, D>& F, double G, double K, long particle = -1) {
    const S J = F.determinant();
    check_not_inverted<S, D>(J, particle);
    const S I1 = embedded_I1<S, D>(F);
    using std::pow;
    const S Jm23 = pow(J, S(-2.0 / 3.0));
    return 0.5 * G * (Jm23 * I1 - S(3)) + 0.5 * K * (J - S(1)) * (J - S(1));
}

template <typename S, int D>
S magnetic_energy(const MatT<S, D>& F, const VecT<S, D>& Br_ref,
                  const VecT<S, D>& B_applied, double mu0) {
    const VecT<S, D> push = F * Br_ref;
    return -dot_nc<S, D>(push, B_applied) / mu0;
}

template <typename S, int D>
MatT<S, D> pk1_elastic(const MatT<S, D>& F, double G, double K, long particle = -1) {
    const S J = F.determinant();
    check_not_inverted<S, D>(J, particle);
    const S I1 = embedded_I1<S, D>(F);
    using std::pow;
    const S Jm23 = pow(J, S(-2.0 / 3.0));
    const MatT<S, D> Fit = F.inverse().transpose();
    return G * Jm23 * (F - (I1 / S(3)) * Fit) + K * J * (J - S(1)) * Fit;
}

template <typename S, int D>
MatT<S, D> pk1_magnetic(const VecT<S, D>& Br_ref, const VecT<S, D>& B_applied, double mu0) {
    return -(B_applied * Br_ref.transpose()) / mu0;
}

template <typename S, int D>
MatT<S, D> pk1_stress(const MatT<S, D>& F, double G, double K,
                      const VecT<S, D>& Br_ref, const VecT<S, D>& B_applied,
                      double mu0, long particle = -1) {
    return pk1_elastic<S, D>(F, G, K, particle) + pk1_magnetic<S, D>(Br_ref, B_applied, mu0);
}

/// sigma = (1/J) P F^T. Diagnostic only; not used in time stepping.
template <typename S, int D>
MatT<S, D> cauchy_stress(const MatT<S, D>& F, double G, double K,
                         const VecT<S, D>& Br_ref, const VecT<S, D>& B_applied,
                         double mu0, long particle = -1) {
    const S J = F.determinant();
    check_not_inverted<S, D>(J, particle);
    return pk1_stress<S, D>(F, G, K, Br_ref, B_applied, mu0, particle) * F.transpose() / J;
}

/// Current-state remanence B_r = J^{-1} F B_r_ref.
template <typename S, int D>
VecT<S, D> push_forward_remanence(const MatT<S, D>& F, const VecT<S, D>& Br_ref,
                                  long particle = -1) {
    const S J = F.determinant();
    check_not_inverted<S, D>(J, particle);
    return (F * Br_ref) / J;
}

/// Directional derivative dP_e(F)[dF] of the elastic PK1 stress. By symmetry
/// of the energy Hessian this also computes the adjoint contraction
/// Fbar = d2W/dF2 : Pbar when called with dF = Pbar.
template <int D>
Mat<D> pk1_elastic_dir_deriv(const Mat<D>& F, double G, double K, const Mat<D>& dF) {
    const double J = F.determinant();
    const double I1 = embedded_I1<double, D>(F);
    const double Jm23 = std::pow(J, -2.0 / 3.0);
    const Mat<D> Fit = F.inverse().transpose();
    const double trc = (Fit.cwiseProduct(dF)).sum(); // F^{-T} : dF
    const double dI1 = 2.0 * (F.cwiseProduct(dF)).sum();
    const Mat<D> dFit = -Fit * dF.transpose() * Fit;

    Mat<D> out = G * (-2.0 / 3.0) * Jm23 * trc * (F - (I1 / 3.0) * Fit);
    out += G * Jm23 * (dF - (dI1 / 3.0) * Fit - (I1 / 3.0) * dFit);
    out += K * (2.0 * J - 1.0) * J * trc * Fit;
    out += K * J * (J - 1.0) * dFit;
    return out;
}

} // namespace magmpm

#endif
