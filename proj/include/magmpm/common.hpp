#ifndef MAGMPM_COMMON_HPP
#define MAGMPM_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace magmpm {

template <int D> using Vec = Eigen::Matrix<double, D, 1>;
template <int D> using Mat = Eigen::Matrix<double, D, D>;
template <typename S, int D> using VecT = Eigen::Matrix<S, D, 1>;
template <typename S, int D> using MatT = Eigen::Matrix<S, D, D>;

using VecX = Eigen::VectorXd;

/// Scene text or file could not be interpreted.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scene parsed but violates a physical or structural invariant.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Runtime failure inside a simulation or adjoint sweep.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& msg, long particle = -1, long step = -1)
        : std::runtime_error(msg), particle_index(particle), step_index(step) {}
    long particle_index;
    long step_index;
};

inline double real_part(double x) { return x; }
inline double real_part(const std::complex<double>& x) { return x.real(); }

// Non-conjugating products. Eigen's dot()/squaredNorm() conjugate complex
// operands, which would corrupt complex-step tangents.
template <typename S, int D>
S dot_nc(const VecT<S, D>& a, const VecT<S, D>& b) {
    S s = S(0);
    for (int k = 0; k < D; ++k) s += a[k] * b[k];
    return s;
}

template <typename S, int D>
S sqnorm_nc(const VecT<S, D>& a) { return dot_nc<S, D>(a, a); }

template <typename S, int D>
S frob_nc(const MatT<S, D>& a, const MatT<S, D>& b) {
    S s = S(0);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) s += a(i, j) * b(i, j);
    return s;
}

} // namespace magmpm

#endif
