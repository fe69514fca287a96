#pragma once

// Truncated-Fock constructions of the component states, used as an
// independent numerical route for checking the closed-form moment engine.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

namespace teststates {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat ladder(int dim) {
    Mat a = Mat::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

inline Vec coherent_vec(cplx alpha, int dim) {
    Vec v(dim);
    cplx amp = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < dim; ++n) {
        v(n) = amp;
        amp *= alpha / std::sqrt(double(n + 1));
    }
    return v;
}

inline Mat coherent_rho(cplx alpha, int dim) {
    Vec v = coherent_vec(alpha, dim);
    return v * v.adjoint();
}

inline Mat thermal_rho(double n0, int dim) {
    Mat rho = Mat::Zero(dim, dim);
    double ratio = n0 / (n0 + 1.0);
    double w = 1.0 / (n0 + 1.0);
    for (int n = 0; n < dim; ++n) {
        rho(n, n) = w;
        w *= ratio;
    }
    rho /= rho.trace().real();
    return rho;
}

inline Mat fock_rho(int l, int dim) {
    Mat rho = Mat::Zero(dim, dim);
    rho(l, l) = 1.0;
    return rho;
}

// S(r, phi) = exp((conj(xi) a^2 - xi a†^2)/2), xi = r e^{i phi}
inline Mat squeeze_op(double r, double phi, int dim) {
    Mat a = ladder(dim);
    cplx xi = std::polar(r, phi);
    Mat gen = 0.5 * (std::conj(xi) * a * a - xi * (a.adjoint() * a.adjoint()).eval());
    return gen.exp();
}

inline Mat squeezed_vacuum_rho(double r, double phi, int dim) {
    Mat s = squeeze_op(r, phi, dim);
    Vec v = s.col(0);
    return v * v.adjoint();
}

inline Mat squeezed_thermal_rho(double n0, double r, double phi, int dim) {
    Mat s = squeeze_op(r, phi, dim);
    return s * thermal_rho(n0, dim) * s.adjoint();
}

inline Mat squeezed_fock_rho(int l, double r, double phi, int dim) {
    Mat s = squeeze_op(r, phi, dim);
    Vec v = s.col(l);
    return v * v.adjoint();
}

inline Mat cat_rho(cplx a1, cplx a2, cplx theta, int dim) {
    Vec v = coherent_vec(a1, dim) + theta * coherent_vec(a2, dim);
    Mat rho = v * v.adjoint();
    return rho / rho.trace().real();
}

// tr(rho a†^p a^q) using the single nonzero diagonal of the ladder monomial:
// <m|a†^p a^q|n> is nonzero only for m = n - q + p.
inline cplx normal_moment(const Mat& rho, int p, int q) {
    int dim = int(rho.rows());
    cplx total = 0.0;
    for (int n = q; n < dim; ++n) {
        int m = n - q + p;
        if (m >= dim) continue;
        double w = 1.0;
        for (int k = n - q + 1; k <= n; ++k) w *= k;  // n!/(n-q)!
        double w2 = 1.0;
        for (int k = n - q + 1; k <= m; ++k) w2 *= k;  // m!/(n-q)!
        total += rho(n, m) * std::sqrt(w * w2);
    }
    return total;
}

// Squeezed states populate only every other level, so look at the last few.
inline double boundary_weight(const Mat& rho) {
    double w = 0.0;
    for (int k = 1; k <= 4 && k <= rho.rows(); ++k)
        w = std::max(w, std::abs(rho(rho.rows() - k, rho.cols() - k)));
    return w;
}

}  // namespace teststates
