#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "pvar/moments.hpp"

namespace pvar {

/// Square alpha-grid plus the z-integration window for the inversion.
struct GridSpec {
    double extent = 3.0;  // alpha spans [-extent, extent] on both axes
    int points = 101;     // per axis
    double z_max = 0;     // 0 = automatic window from the moment magnitudes
    int z_points = 0;     // 0 = automatic resolution
    // Optional anisotropic window: the integration runs over the ellipse with
    // semi-axes (z_max_x, z_max_y), each defaulting to z_max. Useful when the
    // characteristic function decays at different rates along the two axes.
    double z_max_x = 0;
    double z_max_y = 0;
};

struct PhaseGrid {
    GridSpec spec;
    int truncation = 0;    // series order M
    double sigma_reg = 0;  // Gaussian regularizer width
    double z_window = 0;   // actually used |z| window
    std::string label;     // state name
    std::string kind;      // "p" or "wigner"
    Eigen::MatrixXd values;  // values(i, j) at alpha = axis(i) + i*axis(j)

    double axis(int k) const;
    double step() const { return 2 * spec.extent / (spec.points - 1); }
};

/// Single-mode normal-ordered moments <a†^k a^l> keyed by (k, l).
using MomentTable = std::map<std::pair<int, int>, cplx>;

/// All moments with k, l <= order of a convolved component list.
MomentTable moment_table(const std::vector<ComponentState>& components, int order);

/// Truncated normal-ordered characteristic function
/// chi_N(z) = sum_{k,l<=M} z^k/k! (-z*)^l/l! <a†^k a^l>.
cplx char_fn(const MomentTable& moments, int m, cplx z);

/// Fourier inversion of chi_N with a Gaussian regularizer exp(-sigma^2 |z|^2).
PhaseGrid p_grid(const MomentTable& moments, int m, const GridSpec& spec, double sigma_reg,
                 bool parallel = true);

/// Wigner grid straight from chi_N via the extra exp(-|z|^2/2) ordering factor.
PhaseGrid wigner_grid(const MomentTable& moments, int m, const GridSpec& spec,
                      double sigma_reg = 0, bool parallel = true);

/// Wigner grid as the Gaussian convolution (2/pi) exp(-2|alpha-alpha'|^2) of a P grid.
PhaseGrid wigner_from_p(const PhaseGrid& p, bool parallel = true);

/// Regularizer default: 0 when a thermal component with n0 > 0 smooths the
/// distribution, 0.15 otherwise.
double default_sigma(const std::vector<ComponentState>& components);

/// Wigner grids of the pairwise convolutions of the reference state table:
/// {identity, coherent(i), squeezed(0.5), thermal(0.1), fock(1)} against
/// {coherent(1), squeezed(1, -pi/2), thermal(1e-3), fock(2)}.
std::vector<PhaseGrid> gallery(const GridSpec& spec, int m = 16);

/// Writes <label>_<kind>_<M>_<sigma>.csv (header re_alpha, im_alpha, value)
/// plus a .json metadata sidecar; returns the CSV path.
std::filesystem::path write_grid(const PhaseGrid& grid, const std::filesystem::path& dir,
                                 const std::string& config_hash = {});

/// Trapezoid integral of f(alpha) * grid value over the grid.
double grid_integral(const PhaseGrid& grid);
cplx grid_moment(const PhaseGrid& grid, int p, int q);  // integral of conj(a)^p a^q * value

}  // namespace pvar
