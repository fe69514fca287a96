#include "pvar/phase_space.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pvar {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBlowupGuard = 1e12;

// Series coefficients c(k, l) = <a†^k a^l> / (k! l!), dense up to order m.
Eigen::MatrixXcd series_coefficients(const MomentTable& moments, int m) {
    Eigen::MatrixXcd c(m + 1, m + 1);
    double kfact = 1;
    for (int k = 0; k <= m; ++k) {
        if (k > 0) kfact *= k;
        double lfact = 1;
        for (int l = 0; l <= m; ++l) {
            if (l > 0) lfact *= l;
            auto it = moments.find({k, l});
            if (it == moments.end()) {
                std::ostringstream msg;
                msg << "characteristic function needs moment (" << k << ", " << l
                    << ") but the table stops earlier";
                throw std::runtime_error(msg.str());
            }
            c(k, l) = it->second / (kfact * lfact);
        }
    }
    return c;
}

cplx eval_series(const Eigen::MatrixXcd& c, cplx z) {
    const cplx w = -std::conj(z);
    cplx sum = 0;
    for (int k = int(c.rows()) - 1; k >= 0; --k) {
        cplx inner = 0;
        for (int l = int(c.cols()) - 1; l >= 0; --l) inner = inner * w + c(k, l);
        sum = sum * z + inner;
    }
    return sum;
}

// Largest per-order moment magnitude, the scale entering the default window.
double moment_scale(const MomentTable& moments) {
    double b = 0;
    for (const auto& [kl, value] : moments) {
        const int order = kl.first + kl.second;
        if (order == 0) continue;
        b = std::max(b, std::pow(std::abs(value), 1.0 / order));
    }
    return b;
}

struct ZWindow {
    double x_max, y_max;  // ellipse semi-axes
    int x_points, y_points;
};

int resolve_points(int requested, double half_width, double extent, double b) {
    if (requested > 0) return std::max(requested, 2);
    // Resolve the fastest Fourier phase 2 (extent + moment scale) |z|.
    const double cycles = 2 * half_width * (extent + b) / kPi;
    return std::clamp(int(std::ceil(16 * cycles)) | 1, 129, 2049);
}

ZWindow resolve_window(const MomentTable& moments, int m, const GridSpec& spec) {
    const double b = moment_scale(moments);
    double z_max = spec.z_max;
    if (z_max <= 0) z_max = std::min(4.0, m / (2 * std::max(1.0, b)));
    const double x_max = spec.z_max_x > 0 ? spec.z_max_x : z_max;
    const double y_max = spec.z_max_y > 0 ? spec.z_max_y : z_max;
    return {x_max, y_max, resolve_points(spec.z_points, x_max, spec.extent, b),
            resolve_points(spec.z_points, y_max, spec.extent, b)};
}

// Trapezoid Fourier inversion of f(z) = chi_N(z) exp(-gauss |z|^2):
//   out(alpha) = (1/pi^2) Re integral d^2 z f(z) exp(alpha z* - alpha* z).
// Separable kernel: with z = x + iy, alpha = u + iv the phase is 2i(vx - uy).
Eigen::MatrixXd invert(const Eigen::MatrixXcd& c, double gauss, const GridSpec& spec,
                       const ZWindow& window, bool parallel) {
    const int n = spec.points;
    const int nx = window.x_points, ny = window.y_points;
    const double dx = 2 * window.x_max / (nx - 1);
    const double dy = 2 * window.y_max / (ny - 1);
    const double da = 2 * spec.extent / (n - 1);

    Eigen::VectorXd xaxis(nx), yaxis(ny), xw(nx), yw(ny), aaxis(n);
    for (int j = 0; j < nx; ++j) {
        xaxis(j) = -window.x_max + j * dx;
        xw(j) = (j == 0 || j == nx - 1) ? dx / 2 : dx;
    }
    for (int j = 0; j < ny; ++j) {
        yaxis(j) = -window.y_max + j * dy;
        yw(j) = (j == 0 || j == ny - 1) ? dy / 2 : dy;
    }
    for (int i = 0; i < n; ++i) aaxis(i) = -spec.extent + i * da;

    // The series is only evaluated inside the elliptical window; outside of it
    // the regularized characteristic function is treated as zero.
    Eigen::MatrixXcd f(nx, ny);  // f(jx, jy)
    bool blowup = false;
#pragma omp parallel for schedule(static) if (parallel)
    for (int jx = 0; jx < nx; ++jx) {
        for (int jy = 0; jy < ny; ++jy) {
            const double x = xaxis(jx), y = yaxis(jy);
            const double ex = x / window.x_max, ey = y / window.y_max;
            if (ex * ex + ey * ey > 1) {
                f(jx, jy) = 0;
                continue;
            }
            const cplx value = eval_series(c, {x, y}) * std::exp(-gauss * (x * x + y * y));
            if (!std::isfinite(std::abs(value)) || std::abs(value) > kBlowupGuard) blowup = true;
            f(jx, jy) = value;
        }
    }
    if (blowup)
        throw std::runtime_error(
            "regularized characteristic function blows up inside the z window; "
            "increase sigma_reg or shrink the window");

    // Stage 1: g(iv, jy) = sum_jx w f(jx, jy) exp(2 i v x).
    Eigen::MatrixXcd g(n, ny);
#pragma omp parallel for schedule(static) if (parallel)
    for (int iv = 0; iv < n; ++iv) {
        const double v = aaxis(iv);
        for (int jy = 0; jy < ny; ++jy) {
            cplx sum = 0;
            for (int jx = 0; jx < nx; ++jx)
                sum += xw(jx) * f(jx, jy) * std::polar(1.0, 2 * v * xaxis(jx));
            g(iv, jy) = sum;
        }
    }

    // Stage 2: out(iu, iv) = (1/pi^2) Re sum_jy w g(iv, jy) exp(-2 i u y).
    Eigen::MatrixXd out(n, n);
#pragma omp parallel for schedule(static) if (parallel)
    for (int iu = 0; iu < n; ++iu) {
        const double u = aaxis(iu);
        for (int iv = 0; iv < n; ++iv) {
            cplx sum = 0;
            for (int jy = 0; jy < ny; ++jy)
                sum += yw(jy) * g(iv, jy) * std::polar(1.0, -2 * u * yaxis(jy));
            out(iu, iv) = sum.real() / (kPi * kPi);
        }
    }
    return out;
}

PhaseGrid make_grid(const MomentTable& moments, int m, const GridSpec& spec, double sigma_reg,
                    double ordering_gauss, const char* kind, bool parallel) {
    if (m < 0) throw std::invalid_argument("series order must be nonnegative");
    if (spec.points < 2) throw std::invalid_argument("grid needs at least two points per axis");
    if (spec.extent <= 0) throw std::invalid_argument("grid extent must be positive");
    if (sigma_reg < 0) throw std::invalid_argument("sigma_reg must be nonnegative");

    const auto c = series_coefficients(moments, m);
    const auto window = resolve_window(moments, m, spec);
    PhaseGrid grid;
    grid.spec = spec;
    grid.truncation = m;
    grid.sigma_reg = sigma_reg;
    grid.z_window = std::max(window.x_max, window.y_max);
    grid.kind = kind;
    grid.values = invert(c, sigma_reg * sigma_reg + ordering_gauss, spec, window, parallel);
    return grid;
}

std::string format_number(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

}  // namespace

double PhaseGrid::axis(int k) const { return -spec.extent + k * step(); }

MomentTable moment_table(const std::vector<ComponentState>& components, int order) {
    MomentTable table;
    const int cap = std::max(2 * order, kDefaultMaxMomentOrder);
    for (int k = 0; k <= order; ++k)
        for (int l = 0; l <= order; ++l)
            table[{k, l}] = components.empty() ? cplx(k == 0 && l == 0 ? 1 : 0)
                                               : convolve_moment(components, k, l, cap);
    return table;
}

cplx char_fn(const MomentTable& moments, int m, cplx z) {
    return eval_series(series_coefficients(moments, m), z);
}

PhaseGrid p_grid(const MomentTable& moments, int m, const GridSpec& spec, double sigma_reg,
                 bool parallel) {
    return make_grid(moments, m, spec, sigma_reg, 0, "p", parallel);
}

PhaseGrid wigner_grid(const MomentTable& moments, int m, const GridSpec& spec, double sigma_reg,
                      bool parallel) {
    return make_grid(moments, m, spec, sigma_reg, 0.5, "wigner", parallel);
}

PhaseGrid wigner_from_p(const PhaseGrid& p, bool parallel) {
    const int n = p.spec.points;
    const double da = p.step();
    Eigen::VectorXd axis(n), weight(n);
    for (int i = 0; i < n; ++i) {
        axis(i) = p.axis(i);
        weight(i) = (i == 0 || i == n - 1) ? da / 2 : da;
    }

    // Separable Gaussian kernel: one pass per axis, total prefactor 2/pi.
    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = axis(i) - axis(j);
            kernel(i, j) = weight(j) * std::exp(-2 * d * d);
        }

    PhaseGrid out = p;
    out.kind = "wigner";
    Eigen::MatrixXd half(n, n);
#pragma omp parallel for schedule(static) if (parallel)
    for (int j = 0; j < n; ++j) half.col(j) = kernel * p.values.col(j);
    Eigen::MatrixXd result(n, n);
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) result.row(i) = (kernel * half.row(i).transpose()).transpose();
    out.values = result * (2 / kPi);
    return out;
}

double default_sigma(const std::vector<ComponentState>& components) {
    for (const auto& component : components)
        if (const auto* thermal = component.get_if<Thermal>(); thermal && thermal->n0 > 0)
            return 0;
        else if (const auto* st = component.get_if<SqueezedThermal>(); st && st->n0 > 0)
            return 0;
    return 0.15;
}

std::vector<PhaseGrid> gallery(const GridSpec& spec, int m) {
    struct Entry {
        std::string name;
        std::optional<ComponentState> state;
    };
    const std::vector<Entry> rows = {
        {"identity", std::nullopt},
        {"coherent", ComponentState(Coherent{cplx(0, 1)})},
        {"squeezed", ComponentState(Squeezed{0.5, 0})},
        {"thermal", ComponentState(Thermal{0.1})},
        {"fock", ComponentState(Fock{1})},
    };
    const std::vector<Entry> cols = {
        {"coherent", ComponentState(Coherent{cplx(1, 0)})},
        {"squeezed", ComponentState(Squeezed{1, -kPi / 2})},
        {"thermal", ComponentState(Thermal{1e-3})},
        {"fock", ComponentState(Fock{2})},
    };

    std::vector<PhaseGrid> grids;
    for (const auto& row : rows)
        for (const auto& col : cols) {
            std::vector<ComponentState> components;
            if (row.state) components.push_back(*row.state);
            components.push_back(*col.state);
            auto grid = wigner_grid(moment_table(components, m), m, spec);
            grid.label = row.name + "_" + col.name;
            grids.push_back(std::move(grid));
        }
    return grids;
}

std::filesystem::path write_grid(const PhaseGrid& grid, const std::filesystem::path& dir,
                                 const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    const std::string stem = (grid.label.empty() ? std::string("grid") : grid.label) + "_" +
                             grid.kind + "_" + std::to_string(grid.truncation) + "_" +
                             format_number(grid.sigma_reg);
    const auto csv_path = dir / (stem + ".csv");

    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
    csv.precision(17);
    csv << "re_alpha,im_alpha,value\n";
    for (int i = 0; i < grid.spec.points; ++i)
        for (int j = 0; j < grid.spec.points; ++j)
            csv << grid.axis(i) << "," << grid.axis(j) << "," << grid.values(i, j) << "\n";

    nlohmann::json meta{
        {"label", grid.label},        {"kind", grid.kind},
        {"truncation", grid.truncation}, {"sigma_reg", grid.sigma_reg},
        {"z_window", grid.z_window},  {"extent", grid.spec.extent},
        {"points", grid.spec.points},
    };
    if (!config_hash.empty()) meta["config_hash"] = config_hash;
    std::ofstream side(dir / (stem + ".json"));
    side << meta.dump(2) << "\n";
    return csv_path;
}

double grid_integral(const PhaseGrid& grid) {
    const int n = grid.spec.points;
    const double da = grid.step();
    double sum = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double w = da * da;
            if (i == 0 || i == n - 1) w /= 2;
            if (j == 0 || j == n - 1) w /= 2;
            sum += w * grid.values(i, j);
        }
    return sum;
}

cplx grid_moment(const PhaseGrid& grid, int p, int q) {
    const int n = grid.spec.points;
    const double da = grid.step();
    cplx sum = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double w = da * da;
            if (i == 0 || i == n - 1) w /= 2;
            if (j == 0 || j == n - 1) w /= 2;
            const cplx alpha(grid.axis(i), grid.axis(j));
            sum += w * grid.values(i, j) * std::pow(std::conj(alpha), p) * std::pow(alpha, q);
        }
    return sum;
}

}  // namespace pvar
