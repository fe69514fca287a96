// Compares the serial reference grid kernels with the OpenMP-parallel ones
// and verifies that both produce identical values.

#include <chrono>
#include <cstdio>

#include "pvar/phase_space.hpp"

using namespace pvar;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

template <typename F>
std::pair<PhaseGrid, double> timed(F&& f) {
    const auto start = clock_type::now();
    PhaseGrid grid = f();
    return {std::move(grid), ms_since(start)};
}

}  // namespace

int main() {
    const std::vector<ComponentState> state{ComponentState(Thermal{0.4}),
                                            ComponentState(Coherent{cplx(0.8, -0.5)})};
    const int m = 16;
    const auto table = moment_table(state, m);
    GridSpec spec{.extent = 4.0, .points = 201, .z_max = 4.5, .z_points = 513};

    std::printf("%-28s %10s %10s %8s %s\n", "kernel", "serial", "parallel", "speedup", "identical");
    const auto report = [](const char* name, const PhaseGrid& serial, double ts,
                           const PhaseGrid& parallel, double tp) {
        std::printf("%-28s %8.1fms %8.1fms %7.2fx %s\n", name, ts, tp, ts / tp,
                    serial.values == parallel.values ? "yes" : "NO");
    };

    const auto [p_serial, tps] = timed([&] { return p_grid(table, m, spec, 0.0, false); });
    const auto [p_parallel, tpp] = timed([&] { return p_grid(table, m, spec, 0.0, true); });
    report("p inversion", p_serial, tps, p_parallel, tpp);

    const auto [w_serial, tws] = timed([&] { return wigner_grid(table, m, spec, 0, false); });
    const auto [w_parallel, twp] = timed([&] { return wigner_grid(table, m, spec, 0, true); });
    report("wigner inversion", w_serial, tws, w_parallel, twp);

    const auto [c_serial, tcs] = timed([&] { return wigner_from_p(p_serial, false); });
    const auto [c_parallel, tcp] = timed([&] { return wigner_from_p(p_parallel, true); });
    report("wigner convolution", c_serial, tcs, c_parallel, tcp);

    return 0;
}
