// Compares the OpenMP-parallel RHS kernel against the serial reference
// implementation: correctness (componentwise gap) and throughput.

#include "ddrom/burgers.hpp"
#include "ddrom/reference.hpp"
#include "ddrom/stencil.hpp"

#include <chrono>
#include <cstdio>
#include <random>

using namespace ddrom;

namespace {

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = (argc > 1) ? std::atoi(argv[1]) : 50;
    std::printf("%-22s %10s %12s %12s %9s %10s\n", "grid", "dofs",
                "parallel s", "serial s", "ratio", "max diff");
    for (int n : {64, 128, 256, 512}) {
        for (BcKind bc : {BcKind::Periodic, BcKind::HomogeneousNeumann}) {
            Grid2D g = build_grid(n, n, 0.0, 1.0, 0.0, 1.0, bc);
            auto st = build_stencils(g);
            std::mt19937 rng(7u * static_cast<unsigned>(n));
            std::normal_distribution<double> nd(0.0, 1.0);
            Vec x = Vec::NullaryExpr(g.num_dofs(), [&](Eigen::Index) { return nd(rng); });
            Vec out(g.num_dofs());

            rhs_into(x, st, g, 1e-3, out);  // warm up
            double t0 = now();
            for (int r = 0; r < reps; ++r) rhs_into(x, st, g, 1e-3, out);
            const double t_par = (now() - t0) / reps;

            Vec ref = reference::serial_rhs(x, g, 1e-3);
            t0 = now();
            for (int r = 0; r < reps; ++r) ref = reference::serial_rhs(x, g, 1e-3);
            const double t_ser = (now() - t0) / reps;

            const double diff = (out - ref).cwiseAbs().maxCoeff();
            char label[32];
            std::snprintf(label, sizeof(label), "%dx%d %s", n, n,
                          bc == BcKind::Periodic ? "periodic" : "neumann");
            std::printf("%-22s %10d %12.3e %12.3e %9.2f %10.2e\n", label,
                        g.num_dofs(), t_par, t_ser, t_ser / t_par, diff);
            // Summation order differs between the kernels, so rounding
            // noise grows with problem size; scale the bound accordingly.
            const double tol = 1e-12 * std::sqrt(static_cast<double>(g.num_dofs()));
            if (diff > tol) {
                std::printf("kernel mismatch exceeds %.2e\n", tol);
                return 1;
            }
        }
    }
    return 0;
}
