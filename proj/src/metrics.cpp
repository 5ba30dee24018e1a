#include "ddrom/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ddrom {

namespace {

std::vector<double> per_step_metric(const std::vector<Vec>& a,
                                    const std::vector<Vec>& b,
                                    const SubdomainStateMap& map,
                                    const Grid2D& grid, int n_omega) {
    if (a.size() != b.size())
        throw std::invalid_argument("linf_l2_error: trajectories misaligned");
    const double scale = grid.hx * grid.hy / n_omega;
    std::vector<double> out;
    out.reserve(a.size());
    for (size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size())
            throw std::invalid_argument("linf_l2_error: state dims misaligned");
        double acc = 0.0;
        for (const auto& sub : map.subs) {
            for (int d : sub.interior) {
                const double e = a[k][d] - b[k][d];
                acc += e * e;
            }
            for (int d : sub.interface) {
                const double e = a[k][d] - b[k][d];
                acc += e * e;
            }
        }
        out.push_back(std::sqrt(scale * acc));
    }
    return out;
}

}  // namespace

ErrorReport linf_l2_error(const std::vector<Vec>& fom_traj,
                          const std::vector<Vec>& rom_traj,
                          const SubdomainStateMap& map, const Grid2D& grid,
                          int n_omega) {
    ErrorReport rep;
    rep.per_step = per_step_metric(fom_traj, rom_traj, map, grid, n_omega);
    for (double v : rep.per_step) rep.e_abs = std::max(rep.e_abs, v);

    std::vector<Vec> zero(fom_traj.size(), Vec::Zero(fom_traj.empty() ? 0 : fom_traj[0].size()));
    double ref = 0.0;
    for (double v : per_step_metric(fom_traj, zero, map, grid, n_omega))
        ref = std::max(ref, v);
    rep.e_rel = (ref > 0.0) ? rep.e_abs / ref : 0.0;
    return rep;
}

double speedup(const TimingRecord& fom, const TimingRecord& rom) {
    return fom.total() / rom.total();
}

}  // namespace ddrom
