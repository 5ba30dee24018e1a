#include "ddrom/nmrom.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ddrom {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

class IdentityDecoder final : public Decoder {
public:
    explicit IdentityDecoder(int dim) : dim_(dim) {}
    int latent_dim() const override { return dim_; }
    int full_dim() const override { return dim_; }
    Vec decode(const Vec& z) const override { return z; }
    Vec encode(const Vec& x) const override { return x; }
    Mat jacobian(const Vec& z) const override {
        return Mat::Identity(dim_, dim_);
    }

private:
    int dim_;
};

// Shared interior decoder on the block-core DOFs plus full-order identity
// on the remaining interior DOFs (block-perimeter nodes that are unshared
// because they sit on a domain wall). Core DOFs keep the same relative
// ordering in every block, so the shared model transfers unchanged.
class AugmentedInteriorDecoder final : public Decoder {
public:
    AugmentedInteriorDecoder(std::shared_ptr<Decoder> core,
                             std::vector<int> core_slots, int full_dim)
        : core_(std::move(core)),
          core_slots_(std::move(core_slots)),
          full_(full_dim) {
        if (static_cast<int>(core_slots_.size()) != core_->full_dim())
            throw std::invalid_argument(
                "AugmentedInteriorDecoder: core slot count mismatch");
        std::vector<char> is_core(static_cast<size_t>(full_), 0);
        for (int s : core_slots_) is_core[static_cast<size_t>(s)] = 1;
        for (int k = 0; k < full_; ++k)
            if (!is_core[static_cast<size_t>(k)]) extra_slots_.push_back(k);
    }
    int latent_dim() const override {
        return core_->latent_dim() + static_cast<int>(extra_slots_.size());
    }
    int full_dim() const override { return full_; }
    Vec decode(const Vec& z) const override {
        Vec x(full_);
        const Vec xc = core_->decode(z.head(core_->latent_dim()));
        for (size_t k = 0; k < core_slots_.size(); ++k)
            x[core_slots_[k]] = xc[static_cast<Eigen::Index>(k)];
        for (size_t k = 0; k < extra_slots_.size(); ++k)
            x[extra_slots_[k]] = z[core_->latent_dim() + static_cast<Eigen::Index>(k)];
        return x;
    }
    Vec encode(const Vec& x) const override {
        Vec xc(static_cast<Eigen::Index>(core_slots_.size()));
        for (size_t k = 0; k < core_slots_.size(); ++k)
            xc[static_cast<Eigen::Index>(k)] = x[core_slots_[k]];
        Vec z(latent_dim());
        z.head(core_->latent_dim()) = core_->encode(xc);
        for (size_t k = 0; k < extra_slots_.size(); ++k)
            z[core_->latent_dim() + static_cast<Eigen::Index>(k)] = x[extra_slots_[k]];
        return z;
    }
    Mat jacobian(const Vec& z) const override {
        Mat J = Mat::Zero(full_, latent_dim());
        const Mat Jc = core_->jacobian(z.head(core_->latent_dim()));
        for (size_t k = 0; k < core_slots_.size(); ++k)
            J.row(core_slots_[k]).head(core_->latent_dim()) =
                Jc.row(static_cast<Eigen::Index>(k));
        for (size_t k = 0; k < extra_slots_.size(); ++k)
            J(extra_slots_[k], core_->latent_dim() + static_cast<Eigen::Index>(k)) = 1.0;
        return J;
    }

private:
    std::shared_ptr<Decoder> core_;
    std::vector<int> core_slots_;
    std::vector<int> extra_slots_;
    int full_;
};

class AeDecoder final : public Decoder {
public:
    explicit AeDecoder(std::shared_ptr<const AutoencoderModel> m)
        : m_(std::move(m)) {}
    int latent_dim() const override { return m_->latent_dim; }
    int full_dim() const override { return m_->full_dim; }
    Vec decode(const Vec& z) const override { return m_->decode(z); }
    Vec encode(const Vec& x) const override { return m_->encode(x); }
    Mat jacobian(const Vec& z) const override { return m_->decoder_jacobian(z); }

private:
    std::shared_ptr<const AutoencoderModel> m_;
};

CompatibilityMatrix build_latent_constraints(
    const PortSet& ports, const SubdomainStateMap& map,
    const std::vector<int>& port_latent_dim,
    std::vector<std::vector<int>>& latent_port_offsets,
    std::vector<int>& latent_interface_dim) {
    const int n_sub = static_cast<int>(map.subs.size());
    latent_port_offsets.assign(static_cast<size_t>(n_sub), {});
    latent_interface_dim.assign(static_cast<size_t>(n_sub), 0);
    for (int s = 0; s < n_sub; ++s) {
        int off = 0;
        for (int pid : map.subs[static_cast<size_t>(s)].port_ids) {
            latent_port_offsets[static_cast<size_t>(s)].push_back(off);
            off += port_latent_dim[static_cast<size_t>(pid)];
        }
        latent_interface_dim[static_cast<size_t>(s)] = off;
    }

    CompatibilityMatrix C;
    int n_rows = 0;
    for (size_t p = 0; p < ports.ports.size(); ++p)
        n_rows += (static_cast<int>(ports.ports[p].sharing.size()) - 1) *
                  port_latent_dim[p];
    C.n_rows = n_rows;

    std::vector<std::vector<Triplet>> trips(static_cast<size_t>(n_sub));
    auto offset_of = [&](int s, int pid) {
        const auto& sub = map.subs[static_cast<size_t>(s)];
        for (size_t k = 0; k < sub.port_ids.size(); ++k)
            if (sub.port_ids[k] == pid)
                return latent_port_offsets[static_cast<size_t>(s)][k];
        throw std::logic_error("latent constraints: port not wired");
    };
    int row = 0;
    for (size_t pid = 0; pid < ports.ports.size(); ++pid) {
        const auto& p = ports.ports[pid];
        const int dim = port_latent_dim[pid];
        for (size_t c = 0; c + 1 < p.sharing.size(); ++c) {
            const int sa = p.sharing[c];
            const int sb = p.sharing[c + 1];
            const int offa = offset_of(sa, static_cast<int>(pid));
            const int offb = offset_of(sb, static_cast<int>(pid));
            for (int d = 0; d < dim; ++d) {
                trips[static_cast<size_t>(sa)].emplace_back(row + d, offa + d, 1.0);
                trips[static_cast<size_t>(sb)].emplace_back(row + d, offb + d, -1.0);
            }
            row += dim;
        }
    }
    for (int s = 0; s < n_sub; ++s) {
        SpMat A(n_rows, latent_interface_dim[static_cast<size_t>(s)]);
        A.setFromTriplets(trips[static_cast<size_t>(s)].begin(),
                          trips[static_cast<size_t>(s)].end());
        C.A.push_back(std::move(A));
    }
    return C;
}

}  // namespace

std::shared_ptr<Decoder> make_identity_decoder(int dim) {
    return std::make_shared<IdentityDecoder>(dim);
}

std::shared_ptr<Decoder> make_ae_decoder(
    std::shared_ptr<const AutoencoderModel> model) {
    return std::make_shared<AeDecoder>(std::move(model));
}

int DdNmRom::total_unknowns() const {
    int n = 0;
    for (size_t s = 0; s < maps.state_map.subs.size(); ++s)
        n += sub_interior_dec[s]->latent_dim() + latent_interface_dim[s];
    return n;
}

DdNmRom assemble_rom(const Grid2D& grid, const SubdomainLayout& layout,
                     const StateMaps& maps, const BurgersParams& params,
                     std::shared_ptr<Decoder> interior,
                     std::shared_ptr<Decoder> vertical,
                     std::shared_ptr<Decoder> horizontal) {
    DdNmRom rom;
    rom.grid = grid;
    rom.layout = layout;
    rom.maps = maps;
    rom.params = params;
    rom.interior_dec = std::move(interior);

    // Per-subdomain interior decoders. Where the shared decoder covers the
    // whole interior it is used directly; where the interior is larger
    // (unshared block-perimeter DOFs on domain walls), the shared decoder is
    // applied to the block-core pattern and the rest pass through at full
    // order. Anything else is a dimension mismatch.
    const int nn = grid.num_nodes();
    for (int i = 0; i < layout.n_omega; ++i) {
        const int n_int = maps.state_map.n_interior(i);
        if (n_int == rom.interior_dec->full_dim()) {
            rom.sub_interior_dec.push_back(rom.interior_dec);
            continue;
        }
        const auto& interior_dofs = maps.state_map.subs[static_cast<size_t>(i)].interior;
        std::vector<int> core_slots;
        for (size_t k = 0; k < interior_dofs.size(); ++k) {
            const int node = interior_dofs[k] % nn;
            const int lx = (node % grid.nx) % layout.block_nx;
            const int ly = (node / grid.nx) % layout.block_ny;
            if (lx >= 1 && lx <= layout.block_nx - 2 && ly >= 1 &&
                ly <= layout.block_ny - 2)
                core_slots.push_back(static_cast<int>(k));
        }
        if (static_cast<int>(core_slots.size()) != rom.interior_dec->full_dim())
            throw std::invalid_argument(
                "assemble_rom: interior decoder dimension mismatch");
        rom.sub_interior_dec.push_back(std::make_shared<AugmentedInteriorDecoder>(
            rom.interior_dec, std::move(core_slots), n_int));
    }
    if (maps.ports.num_vertical > 0 &&
        (!vertical || vertical->full_dim() != maps.ports.vertical_dim))
        throw std::invalid_argument("assemble_rom: vertical port decoder mismatch");
    if (maps.ports.num_horizontal > 0 &&
        (!horizontal || horizontal->full_dim() != maps.ports.horizontal_dim))
        throw std::invalid_argument("assemble_rom: horizontal port decoder mismatch");

    rom.port_dec.reserve(maps.ports.ports.size());
    rom.port_latent_dim.reserve(maps.ports.ports.size());
    for (const auto& p : maps.ports.ports) {
        std::shared_ptr<Decoder> d;
        switch (p.kind) {
            case PortKind::VerticalEdge: d = vertical; break;
            case PortKind::HorizontalEdge: d = horizontal; break;
            case PortKind::Corner: d = make_identity_decoder(p.dim()); break;
        }
        rom.port_dec.push_back(d);
        rom.port_latent_dim.push_back(d->latent_dim());
    }
    rom.latent_constraints = build_latent_constraints(
        maps.ports, maps.state_map, rom.port_latent_dim,
        rom.latent_port_offsets, rom.latent_interface_dim);
    return rom;
}

DdNmRom compose(int blocks_x, int blocks_y, BcKind bc, int block_nx,
                int block_ny, double block_w, double block_h,
                const BurgersParams& params,
                std::shared_ptr<Decoder> interior,
                std::shared_ptr<Decoder> vertical,
                std::shared_ptr<Decoder> horizontal,
                int expected_interior_full_dim, int expected_vertical_dim,
                int expected_horizontal_dim) {
    Grid2D grid = build_grid(blocks_x * block_nx, blocks_y * block_ny, 0.0,
                             blocks_x * block_w, 0.0, blocks_y * block_h, bc);
    SubdomainLayout layout = partition(grid, blocks_x, blocks_y);
    StateMaps maps = classify_states(layout, grid);
    // The shared interior model covers the block-core pattern; subdomains
    // with unshared wall strips are augmented in assemble_rom.
    if (2 * (block_nx - 2) * (block_ny - 2) != expected_interior_full_dim)
        throw std::invalid_argument("compose: block size incompatible with trained interior model");
    if (maps.ports.num_vertical > 0 && maps.ports.vertical_dim != expected_vertical_dim)
        throw std::invalid_argument("compose: vertical port dimension mismatch");
    if (maps.ports.num_horizontal > 0 && maps.ports.horizontal_dim != expected_horizontal_dim)
        throw std::invalid_argument("compose: horizontal port dimension mismatch");
    return assemble_rom(grid, layout, maps, params, std::move(interior),
                        std::move(vertical), std::move(horizontal));
}

RomEvaluator::RomEvaluator(const DdNmRom& rom) : rom_(&rom) {
    residuals_.reserve(static_cast<size_t>(rom.layout.n_omega));
    for (int i = 0; i < rom.layout.n_omega; ++i)
        residuals_.emplace_back(i, rom.layout, rom.maps.state_map, rom.grid,
                                rom.params);
}

int RomEvaluator::block_dim(int i) const {
    return rom_->sub_interior_dec[static_cast<size_t>(i)]->latent_dim() +
           rom_->latent_interface_dim[static_cast<size_t>(i)];
}

void RomEvaluator::decode_block(int i, const Vec& q, Vec& x_int,
                                Vec& x_gam) const {
    const auto& idec = *rom_->sub_interior_dec[static_cast<size_t>(i)];
    const int nI = idec.latent_dim();
    x_int = idec.decode(q.head(nI));
    const auto& sub = rom_->maps.state_map.subs[static_cast<size_t>(i)];
    x_gam.resize(rom_->maps.state_map.n_interface(i));
    for (size_t k = 0; k < sub.port_ids.size(); ++k) {
        const int pid = sub.port_ids[k];
        const auto& dec = *rom_->port_dec[static_cast<size_t>(pid)];
        const int loff = rom_->latent_port_offsets[static_cast<size_t>(i)][k];
        const Vec z = q.segment(nI + loff, dec.latent_dim());
        x_gam.segment(sub.port_offsets[k], dec.full_dim()) = dec.decode(z);
    }
}

RomBlockEval RomEvaluator::eval(int i, const Vec& q, const Vec& prev_int,
                                const Vec& prev_gam) const {
    const auto& idec = *rom_->sub_interior_dec[static_cast<size_t>(i)];
    const int nI = idec.latent_dim();
    const auto& sub = rom_->maps.state_map.subs[static_cast<size_t>(i)];

    Vec x_int, x_gam;
    decode_block(i, q, x_int, x_gam);
    Mat J_int_lat = idec.jacobian(q.head(nI));

    Vec r;
    SpMat J_int, J_gam;
    residuals_[static_cast<size_t>(i)].eval(x_int, x_gam, prev_int, prev_gam, r,
                                            J_int, J_gam);

    RomBlockEval out;
    out.r = std::move(r);
    out.J.resize(out.r.size(), block_dim(i));
    out.J.leftCols(nI) = J_int * J_int_lat;
    for (size_t k = 0; k < sub.port_ids.size(); ++k) {
        const int pid = sub.port_ids[k];
        const auto& dec = *rom_->port_dec[static_cast<size_t>(pid)];
        const int loff = rom_->latent_port_offsets[static_cast<size_t>(i)][k];
        const Vec z = q.segment(nI + loff, dec.latent_dim());
        out.J.middleCols(nI + loff, dec.latent_dim()) =
            J_gam.middleCols(sub.port_offsets[k], dec.full_dim()) * dec.jacobian(z);
    }
    return out;
}

RomSolveResult rom_solve(const DdNmRom& rom, const Vec& x0,
                         const RomOptions& options) {
    RomEvaluator ev(rom);
    const int n_sub = rom.layout.n_omega;
    const auto& map = rom.maps.state_map;
    auto nI_of = [&](int i) {
        return rom.sub_interior_dec[static_cast<size_t>(i)]->latent_dim();
    };

    // Initial latents: encoders on the gathered initial condition. Each
    // port is encoded once from the monolithic state, so all copies start
    // identical and the latent constraint holds at step 0.
    std::vector<Vec> port_z0(rom.maps.ports.ports.size());
    for (size_t pid = 0; pid < rom.maps.ports.ports.size(); ++pid) {
        const auto& dofs = rom.maps.ports.ports[pid].dofs;
        Vec xp(static_cast<Eigen::Index>(dofs.size()));
        for (size_t d = 0; d < dofs.size(); ++d) xp[static_cast<Eigen::Index>(d)] = x0[dofs[d]];
        port_z0[pid] = rom.port_dec[pid]->encode(xp);
    }
    SubdomainVectors g0 = gather(x0, map);
    std::vector<Vec> q(static_cast<size_t>(n_sub));
    for (int i = 0; i < n_sub; ++i) {
        const int nI = nI_of(i);
        Vec qi(ev.block_dim(i));
        qi.head(nI) = rom.sub_interior_dec[static_cast<size_t>(i)]->encode(
            g0.interior[static_cast<size_t>(i)]);
        const auto& sub = map.subs[static_cast<size_t>(i)];
        for (size_t k = 0; k < sub.port_ids.size(); ++k)
            qi.segment(nI + rom.latent_port_offsets[static_cast<size_t>(i)][k],
                       rom.port_latent_dim[static_cast<size_t>(sub.port_ids[k])]) =
                port_z0[static_cast<size_t>(sub.port_ids[k])];
        q[static_cast<size_t>(i)] = std::move(qi);
    }

    // Previous-step full states live as decoded latents.
    std::vector<Vec> prev_int(static_cast<size_t>(n_sub)),
        prev_gam(static_cast<size_t>(n_sub));
    auto decode_prev = [&](const std::vector<Vec>& latents, double& tmax) {
        tmax = 0.0;
        for (int i = 0; i < n_sub; ++i) {
            const double t0 = now_seconds();
            ev.decode_block(i, latents[static_cast<size_t>(i)],
                            prev_int[static_cast<size_t>(i)],
                            prev_gam[static_cast<size_t>(i)]);
            tmax = std::max(tmax, now_seconds() - t0);
        }
    };

    ConstrainedLsProblem problem;
    problem.h = rom.grid.hx * rom.grid.hy;
    problem.n_con = rom.latent_constraints.n_rows;
    problem.blocks.resize(static_cast<size_t>(n_sub));
    for (int i = 0; i < n_sub; ++i) {
        auto& b = problem.blocks[static_cast<size_t>(i)];
        b.dim = ev.block_dim(i);
        // C_i = [0 | A_hat_i]
        const int nI = nI_of(i);
        const SpMat& A = rom.latent_constraints.A[static_cast<size_t>(i)];
        std::vector<Triplet> trips;
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()),
                                   nI + static_cast<int>(it.col()), it.value());
        b.C.resize(rom.latent_constraints.n_rows, b.dim);
        b.C.setFromTriplets(trips.begin(), trips.end());
        b.eval = [&ev, &prev_int, &prev_gam, i](const Vec& qq, Vec& r, SpMat& J) {
            RomBlockEval be = ev.eval(i, qq, prev_int[static_cast<size_t>(i)],
                                      prev_gam[static_cast<size_t>(i)]);
            r = std::move(be.r);
            J = be.J.sparseView();
        };
    }

    RomSolveResult out;
    out.latents.steps.push_back(q);
    double tdec = 0.0;
    decode_prev(q, tdec);
    out.local_time += tdec;

    // Step-0 entry of the output trajectory is the decoded initial latents.
    {
        SubdomainVectors sv;
        sv.interior = prev_int;
        sv.interface = prev_gam;
        out.decoded.push_back(scatter(sv, map, rom.grid.num_dofs(), 1e-5));
    }

    for (int k = 1; k <= rom.params.Nt; ++k) {
        SqpResult step = solve_step(problem, q, options.sqp);
        if (!step.converged)
            throw std::runtime_error("rom_solve: SQP did not converge at step " +
                                     std::to_string(k));
        out.local_time += step.local_time;
        out.global_time += step.global_time;
        out.max_constraint_violation =
            std::max(out.max_constraint_violation, step.constraint_violation);
        q = step.solution;
        out.latents.steps.push_back(q);
        decode_prev(q, tdec);
        out.local_time += tdec;

        SubdomainVectors sv;
        sv.interior = prev_int;
        sv.interface = prev_gam;
        out.decoded.push_back(scatter(sv, map, rom.grid.num_dofs(), 1e-5));
        step.solution.clear();
        out.steps.push_back(std::move(step));
    }
    return out;
}

}  // namespace ddrom
