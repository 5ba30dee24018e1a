#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddrom/burgers.hpp"
#include "ddrom/metrics.hpp"
#include "ddrom/nmrom.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/reference.hpp"

#include <Eigen/Dense>
#include <random>

using namespace ddrom;

namespace {

AutoencoderModel random_model(int full, int latent, int hidden, int band_size,
                              int spacing, unsigned seed) {
    AutoencoderModel m;
    m.full_dim = full;
    m.latent_dim = latent;
    m.hidden = hidden;
    m.norm.shift = Vec::Zero(full);
    m.norm.scale = Vec::Ones(full);
    m.mask_in = build_triband_mask(hidden, full, band_size, spacing);
    m.mask_out = m.mask_in.transposed();
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd(0.0, 0.4);
    m.w_in.resize(static_cast<size_t>(m.mask_in.nnz()));
    for (auto& w : m.w_in) w = nd(rng);
    m.w_out.resize(static_cast<size_t>(m.mask_out.nnz()));
    for (auto& w : m.w_out) w = nd(rng);
    m.b_in = Vec::NullaryExpr(hidden, [&](Eigen::Index) { return nd(rng); });
    m.b_hid = Vec::NullaryExpr(hidden, [&](Eigen::Index) { return nd(rng); });
    m.w_lat = RowMat::NullaryExpr(latent, hidden, [&](Eigen::Index, Eigen::Index) { return nd(rng); });
    m.w_hid = RowMat::NullaryExpr(hidden, latent, [&](Eigen::Index, Eigen::Index) { return nd(rng); });
    return m;
}

struct DdSetup {
    Grid2D grid;
    SubdomainLayout layout;
    StateMaps maps;

    DdSetup(int nx, int ny, int bx, int by, BcKind bc) {
        grid = build_grid(nx, ny, 0.0, 1.0, 0.0, 1.0, bc);
        layout = partition(grid, bx, by);
        maps = classify_states(layout, grid);
    }
};

DdNmRom identity_rom(const DdSetup& s, const BurgersParams& p) {
    return assemble_rom(s.grid, s.layout, s.maps, p,
                        make_identity_decoder(s.maps.state_map.n_interior(0)),
                        make_identity_decoder(s.maps.ports.vertical_dim),
                        make_identity_decoder(s.maps.ports.horizontal_dim));
}

}  // namespace

TEST_CASE("identity decoders: latent bookkeeping mirrors the full-order DD") {
    DdSetup s(8, 8, 2, 2, BcKind::Periodic);
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    DdNmRom rom = identity_rom(s, p);

    // With identity decoders every latent dimension equals its full dimension.
    int full_unknowns = 0;
    for (int i = 0; i < s.layout.n_omega; ++i)
        full_unknowns += s.maps.state_map.n_interior(i) + s.maps.state_map.n_interface(i);
    CHECK(rom.total_unknowns() == full_unknowns);
    for (size_t pid = 0; pid < s.maps.ports.ports.size(); ++pid)
        CHECK(rom.port_latent_dim[pid] == s.maps.ports.ports[pid].dim());
    for (int i = 0; i < s.layout.n_omega; ++i) {
        CHECK(rom.sub_interior_dec[static_cast<size_t>(i)]->latent_dim() ==
              s.maps.state_map.n_interior(i));
        CHECK(rom.latent_interface_dim[static_cast<size_t>(i)] ==
              s.maps.state_map.n_interface(i));
    }

    // Latent constraints replicate the full chain-of-pairs structure.
    CompatibilityMatrix C = build_constraints(s.maps.ports, s.maps.state_map);
    CHECK(rom.latent_constraints.n_rows == C.n_rows);
    for (int i = 0; i < s.layout.n_omega; ++i) {
        Mat a = Mat(rom.latent_constraints.A[static_cast<size_t>(i)]);
        Mat b = Mat(C.A[static_cast<size_t>(i)]);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }

    // Dimension mismatches are hard errors.
    CHECK_THROWS_AS(
        assemble_rom(s.grid, s.layout, s.maps, p,
                     make_identity_decoder(s.maps.state_map.n_interior(0) + 2),
                     make_identity_decoder(s.maps.ports.vertical_dim),
                     make_identity_decoder(s.maps.ports.horizontal_dim)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        assemble_rom(s.grid, s.layout, s.maps, p,
                     make_identity_decoder(s.maps.state_map.n_interior(0)),
                     make_identity_decoder(s.maps.ports.vertical_dim - 2),
                     make_identity_decoder(s.maps.ports.horizontal_dim)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        assemble_rom(s.grid, s.layout, s.maps, p,
                     make_identity_decoder(s.maps.state_map.n_interior(0)),
                     make_identity_decoder(s.maps.ports.vertical_dim), nullptr),
        std::invalid_argument);
}

TEST_CASE("identity decoders: ROM block residual equals the subdomain residual") {
    DdSetup s(8, 8, 2, 2, BcKind::Periodic);
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    DdNmRom rom = identity_rom(s, p);
    RomEvaluator ev(rom);

    std::mt19937 rng(11);
    std::normal_distribution<double> nd(0.0, 0.5);
    for (int i = 0; i < s.layout.n_omega; ++i) {
        const int nI = s.maps.state_map.n_interior(i);
        const int nG = s.maps.state_map.n_interface(i);
        Vec q = Vec::NullaryExpr(nI + nG, [&](Eigen::Index) { return nd(rng); });
        Vec prev_int = Vec::NullaryExpr(nI, [&](Eigen::Index) { return nd(rng); });
        Vec prev_gam = Vec::NullaryExpr(nG, [&](Eigen::Index) { return nd(rng); });

        RomBlockEval be = ev.eval(i, q, prev_int, prev_gam);
        Vec r;
        SpMat J_int, J_gam;
        ev.residual(i).eval(q.head(nI), q.tail(nG), prev_int, prev_gam, r, J_int, J_gam);
        CHECK((be.r - r).cwiseAbs().maxCoeff() == 0.0);
        Mat J_full(r.size(), nI + nG);
        J_full.leftCols(nI) = Mat(J_int);
        J_full.rightCols(nG) = Mat(J_gam);
        CHECK((be.J - J_full).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("autoencoder decoders: latent residual Jacobian matches finite differences") {
    DdSetup s(8, 8, 2, 2, BcKind::Periodic);
    BurgersParams p = make_params(1e-2, 0.05, 0.1);
    const int nI = s.maps.state_map.n_interior(0);
    REQUIRE(s.maps.ports.vertical_dim == 8);
    REQUIRE(s.maps.ports.horizontal_dim == 8);

    auto interior = std::make_shared<AutoencoderModel>(random_model(nI, 3, 16, 2, 3, 5));
    auto vport = std::make_shared<AutoencoderModel>(random_model(8, 2, 12, 2, 3, 6));
    auto hport = std::make_shared<AutoencoderModel>(random_model(8, 2, 12, 2, 3, 7));
    DdNmRom rom = assemble_rom(s.grid, s.layout, s.maps, p,
                               make_ae_decoder(interior), make_ae_decoder(vport),
                               make_ae_decoder(hport));
    RomEvaluator ev(rom);

    std::mt19937 rng(21);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (int i = 0; i < s.layout.n_omega; ++i) {
        Vec q = Vec::NullaryExpr(ev.block_dim(i), [&](Eigen::Index) { return nd(rng); });
        Vec prev_int = Vec::NullaryExpr(s.maps.state_map.n_interior(i),
                                        [&](Eigen::Index) { return nd(rng); });
        Vec prev_gam = Vec::NullaryExpr(s.maps.state_map.n_interface(i),
                                        [&](Eigen::Index) { return nd(rng); });
        RomBlockEval be = ev.eval(i, q, prev_int, prev_gam);
        Mat J_fd = reference::fd_jacobian(
            [&](const Vec& qq) { return ev.eval(i, qq, prev_int, prev_gam).r; }, q);
        CHECK((be.J - J_fd).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("wall blocks: shared decoder is augmented with pass-through interior DOFs") {
    // Under Neumann every 2x2 block touches the domain wall; the unshared
    // wall-strip DOFs stay at full order while the shared model covers the
    // block core.
    DdSetup s(8, 8, 2, 2, BcKind::HomogeneousNeumann);
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    const int core_dim = 2 * 2 * 2;  // 2x2 core nodes per 4x4 block, u and v
    for (int i = 0; i < s.layout.n_omega; ++i)
        CHECK(s.maps.state_map.n_interior(i) > core_dim);

    DdNmRom rom = assemble_rom(s.grid, s.layout, s.maps, p,
                               make_identity_decoder(core_dim),
                               make_identity_decoder(s.maps.ports.vertical_dim),
                               make_identity_decoder(s.maps.ports.horizontal_dim));
    std::mt19937 rng(31);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int i = 0; i < s.layout.n_omega; ++i) {
        const auto& dec = *rom.sub_interior_dec[static_cast<size_t>(i)];
        CHECK(dec.full_dim() == s.maps.state_map.n_interior(i));
        CHECK(dec.latent_dim() == s.maps.state_map.n_interior(i));
        // Identity core + identity pass-through: a lossless permutation.
        Vec x = Vec::NullaryExpr(dec.full_dim(), [&](Eigen::Index) { return nd(rng); });
        CHECK((dec.decode(dec.encode(x)) - x).cwiseAbs().maxCoeff() == 0.0);
        Vec z = dec.encode(x);
        Mat J = dec.jacobian(z);
        Mat J_fd = reference::fd_jacobian(
            [&](const Vec& zz) { return dec.decode(zz); }, z);
        CHECK((J - J_fd).cwiseAbs().maxCoeff() < 1e-9);
    }

    // A nonlinear core decoder on the same layout: FD-check the augmented
    // Jacobian and the exact pass-through of wall values.
    auto core = std::make_shared<AutoencoderModel>(random_model(core_dim, 3, 12, 2, 2, 9));
    DdNmRom rom2 = assemble_rom(s.grid, s.layout, s.maps, p, make_ae_decoder(core),
                                make_identity_decoder(s.maps.ports.vertical_dim),
                                make_identity_decoder(s.maps.ports.horizontal_dim));
    for (int i = 0; i < s.layout.n_omega; ++i) {
        const auto& dec = *rom2.sub_interior_dec[static_cast<size_t>(i)];
        const int n_extra = s.maps.state_map.n_interior(i) - core_dim;
        CHECK(dec.latent_dim() == 3 + n_extra);
        Vec z = Vec::NullaryExpr(dec.latent_dim(), [&](Eigen::Index) { return nd(rng); });
        Vec x = dec.decode(z);
        // Pass-through slots return their latent values on re-encode.
        CHECK((dec.encode(x).tail(n_extra) - z.tail(n_extra)).cwiseAbs().maxCoeff() == 0.0);
        Mat J_fd = reference::fd_jacobian(
            [&](const Vec& zz) { return dec.decode(zz); }, z);
        CHECK((dec.jacobian(z) - J_fd).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("compose: training wiring reproduced, deployment layouts counted, mismatches rejected") {
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    const int core_dim = 2 * 2 * 2;
    auto mk = [&] {
        return std::make_tuple(make_identity_decoder(core_dim),
                               make_identity_decoder(8), make_identity_decoder(8));
    };

    // 2x2 periodic composition reproduces the training-domain wiring.
    {
        auto [di, dv, dh] = mk();
        DdNmRom rom = compose(2, 2, BcKind::Periodic, 4, 4, 0.5, 0.5, p, di, dv, dh,
                              core_dim, 8, 8);
        DdSetup ref(8, 8, 2, 2, BcKind::Periodic);
        CHECK(rom.grid.nx == 8);
        CHECK(rom.grid.hx == doctest::Approx(ref.grid.hx).epsilon(1e-15));
        CHECK(rom.maps.ports.num_vertical == ref.maps.ports.num_vertical);
        CHECK(rom.maps.ports.num_horizontal == ref.maps.ports.num_horizontal);
        CHECK(rom.maps.ports.num_corner == ref.maps.ports.num_corner);
        CHECK(rom.latent_constraints.n_rows ==
              build_constraints(ref.maps.ports, ref.maps.state_map).n_rows);
    }

    // 4x4 Neumann deployment: 2*4*3 edge ports; corner ports cover exactly
    // the interface nodes left over by the trimmed edge ports (checked
    // against the brute-force sharing oracle).
    {
        auto [di, dv, dh] = mk();
        DdNmRom rom = compose(4, 4, BcKind::HomogeneousNeumann, 4, 4, 0.5, 0.5, p,
                              di, dv, dh, core_dim, 8, 8);
        CHECK(rom.grid.bc == BcKind::HomogeneousNeumann);
        CHECK(rom.grid.x1 == doctest::Approx(2.0));
        CHECK(rom.layout.n_omega == 16);
        CHECK(rom.maps.ports.num_vertical == 12);
        CHECK(rom.maps.ports.num_horizontal == 12);
        CHECK(rom.maps.ports.vertical_dim == 8);
        CHECK(rom.maps.ports.horizontal_dim == 8);

        auto sharing = reference::node_sharing_sets(rom.grid, rom.layout);
        int shared_nodes = 0;
        for (const auto& ss : sharing) shared_nodes += ss.size() >= 2 ? 1 : 0;
        int edge_nodes = 0;
        for (const auto& port : rom.maps.ports.ports)
            if (port.kind != PortKind::Corner)
                edge_nodes += port.dim() / 2;
        CHECK(rom.maps.ports.num_corner == shared_nodes - edge_nodes);
        for (const auto& port : rom.maps.ports.ports)
            if (port.kind == PortKind::Corner) {
                CHECK(port.dim() == 2);
                const auto& ss = sharing[static_cast<size_t>(port.dofs[0])];
                CHECK(std::vector<int>(ss.begin(), ss.end()) == port.sharing);
            }

        // Interior decoders: interior blocks use the shared model directly,
        // wall blocks are augmented.
        for (int by = 0; by < 4; ++by)
            for (int bx = 0; bx < 4; ++bx) {
                const auto& dec = *rom.sub_interior_dec[static_cast<size_t>(by * 4 + bx)];
                const bool wall = bx == 0 || bx == 3 || by == 0 || by == 3;
                if (wall)
                    CHECK(dec.latent_dim() > core_dim);
                else
                    CHECK(dec.latent_dim() == core_dim);
                CHECK(dec.full_dim() ==
                      rom.maps.state_map.n_interior(by * 4 + bx));
            }
    }

    // Dimension mismatches are hard errors.
    {
        auto [di, dv, dh] = mk();
        CHECK_THROWS_AS(compose(4, 4, BcKind::HomogeneousNeumann, 4, 4, 0.5, 0.5, p,
                                di, dv, dh, core_dim + 2, 8, 8),
                        std::invalid_argument);
    }
    {
        auto [di, dv, dh] = mk();
        CHECK_THROWS_AS(compose(4, 4, BcKind::HomogeneousNeumann, 4, 4, 0.5, 0.5, p,
                                di, dv, dh, core_dim, 10, 8),
                        std::invalid_argument);
    }
    {
        auto [di, dv, dh] = mk();
        CHECK_THROWS_AS(compose(4, 4, BcKind::HomogeneousNeumann, 6, 4, 0.5, 0.5, p,
                                di, dv, dh, core_dim, 8, 8),
                        std::invalid_argument);
    }
}

TEST_CASE("identity-decoder ROM reproduces the DD FOM time loop") {
    DdSetup s(16, 16, 2, 2, BcKind::Periodic);
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    p.Nt = 5;
    Vec mu(4);
    mu << 1.0, 0.8, 0.9, 1.2;
    Vec x0 = initial_condition(s.grid, s.layout, mu);

    CompatibilityMatrix C = build_constraints(s.maps.ports, s.maps.state_map);
    DdFomContext ctx{&s.grid, &s.layout, &s.maps, &C, p};
    SqpOptions fom_opts;
    DdSolveResult fom = dd_fom_solve(ctx, x0, fom_opts);

    DdNmRom rom = identity_rom(s, p);
    RomSolveResult rr = rom_solve(rom, x0, RomOptions{});

    REQUIRE(rr.decoded.size() == static_cast<size_t>(p.Nt + 1));
    REQUIRE(rr.latents.steps.size() == static_cast<size_t>(p.Nt + 1));
    CHECK(rr.max_constraint_violation <= 1e-8);
    CHECK((rr.decoded[0] - x0).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 0; k <= p.Nt; ++k)
        CHECK((rr.decoded[static_cast<size_t>(k)] - fom.trajectory[static_cast<size_t>(k)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);

    // Latent port copies agree across sharers at every step (SRPC).
    for (const auto& step : rr.latents.steps) {
        for (size_t pid = 0; pid < rom.maps.ports.ports.size(); ++pid) {
            const auto& port = rom.maps.ports.ports[pid];
            const int dim = rom.port_latent_dim[pid];
            Vec z_first;
            for (int sidx : port.sharing) {
                const auto& sub = rom.maps.state_map.subs[static_cast<size_t>(sidx)];
                int k = 0;
                while (sub.port_ids[static_cast<size_t>(k)] != static_cast<int>(pid)) ++k;
                const int nI = rom.sub_interior_dec[static_cast<size_t>(sidx)]->latent_dim();
                Vec z = step[static_cast<size_t>(sidx)].segment(
                    nI + rom.latent_port_offsets[static_cast<size_t>(sidx)][static_cast<size_t>(k)], dim);
                if (z_first.size() == 0)
                    z_first = z;
                else
                    CHECK((z - z_first).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
    }
}

TEST_CASE("identity-decoder ROM on a composed Neumann domain matches the monolithic FOM") {
    BurgersParams p = make_params(1e-3, 0.02, 0.1);
    p.Nt = 5;
    const int core_dim = 2 * 2 * 2;
    DdNmRom rom = compose(2, 2, BcKind::HomogeneousNeumann, 4, 4, 0.5, 0.5, p,
                          make_identity_decoder(core_dim), make_identity_decoder(8),
                          make_identity_decoder(8), core_dim, 8, 8);
    Vec mu = Vec::Ones(4);
    Vec x0 = initial_condition(rom.grid, rom.layout, mu);

    RomSolveResult rr = rom_solve(rom, x0, RomOptions{});
    MonolithicSolveResult mono = solve_monolithic(p, rom.grid, x0);
    REQUIRE(mono.all_converged);
    for (int k = 0; k <= p.Nt; ++k)
        CHECK((rr.decoded[static_cast<size_t>(k)] - mono.trajectory[static_cast<size_t>(k)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);

    ErrorReport err = linf_l2_error(mono.trajectory, rr.decoded,
                                    rom.maps.state_map, rom.grid, rom.layout.n_omega);
    CHECK(err.e_abs < 1e-8);
    CHECK(err.e_rel < 1e-6);
}
