#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddrom/burgers.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/reference.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace ddrom;

namespace {

Vec random_state(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vec x(n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = d(rng);
    return x;
}

// Interface DOFs from the brute-force sharing-set oracle (node shared by
// >= 2 subdomains), as a sorted list of global DOF indices.
std::vector<int> oracle_interface(const Grid2D& g, const SubdomainLayout& layout) {
    auto sharing = reference::node_sharing_sets(g, layout);
    std::vector<int> out;
    const int n = g.num_nodes();
    for (int c = 0; c < n; ++c)
        if (sharing[static_cast<size_t>(c)].size() >= 2) {
            out.push_back(c);
            out.push_back(n + c);
        }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("partition row counts") {
    auto g = build_grid(100, 100, 0, 1, 0, 1, BcKind::Periodic);
    auto layout = partition(g, 2, 2);
    CHECK(layout.n_omega == 4);
    CHECK(layout.block_nx == 50);
    int total = 0;
    for (const auto& rows : layout.residual_rows) {
        CHECK(static_cast<int>(rows.size()) == 5000);
        total += static_cast<int>(rows.size());
    }
    CHECK(total == g.num_dofs());

    auto g5 = build_grid(500, 500, 0, 5, 0, 5, BcKind::HomogeneousNeumann);
    auto l5 = partition(g5, 10, 10);
    CHECK(l5.n_omega == 100);
    CHECK(l5.block_nx == 50);
    CHECK(l5.block_ny == 50);

    CHECK_THROWS(partition(g, 3, 2));  // 100 not divisible by 3
}

TEST_CASE("1x1 layout is degenerate") {
    auto g = build_grid(4, 4, 0, 1, 0, 1, BcKind::Periodic);
    auto layout = partition(g, 1, 1);
    auto maps = classify_states(layout, g);
    CHECK(maps.ports.ports.empty());
    CHECK(maps.state_map.n_interior(0) == g.num_dofs());
    CHECK(maps.state_map.n_interface(0) == 0);
    auto con = build_constraints(maps.ports, maps.state_map);
    CHECK(con.n_rows == 0);
}

TEST_CASE("1x2 Neumann 8x8: one vertical port of dimension 32") {
    auto g = build_grid(8, 8, 0, 1, 0, 1, BcKind::HomogeneousNeumann);
    auto layout = partition(g, 2, 1);
    auto maps = classify_states(layout, g);
    CHECK(maps.ports.num_vertical == 1);
    CHECK(maps.ports.num_horizontal == 0);
    CHECK(maps.ports.num_corner == 0);
    CHECK(maps.ports.ports[0].dim() == 32);
    CHECK(maps.state_map.n_interface(0) == 32);
    CHECK(maps.state_map.n_interface(1) == 32);
}

TEST_CASE("classification matches the sharing-set oracle") {
    struct Case {
        int nx, ny, bx, by;
        BcKind bc;
    };
    for (auto c : {Case{8, 8, 2, 2, BcKind::Periodic},
                   Case{8, 8, 2, 2, BcKind::HomogeneousNeumann},
                   Case{12, 12, 4, 4, BcKind::HomogeneousNeumann},
                   Case{12, 8, 3, 2, BcKind::Periodic},
                   Case{8, 8, 2, 1, BcKind::HomogeneousNeumann}}) {
        CAPTURE(c.nx);
        CAPTURE(c.bx);
        CAPTURE(static_cast<int>(c.bc));
        auto g = build_grid(c.nx, c.ny, 0, 1, 0, 1, c.bc);
        auto layout = partition(g, c.bx, c.by);
        auto maps = classify_states(layout, g);
        auto sharing = reference::node_sharing_sets(g, layout);

        // union of ports == oracle interface set, pairwise disjoint
        std::vector<int> port_dofs;
        for (const auto& p : maps.ports.ports) {
            CHECK(p.sharing.size() >= 2);
            for (int d : p.dofs) port_dofs.push_back(d);
        }
        std::vector<int> sorted = port_dofs;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
        CHECK(sorted == oracle_interface(g, layout));

        // every port's sharing set matches the oracle on all its nodes
        const int n = g.num_nodes();
        for (const auto& p : maps.ports.ports)
            for (int d : p.dofs) {
                const int node = d % n;
                std::vector<int> want(sharing[static_cast<size_t>(node)].begin(),
                                      sharing[static_cast<size_t>(node)].end());
                CHECK(p.sharing == want);
            }

        // interior DOFs are owned and referenced by one subdomain only
        for (int s = 0; s < layout.n_omega; ++s)
            for (int d : maps.state_map.subs[static_cast<size_t>(s)].interior) {
                const int node = d % n;
                CHECK(sharing[static_cast<size_t>(node)].size() == 1);
                CHECK(layout.node_owner[static_cast<size_t>(node)] == s);
            }

        // edge ports of one orientation share a single dimension
        for (const auto& p : maps.ports.ports) {
            if (p.kind == PortKind::VerticalEdge)
                CHECK(p.dim() == maps.ports.vertical_dim);
            if (p.kind == PortKind::HorizontalEdge)
                CHECK(p.dim() == maps.ports.horizontal_dim);
        }
    }
}

TEST_CASE("constraints: closed-form counts and characterization") {
    auto g = build_grid(8, 8, 0, 1, 0, 1, BcKind::Periodic);
    auto layout = partition(g, 2, 2);
    auto maps = classify_states(layout, g);
    auto con = build_constraints(maps.ports, maps.state_map);

    int n_a = 0;
    for (const auto& p : maps.ports.ports)
        n_a += (static_cast<int>(p.sharing.size()) - 1) * p.dim();
    CHECK(con.n_rows == n_a);
    for (const auto& A : con.A) {
        CHECK(A.rows() == con.n_rows);
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it)
                CHECK(std::abs(it.value()) == 1.0);
    }

    // gathered copies of one monolithic state satisfy the constraints
    Vec x = random_state(g.num_dofs(), 7);
    auto sv = gather(x, maps.state_map);
    Vec sum = Vec::Zero(con.n_rows);
    for (int i = 0; i < layout.n_omega; ++i)
        sum += con.A[static_cast<size_t>(i)] * sv.interface[static_cast<size_t>(i)];
    CHECK(sum.lpNorm<Eigen::Infinity>() == 0.0);

    // perturbing a single copy by delta breaks exactly one chain by |delta|
    const double delta = 0.37;
    sv.interface[0](3) += delta;
    sum.setZero();
    for (int i = 0; i < layout.n_omega; ++i)
        sum += con.A[static_cast<size_t>(i)] * sv.interface[static_cast<size_t>(i)];
    CHECK(sum.lpNorm<Eigen::Infinity>() == doctest::Approx(delta).epsilon(1e-14));
}

TEST_CASE("two-subdomain port gives +I/-I blocks") {
    auto g = build_grid(8, 8, 0, 1, 0, 1, BcKind::HomogeneousNeumann);
    auto layout = partition(g, 2, 1);
    auto maps = classify_states(layout, g);
    auto con = build_constraints(maps.ports, maps.state_map);
    CHECK(con.n_rows == 32);
    Mat A0 = Mat(con.A[0]);
    Mat A1 = Mat(con.A[1]);
    CHECK((A0 - Mat::Identity(32, 32)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((A1 + Mat::Identity(32, 32)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("gather/scatter round trip") {
    auto g = build_grid(12, 8, 0, 1, 0, 1, BcKind::Periodic);
    auto layout = partition(g, 3, 2);
    auto maps = classify_states(layout, g);

    Vec x = random_state(g.num_dofs(), 21);
    auto sv = gather(x, maps.state_map);
    Vec back = scatter(sv, maps.state_map, g.num_dofs());
    CHECK((back - x).lpNorm<Eigen::Infinity>() == 0.0);

    auto zero = gather(Vec::Zero(g.num_dofs()), maps.state_map);
    for (const auto& v : zero.interior) CHECK(v.norm() == 0.0);
    for (const auto& v : zero.interface) CHECK(v.norm() == 0.0);

    // disagreeing copies beyond tolerance are rejected
    sv.interface[0](0) += 1e-3;
    CHECK_THROWS(scatter(sv, maps.state_map, g.num_dofs(), 1e-9));
}

TEST_CASE("subdomain residuals reproduce the monolithic residual bitwise") {
    for (auto bc : {BcKind::Periodic, BcKind::HomogeneousNeumann}) {
        auto g = build_grid(8, 8, 0, 1, 0, 1, bc);
        auto layout = partition(g, 2, 2);
        auto maps = classify_states(layout, g);
        BurgersParams p = make_params(1e-3, 0.02, 2.0);

        Vec xk = random_state(g.num_dofs(), 31);
        Vec xp = random_state(g.num_dofs(), 32);
        auto svk = gather(xk, maps.state_map);
        auto svp = gather(xp, maps.state_map);
        Vec mono = be_residual(xk, xp, p, g);

        for (int i = 0; i < layout.n_omega; ++i) {
            SubdomainResidual sr(i, layout, maps.state_map, g, p);
            Vec ri = sr.residual(svk.interior[static_cast<size_t>(i)],
                                 svk.interface[static_cast<size_t>(i)],
                                 svp.interior[static_cast<size_t>(i)],
                                 svp.interface[static_cast<size_t>(i)]);
            const auto& rows = layout.residual_rows[static_cast<size_t>(i)];
            REQUIRE(ri.size() == static_cast<Eigen::Index>(rows.size()));
            for (size_t k = 0; k < rows.size(); ++k)
                CHECK(ri(static_cast<Eigen::Index>(k)) == mono(rows[k]));
        }

        // zero states give a zero residual
        SubdomainResidual sr0(0, layout, maps.state_map, g, p);
        Vec z_int = Vec::Zero(maps.state_map.n_interior(0));
        Vec z_gam = Vec::Zero(maps.state_map.n_interface(0));
        CHECK(sr0.residual(z_int, z_gam, z_int, z_gam).norm() == 0.0);
    }
}

TEST_CASE("subdomain Jacobians match finite differences") {
    auto g = build_grid(8, 8, 0, 1, 0, 1, BcKind::HomogeneousNeumann);
    auto layout = partition(g, 2, 1);
    auto maps = classify_states(layout, g);
    BurgersParams p = make_params(1e-3, 0.02, 2.0);

    for (int i = 0; i < layout.n_omega; ++i) {
        SubdomainResidual sr(i, layout, maps.state_map, g, p);
        Vec x_int = random_state(sr.interior_dim(), 41 + i);
        Vec x_gam = random_state(sr.interface_dim(), 51 + i);
        Vec p_int = random_state(sr.interior_dim(), 61 + i);
        Vec p_gam = random_state(sr.interface_dim(), 71 + i);

        SpMat J_int, J_gam;
        sr.jacobians(x_int, x_gam, J_int, J_gam);
        Mat fd_int = reference::fd_jacobian(
            [&](const Vec& q) { return sr.residual(q, x_gam, p_int, p_gam); },
            x_int);
        Mat fd_gam = reference::fd_jacobian(
            [&](const Vec& q) { return sr.residual(x_int, q, p_int, p_gam); },
            x_gam);
        const double scale = Mat(J_int).lpNorm<Eigen::Infinity>();
        CHECK((Mat(J_int) - fd_int).lpNorm<Eigen::Infinity>() / scale <= 1e-5);
        CHECK((Mat(J_gam) - fd_gam).lpNorm<Eigen::Infinity>() / scale <= 1e-5);
    }
}

TEST_CASE("layout description dump is stable and complete") {
    auto g = build_grid(8, 8, 0, 1, 0, 1, BcKind::HomogeneousNeumann);
    auto layout = partition(g, 2, 2);
    auto maps = classify_states(layout, g);
    std::string a = describe_layout(layout, maps);
    std::string b = describe_layout(layout, maps);
    CHECK(a == b);
    CHECK(a.find("subdomain") != std::string::npos);
    CHECK(a.find("port") != std::string::npos);
}
