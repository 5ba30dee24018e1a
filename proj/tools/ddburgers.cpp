// Command-line front end: sampling, snapshot collection, training,
// FOM/ROM solves, bottom-up composition, benchmarking, and Pareto sweeps.
// All parameters come from a JSON config file plus --set overrides.

#include "CLI11.hpp"
#include "json.hpp"

#include "ddrom/burgers.hpp"
#include "ddrom/io.hpp"
#include "ddrom/metrics.hpp"
#include "ddrom/nmrom.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/snapshots.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace ddrom;

namespace {

json default_config() {
    return json{
        {"grid", {{"nx", 40}, {"ny", 40}, {"x0", 0.0}, {"x1", 1.0}, {"y0", 0.0},
                  {"y1", 1.0}, {"bc", "periodic"}}},
        {"layout", {{"blocks_x", 2}, {"blocks_y", 2}}},
        {"physics", {{"nu", 1e-3}, {"tau", 0.02}, {"T", 2.0}}},
        {"sampling", {{"M", 200}, {"gamma_lo", 0.5}, {"gamma_hi", 1.5},
                      {"bernoulli_p", 0.5}, {"force_first", true}, {"seed", 0}}},
        {"ic", {{"mu", json::array()}, {"seed", 777}}},
        {"training", {{"epochs", 300}, {"batch", 1024}, {"lr0", 1e-3},
                      {"noise_sigma", 0.01}, {"plateau_factor", 0.5},
                      {"plateau_patience", 20}, {"early_stop_patience", 100},
                      {"split_fraction", 0.8}, {"seed", 0},
                      {"latent_interior", 12}, {"latent_port", 6},
                      {"width_factor", 2.0}, {"band_size", 3}, {"band_spacing", 0}}},
        {"solver", {{"tol_grad", 1e-8}, {"tol_con", 1e-8}, {"max_iter_fom", 20},
                    {"max_iter_rom", 50}}},
        {"compose", {{"blocks_x", 4}, {"blocks_y", 4}, {"bc", "neumann"},
                     {"block_w", 0.5}, {"block_h", 0.5}}},
        {"sweep", {{"interior", json::array({8, 12, 16})},
                   {"port", json::array({4, 6, 8})}}},
    };
}

BcKind parse_bc(const std::string& s) {
    if (s == "periodic") return BcKind::Periodic;
    if (s == "neumann") return BcKind::HomogeneousNeumann;
    throw std::runtime_error("unknown bc '" + s + "' (use periodic|neumann)");
}

struct Problem {
    Grid2D grid;
    SubdomainLayout layout;
    StateMaps maps;
    BurgersParams params;
};

Problem build_problem(const json& cfg) {
    const auto& g = cfg.at("grid");
    const auto& l = cfg.at("layout");
    const auto& p = cfg.at("physics");
    Problem pr;
    pr.grid = build_grid(g.at("nx"), g.at("ny"), g.at("x0"), g.at("x1"),
                         g.at("y0"), g.at("y1"), parse_bc(g.at("bc")));
    pr.layout = partition(pr.grid, l.at("blocks_x"), l.at("blocks_y"));
    pr.maps = classify_states(pr.layout, pr.grid);
    pr.params = make_params(p.at("nu"), p.at("tau"), p.at("T"));
    return pr;
}

SampleConfig sample_config(const json& cfg, std::optional<std::uint64_t> seed) {
    const auto& s = cfg.at("sampling");
    SampleConfig sc;
    sc.M = s.at("M");
    sc.gamma_lo = s.at("gamma_lo");
    sc.gamma_hi = s.at("gamma_hi");
    sc.bernoulli_p = s.at("bernoulli_p");
    sc.force_xi0 = s.at("force_first");
    sc.seed = seed.value_or(s.at("seed").get<std::uint64_t>());
    return sc;
}

TrainConfig train_config(const json& cfg, std::optional<std::uint64_t> seed) {
    const auto& t = cfg.at("training");
    TrainConfig tc;
    tc.epochs = t.at("epochs");
    tc.batch = t.at("batch");
    tc.lr0 = t.at("lr0");
    tc.noise_sigma = t.at("noise_sigma");
    tc.plateau_factor = t.at("plateau_factor");
    tc.plateau_patience = t.at("plateau_patience");
    tc.early_stop_patience = t.at("early_stop_patience");
    tc.split_fraction = t.at("split_fraction");
    tc.seed = seed.value_or(t.at("seed").get<std::uint64_t>());
    return tc;
}

MaskParams mask_params(const json& cfg) {
    const auto& t = cfg.at("training");
    MaskParams m;
    m.width_factor = t.at("width_factor");
    m.band_size = t.at("band_size");
    m.band_spacing = t.at("band_spacing");
    return m;
}

SqpOptions sqp_options(const json& cfg, bool rom) {
    const auto& s = cfg.at("solver");
    SqpOptions o;
    o.tol_grad = s.at("tol_grad");
    o.tol_con = s.at("tol_con");
    o.max_iter = rom ? s.at("max_iter_rom").get<int>() : s.at("max_iter_fom").get<int>();
    return o;
}

Vec initial_state(const json& cfg, const Problem& pr,
                  std::optional<std::uint64_t> seed) {
    const auto& ic = cfg.at("ic");
    Vec mu;
    if (ic.contains("mu") && !ic.at("mu").empty()) {
        const auto& arr = ic.at("mu");
        if (static_cast<int>(arr.size()) != pr.layout.n_omega)
            throw std::runtime_error("ic.mu must have one entry per subdomain");
        mu.resize(pr.layout.n_omega);
        for (int i = 0; i < pr.layout.n_omega; ++i) mu[i] = arr.at(i).get<double>();
    } else {
        SampleConfig sc = sample_config(cfg, std::nullopt);
        sc.M = 1;
        sc.seed = seed.value_or(ic.at("seed").get<std::uint64_t>());
        mu = lhs_sample(sc, pr.layout.n_omega).at(0);
    }
    return initial_condition(pr.grid, pr.layout, mu);
}

void write_convergence_csv(const std::string& path,
                           const std::vector<SqpResult>& steps) {
    std::string s =
        "step,iterations,converged,residual_norm,constraint_violation,stationarity\n";
    char buf[192];
    for (size_t k = 0; k < steps.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.17g,%.17g,%.17g\n", k + 1,
                      steps[k].iterations, steps[k].converged ? 1 : 0,
                      steps[k].residual_norm, steps[k].constraint_violation,
                      steps[k].stationarity);
        s += buf;
    }
    write_text(path, s);
}

std::shared_ptr<Decoder> load_decoder(const std::string& path) {
    return make_ae_decoder(std::make_shared<AutoencoderModel>(read_model(path)));
}

struct RomFiles {
    std::string interior, vertical, horizontal;
};

DdNmRom compose_from_config(const json& cfg, const RomFiles& files) {
    const auto& c = cfg.at("compose");
    const auto& g = cfg.at("grid");
    const auto& l = cfg.at("layout");
    const auto& p = cfg.at("physics");
    const int block_nx = g.at("nx").get<int>() / l.at("blocks_x").get<int>();
    const int block_ny = g.at("ny").get<int>() / l.at("blocks_y").get<int>();
    BurgersParams params = make_params(p.at("nu"), p.at("tau"), p.at("T"));
    auto interior = std::make_shared<AutoencoderModel>(read_model(files.interior));
    auto vertical = std::make_shared<AutoencoderModel>(read_model(files.vertical));
    auto horizontal = std::make_shared<AutoencoderModel>(read_model(files.horizontal));
    return compose(c.at("blocks_x"), c.at("blocks_y"), parse_bc(c.at("bc")),
                   block_nx, block_ny, c.at("block_w"), c.at("block_h"), params,
                   make_ae_decoder(interior), make_ae_decoder(vertical),
                   make_ae_decoder(horizontal), interior->full_dim,
                   vertical->full_dim, horizontal->full_dim);
}

std::string rom_manifest(const DdNmRom& rom, const RomFiles& files) {
    std::ostringstream os;
    os << "ddburgers ROM manifest\n"
       << "grid " << rom.grid.nx << "x" << rom.grid.ny << " bc "
       << (rom.grid.bc == BcKind::Periodic ? "periodic" : "neumann")
       << " extents [" << rom.grid.x0 << "," << rom.grid.x1 << "]x["
       << rom.grid.y0 << "," << rom.grid.y1 << "]\n"
       << "layout " << rom.layout.blocks_x << "x" << rom.layout.blocks_y << "\n"
       << "interior model " << files.interior << " full "
       << rom.interior_dec->full_dim() << " latent "
       << rom.interior_dec->latent_dim() << "\n"
       << "vertical model " << files.vertical << " dim "
       << rom.maps.ports.vertical_dim << "\n"
       << "horizontal model " << files.horizontal << " dim "
       << rom.maps.ports.horizontal_dim << "\n"
       << "ports vertical " << rom.maps.ports.num_vertical << " horizontal "
       << rom.maps.ports.num_horizontal << " corner " << rom.maps.ports.num_corner
       << "\n"
       << "latent constraint rows " << rom.latent_constraints.n_rows << "\n"
       << "total unknowns " << rom.total_unknowns() << "\n";
    return os.str();
}

struct BenchOutcome {
    double fom_local, fom_global, rom_local, rom_global, e_rel, sp;
};

BenchOutcome run_bench(const json& cfg, const DdNmRom& rom,
                       std::optional<std::uint64_t> seed) {
    Problem pr{rom.grid, rom.layout, rom.maps, rom.params};
    Vec x0 = initial_state(cfg, pr, seed);
    CompatibilityMatrix C = build_constraints(rom.maps.ports, rom.maps.state_map);
    DdFomContext ctx{&rom.grid, &rom.layout, &rom.maps, &C, rom.params};
    DdSolveResult fom = dd_fom_solve(ctx, x0, sqp_options(cfg, false));
    RomOptions ro;
    ro.sqp = sqp_options(cfg, true);
    RomSolveResult rr = rom_solve(rom, x0, ro);
    ErrorReport err = linf_l2_error(fom.trajectory, rr.decoded, rom.maps.state_map,
                                    rom.grid, rom.layout.n_omega);
    BenchOutcome out;
    out.fom_local = fom.local_time;
    out.fom_global = fom.global_time;
    out.rom_local = rr.local_time;
    out.rom_global = rr.global_time;
    out.e_rel = err.e_rel;
    out.sp = speedup({fom.local_time, fom.global_time},
                     {rr.local_time, rr.global_time});
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-decomposition nonlinear-manifold ROM toolkit for 2D Burgers"};
    app.require_subcommand(1);
    app.fallthrough();  // allow --config/--set/--seed after the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides,
                   "Override a config entry, e.g. --set physics.nu=0.01");
    app.add_option("--seed", seed, "Override the RNG seed of the subcommand");

    // sample
    auto* cmd_sample = app.add_subcommand("sample", "Draw LHS parameter configurations");
    std::string sample_out = "configs.bin";
    cmd_sample->add_option("--out", sample_out, "Output matrix file (M x n_subdomains)");

    // snapshot
    auto* cmd_snap = app.add_subcommand("snapshot", "Collect FOM snapshot matrices");
    std::string snap_configs, snap_prefix = "snapshots";
    cmd_snap->add_option("--configs", snap_configs,
                         "Configuration matrix from 'sample' (sampled fresh if omitted)");
    cmd_snap->add_option("--out-prefix", snap_prefix, "Output prefix for the three matrices");

    // train
    auto* cmd_train = app.add_subcommand("train", "Train one autoencoder role");
    std::string train_role = "interior", train_snaps, train_model = "model.bin",
                train_history = "history.csv";
    cmd_train->add_option("--role", train_role, "interior|vertical|horizontal");
    cmd_train->add_option("--snapshots", train_snaps, "Snapshot matrix file")->required();
    cmd_train->add_option("--out", train_model, "Output model file");
    cmd_train->add_option("--history", train_history, "Training history CSV");

    // solve-fom
    auto* cmd_fom = app.add_subcommand("solve-fom", "Solve the full-order model");
    std::string fom_mode = "dd", fom_out = "fom.bin", fom_conv;
    cmd_fom->add_option("--mode", fom_mode, "dd|monolithic");
    cmd_fom->add_option("--out", fom_out, "Output trajectory file");
    cmd_fom->add_option("--convergence", fom_conv, "Per-step convergence CSV");

    // solve-rom
    auto* cmd_rom = app.add_subcommand("solve-rom", "Solve the ROM on the config layout");
    RomFiles rom_files;
    std::string rom_out = "rom.bin", rom_conv;
    cmd_rom->add_option("--interior", rom_files.interior)->required();
    cmd_rom->add_option("--vertical", rom_files.vertical)->required();
    cmd_rom->add_option("--horizontal", rom_files.horizontal)->required();
    cmd_rom->add_option("--out", rom_out, "Output decoded trajectory file");
    cmd_rom->add_option("--convergence", rom_conv, "Per-step convergence CSV");

    // compose
    auto* cmd_compose = app.add_subcommand("compose", "Assemble a bottom-up deployment ROM");
    RomFiles comp_files;
    std::string comp_manifest = "rom_manifest.txt", comp_layout;
    cmd_compose->add_option("--interior", comp_files.interior)->required();
    cmd_compose->add_option("--vertical", comp_files.vertical)->required();
    cmd_compose->add_option("--horizontal", comp_files.horizontal)->required();
    cmd_compose->add_option("--manifest", comp_manifest, "Manifest text output");
    cmd_compose->add_option("--layout-dump", comp_layout, "Layout description text output");

    // bench
    auto* cmd_bench = app.add_subcommand("bench", "Time DD FOM vs composed ROM");
    RomFiles bench_files;
    std::string bench_out = "bench.csv";
    cmd_bench->add_option("--interior", bench_files.interior)->required();
    cmd_bench->add_option("--vertical", bench_files.vertical)->required();
    cmd_bench->add_option("--horizontal", bench_files.horizontal)->required();
    cmd_bench->add_option("--out", bench_out, "Benchmark CSV output");

    // pareto
    auto* cmd_pareto = app.add_subcommand("pareto", "Sweep latent dims, record error/speedup");
    std::string pareto_prefix = "snapshots", pareto_out = "pareto.csv";
    cmd_pareto->add_option("--snapshots-prefix", pareto_prefix,
                           "Prefix used by the 'snapshot' subcommand");
    cmd_pareto->add_option("--out", pareto_out, "Pareto CSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = default_config();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config " + config_path);
            cfg.merge_patch(json::parse(in));
        }
        for (const auto& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("--set expects section.key=value: " + ov);
            std::string key = "/" + ov.substr(0, eq);
            for (auto& ch : key)
                if (ch == '.') ch = '/';
            json val;
            try {
                val = json::parse(ov.substr(eq + 1));
            } catch (...) {
                val = ov.substr(eq + 1);  // bare string
            }
            cfg[json::json_pointer(key)] = val;
        }

        if (*cmd_sample) {
            Problem pr = build_problem(cfg);
            std::vector<Vec> configs = lhs_sample(sample_config(cfg, seed), pr.layout.n_omega);
            RowMat m(configs.size(), pr.layout.n_omega);
            for (size_t r = 0; r < configs.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = configs[r];
            write_matrix(sample_out, m);
            std::cout << "wrote " << configs.size() << " configurations to "
                      << sample_out << std::endl;
        } else if (*cmd_snap) {
            Problem pr = build_problem(cfg);
            std::vector<Vec> configs;
            if (!snap_configs.empty()) {
                RowMat m = read_matrix(snap_configs);
                if (m.cols() != pr.layout.n_omega)
                    throw std::runtime_error("config matrix has wrong subdomain count");
                for (Eigen::Index r = 0; r < m.rows(); ++r) configs.push_back(m.row(r));
            } else {
                configs = lhs_sample(sample_config(cfg, seed), pr.layout.n_omega);
            }
            SnapshotBundle b = collect_snapshots(configs, pr.grid, pr.layout, pr.maps,
                                                 pr.params, true);
            write_matrix(snap_prefix + "_interior.bin", b.interior.matrix);
            write_matrix(snap_prefix + "_vertical.bin", b.vertical.matrix);
            write_matrix(snap_prefix + "_horizontal.bin", b.horizontal.matrix);
            std::cout << "wrote " << b.interior.matrix.rows() << "/"
                      << b.vertical.matrix.rows() << "/" << b.horizontal.matrix.rows()
                      << " interior/vertical/horizontal rows to " << snap_prefix
                      << "_*.bin" << std::endl;
        } else if (*cmd_train) {
            const auto& t = cfg.at("training");
            int latent;
            if (train_role == "interior")
                latent = t.at("latent_interior");
            else if (train_role == "vertical" || train_role == "horizontal")
                latent = t.at("latent_port");
            else
                throw std::runtime_error("unknown role '" + train_role + "'");
            RowMat snaps = read_matrix(train_snaps);
            TrainResult tr = train(snaps, latent, mask_params(cfg), train_config(cfg, seed));
            write_model(train_model, tr.model);
            write_history_csv(train_history, tr.history);
            std::cout << "trained " << train_role << ": best val MSE "
                      << tr.history.best_val_mse << " at epoch "
                      << tr.history.best_epoch << ", model " << train_model
                      << ", history " << train_history << std::endl;
        } else if (*cmd_fom) {
            Problem pr = build_problem(cfg);
            Vec x0 = initial_state(cfg, pr, seed);
            if (fom_mode == "monolithic") {
                MonolithicSolveResult r = solve_monolithic(pr.params, pr.grid, x0);
                if (!r.all_converged) throw std::runtime_error("Newton did not converge");
                write_trajectory(fom_out, pr.grid, pr.params, r.trajectory);
                if (!fom_conv.empty()) {
                    std::string s = "step,iterations,converged,residual_norm\n";
                    char buf[128];
                    for (size_t k = 0; k < r.steps.size(); ++k) {
                        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.17g\n", k + 1,
                                      r.steps[k].iterations,
                                      r.steps[k].converged ? 1 : 0,
                                      r.steps[k].final_residual_norm);
                        s += buf;
                    }
                    write_text(fom_conv, s);
                }
                std::cout << "monolithic FOM solved, trajectory " << fom_out << std::endl;
            } else if (fom_mode == "dd") {
                CompatibilityMatrix C = build_constraints(pr.maps.ports, pr.maps.state_map);
                DdFomContext ctx{&pr.grid, &pr.layout, &pr.maps, &C, pr.params};
                DdSolveResult r = dd_fom_solve(ctx, x0, sqp_options(cfg, false));
                write_trajectory(fom_out, pr.grid, pr.params, r.trajectory);
                if (!fom_conv.empty()) write_convergence_csv(fom_conv, r.steps);
                std::cout << "DD FOM solved in " << r.total_time()
                          << " s (local " << r.local_time << ", global "
                          << r.global_time << "), trajectory " << fom_out << std::endl;
            } else {
                throw std::runtime_error("unknown mode '" + fom_mode + "'");
            }
        } else if (*cmd_rom) {
            Problem pr = build_problem(cfg);
            DdNmRom rom = assemble_rom(pr.grid, pr.layout, pr.maps, pr.params,
                                       load_decoder(rom_files.interior),
                                       load_decoder(rom_files.vertical),
                                       load_decoder(rom_files.horizontal));
            Vec x0 = initial_state(cfg, pr, seed);
            RomOptions ro;
            ro.sqp = sqp_options(cfg, true);
            RomSolveResult rr = rom_solve(rom, x0, ro);
            write_trajectory(rom_out, pr.grid, pr.params, rr.decoded);
            if (!rom_conv.empty()) write_convergence_csv(rom_conv, rr.steps);
            std::cout << "ROM solved in " << rr.total_time() << " s, "
                      << rom.total_unknowns() << " unknowns, trajectory " << rom_out
                      << std::endl;
        } else if (*cmd_compose) {
            DdNmRom rom = compose_from_config(cfg, comp_files);
            write_text(comp_manifest, rom_manifest(rom, comp_files));
            if (!comp_layout.empty())
                write_text(comp_layout, describe_layout(rom.layout, rom.maps));
            std::cout << "composed ROM with " << rom.layout.n_omega
                      << " subdomains, " << rom.total_unknowns()
                      << " unknowns, manifest " << comp_manifest << std::endl;
        } else if (*cmd_bench) {
            DdNmRom rom = compose_from_config(cfg, bench_files);
            BenchOutcome b = run_bench(cfg, rom, seed);
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "model,local_s,global_s,total_s\nfom,%.6f,%.6f,%.6f\n"
                          "rom,%.6f,%.6f,%.6f\nspeedup,%.4f,,\ne_rel,%.6e,,\n",
                          b.fom_local, b.fom_global, b.fom_local + b.fom_global,
                          b.rom_local, b.rom_global, b.rom_local + b.rom_global,
                          b.sp, b.e_rel);
            write_text(bench_out, buf);
            std::cout << "bench: speedup " << b.sp << ", e_rel " << b.e_rel
                      << ", wrote " << bench_out << std::endl;
        } else if (*cmd_pareto) {
            RowMat snaps_i = read_matrix(pareto_prefix + "_interior.bin");
            RowMat snaps_v = read_matrix(pareto_prefix + "_vertical.bin");
            RowMat snaps_h = read_matrix(pareto_prefix + "_horizontal.bin");
            const auto& sweep = cfg.at("sweep");
            std::string csv = "interior_latent,port_latent,e_rel,speedup\n";
            for (const auto& ij : sweep.at("interior")) {
                for (const auto& pj : sweep.at("port")) {
                    const int I = ij.get<int>();
                    const int P = pj.get<int>();
                    TrainConfig tc = train_config(cfg, seed);
                    MaskParams mp = mask_params(cfg);
                    TrainResult ti = train(snaps_i, I, mp, tc);
                    TrainResult tv = train(snaps_v, P, mp, tc);
                    TrainResult th = train(snaps_h, P, mp, tc);
                    const auto& c = cfg.at("compose");
                    const auto& g = cfg.at("grid");
                    const auto& l = cfg.at("layout");
                    DdNmRom rom = compose(
                        c.at("blocks_x"), c.at("blocks_y"), parse_bc(c.at("bc")),
                        g.at("nx").get<int>() / l.at("blocks_x").get<int>(),
                        g.at("ny").get<int>() / l.at("blocks_y").get<int>(),
                        c.at("block_w"), c.at("block_h"),
                        make_params(cfg.at("physics").at("nu"),
                                    cfg.at("physics").at("tau"),
                                    cfg.at("physics").at("T")),
                        make_ae_decoder(std::make_shared<AutoencoderModel>(ti.model)),
                        make_ae_decoder(std::make_shared<AutoencoderModel>(tv.model)),
                        make_ae_decoder(std::make_shared<AutoencoderModel>(th.model)),
                        ti.model.full_dim, tv.model.full_dim, th.model.full_dim);
                    char buf[128];
                    try {
                        BenchOutcome b = run_bench(cfg, rom, seed);
                        std::snprintf(buf, sizeof(buf), "%d,%d,%.6e,%.4f\n", I,
                                      P, b.e_rel, b.sp);
                        std::cerr << "pareto: I=" << I << " P=" << P
                                  << " e_rel=" << b.e_rel << " speedup=" << b.sp
                                  << std::endl;
                    } catch (const std::exception& e) {
                        // One failed sweep point (e.g. a latent dim too small
                        // for the ROM to converge) should not kill the sweep.
                        std::snprintf(buf, sizeof(buf), "%d,%d,nan,nan\n", I, P);
                        std::cerr << "pareto: I=" << I << " P=" << P
                                  << " failed: " << e.what() << std::endl;
                    }
                    csv += buf;
                }
            }
            write_text(pareto_out, csv);
            std::cout << "wrote Pareto sweep to " << pareto_out << std::endl;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cout << json{{"error", e.what()}}.dump() << std::endl;
        return 1;
    }
}
