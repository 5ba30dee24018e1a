#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/partition.hpp"
#include "ddrom/sqp.hpp"

#include <memory>
#include <vector>

namespace ddrom {

/// Latent-to-full map for one role (subdomain interior or one port).
class Decoder {
public:
    virtual ~Decoder() = default;
    virtual int latent_dim() const = 0;
    virtual int full_dim() const = 0;
    virtual Vec decode(const Vec& z) const = 0;
    virtual Vec encode(const Vec& x) const = 0;
    virtual Mat jacobian(const Vec& z) const = 0;
};

std::shared_ptr<Decoder> make_identity_decoder(int dim);
std::shared_ptr<Decoder> make_ae_decoder(std::shared_ptr<const AutoencoderModel> model);

struct RomOptions {
    SqpOptions sqp{.tol_grad = 1e-8, .tol_con = 1e-8, .max_iter = 50};
};

/// Assembled DD NM-ROM: shared interior decoder on every subdomain,
/// orientation-shared edge-port decoders, identity maps on corner ports,
/// and latent compatibility (SRPC) matrices mirroring the full-order
/// chain-of-pairs structure.
struct DdNmRom {
    Grid2D grid;
    SubdomainLayout layout;
    StateMaps maps;
    BurgersParams params;

    std::shared_ptr<Decoder> interior_dec;
    // Per-subdomain interior decoder. Equal to interior_dec wherever the
    // dimensions match. Subdomains with unshared block-perimeter DOFs
    // (domain-wall strips under Neumann deployment) get the shared decoder
    // on the block-core pattern plus full-order pass-through on the rest.
    std::vector<std::shared_ptr<Decoder>> sub_interior_dec;
    std::vector<std::shared_ptr<Decoder>> port_dec;  // one per port
    std::vector<int> port_latent_dim;

    CompatibilityMatrix latent_constraints;
    // Per subdomain: offset of each of its ports inside the latent
    // interface vector, aligned with maps.state_map.subs[i].port_ids.
    std::vector<std::vector<int>> latent_port_offsets;
    std::vector<int> latent_interface_dim;

    int total_unknowns() const;
};

/// Wire decoders onto an existing layout. Dimension mismatches between a
/// model and its role are hard errors.
DdNmRom assemble_rom(const Grid2D& grid, const SubdomainLayout& layout,
                     const StateMaps& maps, const BurgersParams& params,
                     std::shared_ptr<Decoder> interior,
                     std::shared_ptr<Decoder> vertical,
                     std::shared_ptr<Decoder> horizontal);

/// Bottom-up deployment: build a blocks_x x blocks_y layout of identically
/// sized blocks and instantiate the trained decoders on it. Block node
/// counts and port dimensions must match the training domain.
DdNmRom compose(int blocks_x, int blocks_y, BcKind bc, int block_nx,
                int block_ny, double block_w, double block_h,
                const BurgersParams& params,
                std::shared_ptr<Decoder> interior,
                std::shared_ptr<Decoder> vertical,
                std::shared_ptr<Decoder> horizontal,
                int expected_interior_full_dim, int expected_vertical_dim,
                int expected_horizontal_dim);

/// Residual of subdomain i at decoded latent states, plus the chain-rule
/// Jacobian wrt [interior latents; port-copy latents].
struct RomBlockEval {
    Vec r;
    Mat J;  // residual_dim x (I + sum port latent dims)
};

class RomEvaluator {
public:
    RomEvaluator(const DdNmRom& rom);

    int block_dim(int i) const;
    /// Decode a block's latent vector into full (interior, interface) states.
    void decode_block(int i, const Vec& q, Vec& x_int, Vec& x_gam) const;
    RomBlockEval eval(int i, const Vec& q, const Vec& prev_int,
                      const Vec& prev_gam) const;
    const SubdomainResidual& residual(int i) const {
        return residuals_[static_cast<size_t>(i)];
    }

private:
    const DdNmRom* rom_;
    std::vector<SubdomainResidual> residuals_;
};

struct LatentTrajectory {
    // step -> subdomain -> [interior latents; port copy latents]
    std::vector<std::vector<Vec>> steps;
};

struct RomSolveResult {
    LatentTrajectory latents;
    std::vector<Vec> decoded;  // monolithic states, Nt+1
    double local_time = 0.0;
    double global_time = 0.0;
    double total_time() const { return local_time + global_time; }
    double max_constraint_violation = 0.0;
    std::vector<SqpResult> steps;
};

RomSolveResult rom_solve(const DdNmRom& rom, const Vec& x0,
                         const RomOptions& options);

}  // namespace ddrom
