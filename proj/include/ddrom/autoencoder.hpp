#pragma once

#include "ddrom/grid.hpp"

#include <cstdint>
#include <vector>

namespace ddrom {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double swish(double z);
double swish_prime(double z);

/// Fixed tri-banded sparsity pattern stored as CSR. Row r of an
/// (rows x cols) mask carries three clipped bands of band_size entries
/// centered at round(r * cols / rows) with offsets {-spacing, 0, +spacing}.
struct TriBandMask {
    int rows = 0;
    int cols = 0;
    int band_size = 0;
    int band_spacing = 0;
    std::vector<int> row_ptr;  // rows + 1
    std::vector<int> col_idx;

    int nnz() const { return static_cast<int>(col_idx.size()); }
    TriBandMask transposed() const;
    Mat dense(const std::vector<double>& values) const;
};

TriBandMask build_triband_mask(int rows, int cols, int band_size,
                               int band_spacing);

/// Per-feature affine normalization; scale floored at 1e-8.
struct Normalization {
    Vec shift;
    Vec scale;
    Vec normalize(const Vec& x) const;
    Vec denormalize(const Vec& xn) const;
};

/// Shallow sparse autoencoder:
///   encode(x) = W_lat swish(W_in (x-shift)/scale + b_in)
///   decode(z) = scale .* (W_out swish(W_hid z + b_hid)) + shift
/// W_in and W_out carry transposed tri-banded masks; the output layer has
/// no bias (de-normalization supplies the offset).
struct AutoencoderModel {
    int full_dim = 0;
    int latent_dim = 0;
    int hidden = 0;
    Normalization norm;
    TriBandMask mask_in;   // hidden x full
    TriBandMask mask_out;  // full x hidden
    std::vector<double> w_in;   // values on mask_in
    Vec b_in;                   // hidden
    RowMat w_lat;               // latent x hidden
    RowMat w_hid;               // hidden x latent
    Vec b_hid;                  // hidden
    std::vector<double> w_out;  // values on mask_out

    Vec encode(const Vec& x) const;
    Vec decode(const Vec& z) const;
    /// d decode / d z, full_dim x latent_dim.
    Mat decoder_jacobian(const Vec& z) const;
};

struct TrainConfig {
    int epochs = 1000;
    int batch = 1024;
    double lr0 = 1e-3;
    double noise_sigma = 0.01;
    double plateau_factor = 0.5;
    int plateau_patience = 20;
    int early_stop_patience = 100;
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct MaskParams {
    int hidden_width = 0;  // 0 -> width_factor * full_dim
    double width_factor = 2.0;
    int band_size = 3;
    int band_spacing = 0;  // 0 -> cols/rows-proportional default
};

struct EpochRecord {
    int epoch;
    double train_mse;
    double val_mse;
    double lr;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;  // entry 0 is the untrained model
    double initial_val_mse = 0.0;
    double best_val_mse = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
};

struct TrainResult {
    AutoencoderModel model;
    TrainHistory history;
};

/// Denoising Adam training on the MSE between clean normalized targets
/// and reconstructions of noise-corrupted inputs. Snapshots are split
/// 80-20 with the config seed; normalization statistics come from the
/// training split only. Early stopping restores the best-validation
/// weights; the learning rate halves on validation plateaus.
TrainResult train(const RowMat& snapshots, int latent_dim,
                  const MaskParams& mask, const TrainConfig& config);

/// Validation-style reconstruction MSE of the model on the given rows
/// (normalized space, no noise).
double reconstruction_mse(const AutoencoderModel& model, const RowMat& rows);

}  // namespace ddrom
