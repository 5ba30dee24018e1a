#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/grid.hpp"

#include <string>
#include <vector>

namespace ddrom {

// Binary formats are little-endian 64-bit floats behind a fixed-layout
// header; see docs/formats.md.

void write_matrix(const std::string& path, const RowMat& m);
RowMat read_matrix(const std::string& path);

void write_trajectory(const std::string& path, const Grid2D& grid,
                      const BurgersParams& params,
                      const std::vector<Vec>& traj);
struct TrajectoryFile {
    Grid2D grid;
    BurgersParams params;
    std::vector<Vec> traj;
};
TrajectoryFile read_trajectory(const std::string& path);

void write_model(const std::string& path, const AutoencoderModel& m);
AutoencoderModel read_model(const std::string& path);

void write_history_csv(const std::string& path, const TrainHistory& h);

/// Atomic text write (temp file + rename).
void write_text(const std::string& path, const std::string& content);

}  // namespace ddrom
