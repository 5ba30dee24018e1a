#include "ddrom/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ddrom {

namespace {

constexpr char kMatrixMagic[8] = {'D', 'D', 'R', 'M', 'M', 'A', 'T', '1'};
constexpr char kTrajMagic[8] = {'D', 'D', 'R', 'M', 'T', 'R', 'J', '1'};
constexpr char kModelMagic[8] = {'D', 'D', 'R', 'M', 'A', 'E', '0', '1'};

class AtomicFile {
public:
    explicit AtomicFile(const std::string& path)
        : path_(path), tmp_(path + ".tmp") {
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("cannot open " + tmp_ + " for writing");
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
            throw std::runtime_error("cannot rename " + tmp_ + " to " + path_);
    }

private:
    std::string path_, tmp_;
    std::ofstream out_;
};

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("unexpected end of file");
    return v;
}

void put_vec(std::ostream& os, const double* p, size_t n) {
    os.write(reinterpret_cast<const char*>(p),
             static_cast<std::streamsize>(n * sizeof(double)));
}

void get_vec(std::istream& is, double* p, size_t n) {
    is.read(reinterpret_cast<char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("unexpected end of file");
}

void check_magic(std::istream& is, const char (&magic)[8], const std::string& what) {
    char buf[8];
    is.read(buf, 8);
    if (!is || std::memcmp(buf, magic, 8) != 0)
        throw std::runtime_error("bad magic in " + what);
}

}  // namespace

void write_matrix(const std::string& path, const RowMat& m) {
    AtomicFile f(path);
    f.stream().write(kMatrixMagic, 8);
    put<std::int64_t>(f.stream(), m.rows());
    put<std::int64_t>(f.stream(), m.cols());
    put_vec(f.stream(), m.data(), static_cast<size_t>(m.size()));
    f.commit();
}

RowMat read_matrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    check_magic(is, kMatrixMagic, path);
    const auto rows = get<std::int64_t>(is);
    const auto cols = get<std::int64_t>(is);
    RowMat m(rows, cols);
    get_vec(is, m.data(), static_cast<size_t>(m.size()));
    return m;
}

void write_trajectory(const std::string& path, const Grid2D& grid,
                      const BurgersParams& params,
                      const std::vector<Vec>& traj) {
    AtomicFile f(path);
    auto& os = f.stream();
    os.write(kTrajMagic, 8);
    put<std::int32_t>(os, grid.nx);
    put<std::int32_t>(os, grid.ny);
    put<std::int32_t>(os, static_cast<std::int32_t>(traj.size()) - 1);
    put<std::int32_t>(os, static_cast<std::int32_t>(grid.bc));
    put<double>(os, grid.x0); put<double>(os, grid.x1);
    put<double>(os, grid.y0); put<double>(os, grid.y1);
    put<double>(os, params.nu);
    put<double>(os, params.tau);
    for (const auto& x : traj) put_vec(os, x.data(), static_cast<size_t>(x.size()));
    f.commit();
}

TrajectoryFile read_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    check_magic(is, kTrajMagic, path);
    const int nx = get<std::int32_t>(is);
    const int ny = get<std::int32_t>(is);
    const int nt = get<std::int32_t>(is);
    const auto bc = static_cast<BcKind>(get<std::int32_t>(is));
    const double x0 = get<double>(is), x1 = get<double>(is);
    const double y0 = get<double>(is), y1 = get<double>(is);
    TrajectoryFile tf;
    tf.grid = build_grid(nx, ny, x0, x1, y0, y1, bc);
    tf.params.nu = get<double>(is);
    tf.params.tau = get<double>(is);
    tf.params.Nt = nt;
    tf.params.T = nt * tf.params.tau;
    tf.traj.resize(static_cast<size_t>(nt) + 1);
    for (auto& x : tf.traj) {
        x.resize(tf.grid.num_dofs());
        get_vec(is, x.data(), static_cast<size_t>(x.size()));
    }
    return tf;
}

void write_model(const std::string& path, const AutoencoderModel& m) {
    AtomicFile f(path);
    auto& os = f.stream();
    os.write(kModelMagic, 8);
    put<std::int32_t>(os, m.full_dim);
    put<std::int32_t>(os, m.latent_dim);
    put<std::int32_t>(os, m.hidden);
    put<std::int32_t>(os, m.mask_out.band_size);
    put<std::int32_t>(os, m.mask_out.band_spacing);
    put_vec(os, m.norm.shift.data(), static_cast<size_t>(m.full_dim));
    put_vec(os, m.norm.scale.data(), static_cast<size_t>(m.full_dim));
    put_vec(os, m.w_in.data(), m.w_in.size());
    put_vec(os, m.b_in.data(), static_cast<size_t>(m.hidden));
    put_vec(os, m.w_lat.data(), static_cast<size_t>(m.w_lat.size()));
    put_vec(os, m.w_hid.data(), static_cast<size_t>(m.w_hid.size()));
    put_vec(os, m.b_hid.data(), static_cast<size_t>(m.hidden));
    put_vec(os, m.w_out.data(), m.w_out.size());
    f.commit();
}

AutoencoderModel read_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    check_magic(is, kModelMagic, path);
    AutoencoderModel m;
    m.full_dim = get<std::int32_t>(is);
    m.latent_dim = get<std::int32_t>(is);
    m.hidden = get<std::int32_t>(is);
    const int band_size = get<std::int32_t>(is);
    const int band_spacing = get<std::int32_t>(is);
    m.mask_out = build_triband_mask(m.full_dim, m.hidden, band_size, band_spacing);
    m.mask_in = m.mask_out.transposed();
    m.norm.shift.resize(m.full_dim);
    m.norm.scale.resize(m.full_dim);
    get_vec(is, m.norm.shift.data(), static_cast<size_t>(m.full_dim));
    get_vec(is, m.norm.scale.data(), static_cast<size_t>(m.full_dim));
    m.w_in.resize(static_cast<size_t>(m.mask_in.nnz()));
    get_vec(is, m.w_in.data(), m.w_in.size());
    m.b_in.resize(m.hidden);
    get_vec(is, m.b_in.data(), static_cast<size_t>(m.hidden));
    m.w_lat.resize(m.latent_dim, m.hidden);
    get_vec(is, m.w_lat.data(), static_cast<size_t>(m.w_lat.size()));
    m.w_hid.resize(m.hidden, m.latent_dim);
    get_vec(is, m.w_hid.data(), static_cast<size_t>(m.w_hid.size()));
    m.b_hid.resize(m.hidden);
    get_vec(is, m.b_hid.data(), static_cast<size_t>(m.hidden));
    m.w_out.resize(static_cast<size_t>(m.mask_out.nnz()));
    get_vec(is, m.w_out.data(), m.w_out.size());
    return m;
}

void write_history_csv(const std::string& path, const TrainHistory& h) {
    std::string s = "epoch,train_mse,val_mse,lr\n";
    char buf[128];
    for (const auto& e : h.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch,
                      e.train_mse, e.val_mse, e.lr);
        s += buf;
    }
    write_text(path, s);
}

void write_text(const std::string& path, const std::string& content) {
    AtomicFile f(path);
    f.stream() << content;
    f.commit();
}

}  // namespace ddrom
