#include "ddrom/autoencoder.hpp"

#include "ddrom/detail/ae_backprop.hpp"
#include "ddrom/random_split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ddrom {

double swish(double z) { return z / (1.0 + std::exp(-z)); }

double swish_prime(double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s + z * s * (1.0 - s);
}

TriBandMask build_triband_mask(int rows, int cols, int band_size,
                               int band_spacing) {
    if (rows < 1 || cols < 1 || band_size < 1 || band_spacing < 0 ||
        band_size > cols)
        throw std::invalid_argument("build_triband_mask: bad parameters");
    TriBandMask m;
    m.rows = rows;
    m.cols = cols;
    m.band_size = band_size;
    m.band_spacing = band_spacing;
    m.row_ptr.resize(static_cast<size_t>(rows) + 1, 0);
    std::vector<int> row_cols;
    for (int r = 0; r < rows; ++r) {
        const int center = static_cast<int>(
            std::lround(static_cast<double>(r) * cols / rows));
        row_cols.clear();
        for (int off : {-band_spacing, 0, band_spacing}) {
            // shift the window into range so every band keeps band_size
            // entries (dense limit: band_size == cols covers the row)
            int start = center + off - (band_size - 1) / 2;
            start = std::clamp(start, 0, cols - band_size);
            for (int k = 0; k < band_size; ++k) row_cols.push_back(start + k);
        }
        std::sort(row_cols.begin(), row_cols.end());
        row_cols.erase(std::unique(row_cols.begin(), row_cols.end()),
                       row_cols.end());
        if (row_cols.empty())
            throw std::invalid_argument("build_triband_mask: empty mask row");
        m.col_idx.insert(m.col_idx.end(), row_cols.begin(), row_cols.end());
        m.row_ptr[static_cast<size_t>(r) + 1] = static_cast<int>(m.col_idx.size());
    }
    return m;
}

TriBandMask TriBandMask::transposed() const {
    TriBandMask t;
    t.rows = cols;
    t.cols = rows;
    t.band_size = band_size;
    t.band_spacing = band_spacing;
    t.row_ptr.assign(static_cast<size_t>(cols) + 1, 0);
    for (int c : col_idx) t.row_ptr[static_cast<size_t>(c) + 1]++;
    for (int r = 0; r < cols; ++r)
        t.row_ptr[static_cast<size_t>(r) + 1] += t.row_ptr[static_cast<size_t>(r)];
    t.col_idx.resize(col_idx.size());
    std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (int r = 0; r < rows; ++r)
        for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k) {
            const int c = col_idx[static_cast<size_t>(k)];
            t.col_idx[static_cast<size_t>(next[static_cast<size_t>(c)]++)] = r;
        }
    return t;
}

Mat TriBandMask::dense(const std::vector<double>& values) const {
    Mat d = Mat::Zero(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k)
            d(r, col_idx[static_cast<size_t>(k)]) = values[static_cast<size_t>(k)];
    return d;
}

Vec Normalization::normalize(const Vec& x) const {
    return (x - shift).cwiseQuotient(scale);
}

Vec Normalization::denormalize(const Vec& xn) const {
    return xn.cwiseProduct(scale) + shift;
}

namespace {

// y = sparse(mask, vals) * x
void spmv(const TriBandMask& m, const std::vector<double>& vals, const double* x,
          double* y) {
    for (int r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        for (int k = m.row_ptr[static_cast<size_t>(r)]; k < m.row_ptr[static_cast<size_t>(r) + 1]; ++k)
            acc += vals[static_cast<size_t>(k)] * x[m.col_idx[static_cast<size_t>(k)]];
        y[r] = acc;
    }
}

}  // namespace

Vec AutoencoderModel::encode(const Vec& x) const {
    if (x.size() != full_dim)
        throw std::invalid_argument("encode: dimension mismatch");
    Vec xn = norm.normalize(x);
    Vec z1(hidden);
    spmv(mask_in, w_in, xn.data(), z1.data());
    z1 += b_in;
    Vec a1 = z1.unaryExpr([](double z) { return swish(z); });
    return w_lat * a1;
}

Vec AutoencoderModel::decode(const Vec& z) const {
    if (z.size() != latent_dim)
        throw std::invalid_argument("decode: dimension mismatch");
    Vec z2 = w_hid * z + b_hid;
    Vec a2 = z2.unaryExpr([](double v) { return swish(v); });
    Vec y(full_dim);
    spmv(mask_out, w_out, a2.data(), y.data());
    return norm.denormalize(y);
}

Mat AutoencoderModel::decoder_jacobian(const Vec& z) const {
    if (z.size() != latent_dim)
        throw std::invalid_argument("decoder_jacobian: dimension mismatch");
    Vec z2 = w_hid * z + b_hid;
    Vec sp = z2.unaryExpr([](double v) { return swish_prime(v); });
    Mat J = Mat::Zero(full_dim, latent_dim);
    for (int r = 0; r < full_dim; ++r) {
        for (int k = mask_out.row_ptr[static_cast<size_t>(r)];
             k < mask_out.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
            const int h = mask_out.col_idx[static_cast<size_t>(k)];
            const double c = norm.scale[r] * w_out[static_cast<size_t>(k)] * sp[h];
            J.row(r) += c * w_hid.row(h);
        }
    }
    return J;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_update(double* w, const double* g, AdamState& st, size_t n,
                 double lr, int t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t k = 0; k < n; ++k) {
        st.m[k] = beta1 * st.m[k] + (1.0 - beta1) * g[k];
        st.v[k] = beta2 * st.v[k] + (1.0 - beta2) * g[k] * g[k];
        w[k] -= lr * (st.m[k] / bc1) / (std::sqrt(st.v[k] / bc2) + eps);
    }
}

struct Snapshot {
    std::vector<double> w_in, w_out;
    RowMat w_lat, w_hid;
    Vec b_in, b_hid;
};

Snapshot capture(const AutoencoderModel& m) {
    return {m.w_in, m.w_out, m.w_lat, m.w_hid, m.b_in, m.b_hid};
}

void restore(AutoencoderModel& m, const Snapshot& s) {
    m.w_in = s.w_in;
    m.w_out = s.w_out;
    m.w_lat = s.w_lat;
    m.w_hid = s.w_hid;
    m.b_in = s.b_in;
    m.b_hid = s.b_hid;
}

}  // namespace

double reconstruction_mse(const AutoencoderModel& m, const RowMat& rows) {
    if (rows.rows() == 0) return 0.0;
    double acc = 0.0;
    Vec x(m.full_dim);
    for (Eigen::Index b = 0; b < rows.rows(); ++b) {
        x = rows.row(b).transpose();
        Vec xn = m.norm.normalize(x);
        Vec z1(m.hidden);
        spmv(m.mask_in, m.w_in, xn.data(), z1.data());
        z1 += m.b_in;
        Vec a1 = z1.unaryExpr([](double z) { return swish(z); });
        Vec zl = m.w_lat * a1;
        Vec z2 = m.w_hid * zl + m.b_hid;
        Vec a2 = z2.unaryExpr([](double v) { return swish(v); });
        Vec y(m.full_dim);
        spmv(m.mask_out, m.w_out, a2.data(), y.data());
        acc += (y - xn).squaredNorm();
    }
    return acc / (static_cast<double>(rows.rows()) * m.full_dim);
}

TrainResult train(const RowMat& snapshots, int latent_dim,
                  const MaskParams& mask_params, const TrainConfig& cfg) {
    const int S = static_cast<int>(snapshots.rows());
    const int N = static_cast<int>(snapshots.cols());
    if (S < 2) throw std::invalid_argument("train: need at least 2 snapshots");
    if (latent_dim >= N) throw std::invalid_argument("train: latent_dim must be < full_dim");

    const int w = (mask_params.hidden_width > 0)
                      ? mask_params.hidden_width
                      : static_cast<int>(mask_params.width_factor * N);
    const int spacing = (mask_params.band_spacing > 0)
                            ? mask_params.band_spacing
                            : std::max(1, w / std::max(1, N / 8));

    auto [train_idx, val_idx] = split_indices(S, cfg.split_fraction, cfg.seed);

    AutoencoderModel m;
    m.full_dim = N;
    m.latent_dim = latent_dim;
    m.hidden = w;
    m.mask_out = build_triband_mask(N, w, mask_params.band_size, spacing);
    m.mask_in = m.mask_out.transposed();

    // Normalization statistics from the training split only.
    m.norm.shift = Vec::Zero(N);
    m.norm.scale = Vec::Zero(N);
    for (int idx : train_idx) m.norm.shift += snapshots.row(idx).transpose();
    m.norm.shift /= static_cast<double>(train_idx.size());
    for (int idx : train_idx) {
        Vec d = snapshots.row(idx).transpose() - m.norm.shift;
        m.norm.scale += d.cwiseProduct(d);
    }
    m.norm.scale = (m.norm.scale / static_cast<double>(train_idx.size()))
                       .cwiseSqrt()
                       .cwiseMax(1e-8);

    // Glorot-uniform initialization, seeded.
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ull);
    auto glorot = [&](int fan_in, int fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        return std::uniform_real_distribution<double>(-a, a);
    };
    {
        auto d = glorot(N, w);
        m.w_in.resize(static_cast<size_t>(m.mask_in.nnz()));
        for (auto& v : m.w_in) v = d(rng);
        m.b_in = Vec::Zero(w);
        d = glorot(w, latent_dim);
        m.w_lat.resize(latent_dim, w);
        for (Eigen::Index i = 0; i < m.w_lat.size(); ++i) m.w_lat.data()[i] = d(rng);
        d = glorot(latent_dim, w);
        m.w_hid.resize(w, latent_dim);
        for (Eigen::Index i = 0; i < m.w_hid.size(); ++i) m.w_hid.data()[i] = d(rng);
        m.b_hid = Vec::Zero(w);
        d = glorot(w, N);
        m.w_out.resize(static_cast<size_t>(m.mask_out.nnz()));
        for (auto& v : m.w_out) v = d(rng);
    }

    // Normalized train/val matrices.
    RowMat Xtr(static_cast<Eigen::Index>(train_idx.size()), N);
    for (size_t k = 0; k < train_idx.size(); ++k)
        Xtr.row(static_cast<Eigen::Index>(k)) =
            (snapshots.row(train_idx[k]).transpose() - m.norm.shift)
                .cwiseQuotient(m.norm.scale)
                .transpose();
    RowMat Xval(static_cast<Eigen::Index>(val_idx.size()), N);
    for (size_t k = 0; k < val_idx.size(); ++k)
        Xval.row(static_cast<Eigen::Index>(k)) =
            (snapshots.row(val_idx[k]).transpose() - m.norm.shift)
                .cwiseQuotient(m.norm.scale)
                .transpose();

    // Validation against already-normalized rows: identity normalization.
    AutoencoderModel probe = m;
    probe.norm.shift = Vec::Zero(N);
    probe.norm.scale = Vec::Ones(N);
    auto val_mse = [&]() {
        restore(probe, capture(m));
        return reconstruction_mse(probe, Xval);
    };
    auto train_mse_full = [&]() {
        restore(probe, capture(m));
        return reconstruction_mse(probe, Xtr);
    };

    TrainResult out;
    out.history.initial_val_mse = val_mse();
    out.history.epochs.push_back(
        {0, train_mse_full(), out.history.initial_val_mse, cfg.lr0});

    AdamState st_w_in(m.w_in.size()), st_w_out(m.w_out.size());
    AdamState st_w_lat(static_cast<size_t>(m.w_lat.size()));
    AdamState st_w_hid(static_cast<size_t>(m.w_hid.size()));
    AdamState st_b_in(static_cast<size_t>(w)), st_b_hid(static_cast<size_t>(w));
    int adam_t = 0;

    double lr = cfg.lr0;
    double best_val = out.history.initial_val_mse;
    Snapshot best = capture(m);
    int best_epoch = 0;
    int plateau = 0, stall = 0;

    const int n_train = static_cast<int>(train_idx.size());
    std::vector<int> order(static_cast<size_t>(n_train));
    for (int i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;

    const int B = cfg.batch;
    RowMat X(B, N);
    detail::AeBackprop bp(m, B);
    detail::AeGradients g(m);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double train_loss = 0.0;
        long train_count = 0;
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (int start = 0; start < n_train; start += B) {
            const int bs = std::min(B, n_train - start);
            for (int b = 0; b < bs; ++b)
                X.row(b) = Xtr.row(order[static_cast<size_t>(start + b)]);
            RowMat T = X.topRows(bs);  // clean targets
            if (cfg.noise_sigma > 0.0)
                for (int b = 0; b < bs; ++b)
                    for (int c = 0; c < N; ++c) X(b, c) += noise(rng);

            const double loss = bp.run(m, X, bs, T, g);
            train_loss += loss * bs;
            train_count += bs;

            ++adam_t;
            if (lr > 0.0) {
                adam_update(m.w_in.data(), g.w_in.data(), st_w_in, m.w_in.size(), lr, adam_t);
                adam_update(m.w_out.data(), g.w_out.data(), st_w_out, m.w_out.size(), lr, adam_t);
                adam_update(m.w_lat.data(), g.w_lat.data(), st_w_lat,
                            static_cast<size_t>(m.w_lat.size()), lr, adam_t);
                adam_update(m.w_hid.data(), g.w_hid.data(), st_w_hid,
                            static_cast<size_t>(m.w_hid.size()), lr, adam_t);
                adam_update(m.b_in.data(), g.b_in.data(), st_b_in,
                            static_cast<size_t>(w), lr, adam_t);
                adam_update(m.b_hid.data(), g.b_hid.data(), st_b_hid,
                            static_cast<size_t>(w), lr, adam_t);
            }
        }

        const double val = val_mse();
        out.history.epochs.push_back(
            {epoch, train_loss / static_cast<double>(train_count), val, lr});
        out.history.epochs_run = epoch;

        if (val < best_val) {
            best_val = val;
            best = capture(m);
            best_epoch = epoch;
            plateau = 0;
            stall = 0;
        } else {
            ++plateau;
            ++stall;
            if (plateau >= cfg.plateau_patience) {
                lr *= cfg.plateau_factor;
                plateau = 0;
            }
            if (stall >= cfg.early_stop_patience) break;
        }
    }

    restore(m, best);
    out.history.best_val_mse = best_val;
    out.history.best_epoch = best_epoch;
    out.model = std::move(m);
    return out;
}

}  // namespace ddrom
