#pragma once

#include "ddrom/autoencoder.hpp"

#include <cmath>
#include <vector>

namespace ddrom::detail {

struct AeGradients {
    std::vector<double> w_in, w_out;
    RowMat w_lat, w_hid;
    Vec b_in, b_hid;

    explicit AeGradients(const AutoencoderModel& m)
        : w_in(m.w_in.size()),
          w_out(m.w_out.size()),
          w_lat(m.latent_dim, m.hidden),
          w_hid(m.hidden, m.latent_dim),
          b_in(m.hidden),
          b_hid(m.hidden) {}
};

/// One forward/backward pass of the autoencoder MSE loss in normalized
/// space: loss = mean over (batch x full_dim) of (reconstruct(X) - T)^2.
/// Used verbatim by the Adam training loop; kept separate so its analytic
/// gradients can be checked against finite differences.
class AeBackprop {
public:
    AeBackprop(const AutoencoderModel& m, int max_batch)
        : Y_(max_batch, m.full_dim),
          dY_(max_batch, m.full_dim),
          Z1_(max_batch, m.hidden),
          A1_(max_batch, m.hidden),
          S1_(max_batch, m.hidden),
          Z2_(max_batch, m.hidden),
          A2_(max_batch, m.hidden),
          S2_(max_batch, m.hidden),
          Zl_(max_batch, m.latent_dim),
          dZl_(max_batch, m.latent_dim) {}

    /// X holds the (possibly noise-corrupted) normalized inputs in its
    /// first bs rows; T the clean normalized targets. Returns the batch
    /// MSE and fills g with d loss / d parameters.
    double run(const AutoencoderModel& m, const RowMat& X, int bs,
               const RowMat& T, AeGradients& g) {
        const int N = m.full_dim;
        const int w = m.hidden;

        for (int b = 0; b < bs; ++b) {
            spmv(m.mask_in, m.w_in, X.row(b).data(), Z1_.row(b).data());
            Z1_.row(b) += m.b_in.transpose();
        }
        activate(Z1_, A1_, S1_, bs, w);
        Zl_.topRows(bs).noalias() = A1_.topRows(bs) * m.w_lat.transpose();
        Z2_.topRows(bs).noalias() = Zl_.topRows(bs) * m.w_hid.transpose();
        for (int b = 0; b < bs; ++b) Z2_.row(b) += m.b_hid.transpose();
        activate(Z2_, A2_, S2_, bs, w);
        for (int b = 0; b < bs; ++b)
            spmv(m.mask_out, m.w_out, A2_.row(b).data(), Y_.row(b).data());

        const double inv = 1.0 / (static_cast<double>(bs) * N);
        double loss = 0.0;
        for (int b = 0; b < bs; ++b)
            for (int c = 0; c < N; ++c) {
                const double e = Y_(b, c) - T(b, c);
                dY_(b, c) = 2.0 * inv * e;
                loss += e * e;
            }
        loss *= inv;

        // grad W_out; dA2 accumulated into Z2_.
        for (int r = 0; r < N; ++r)
            for (int k = m.mask_out.row_ptr[static_cast<size_t>(r)];
                 k < m.mask_out.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
                const int h = m.mask_out.col_idx[static_cast<size_t>(k)];
                double acc = 0.0;
                for (int b = 0; b < bs; ++b) acc += dY_(b, r) * A2_(b, h);
                g.w_out[static_cast<size_t>(k)] = acc;
            }
        Z2_.topRows(bs).setZero();
        for (int r = 0; r < N; ++r)
            for (int k = m.mask_out.row_ptr[static_cast<size_t>(r)];
                 k < m.mask_out.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
                const int h = m.mask_out.col_idx[static_cast<size_t>(k)];
                const double wv = m.w_out[static_cast<size_t>(k)];
                for (int b = 0; b < bs; ++b) Z2_(b, h) += dY_(b, r) * wv;
            }
        Z2_.topRows(bs).array() *= S2_.topRows(bs).array();  // dZ2
        for (int h = 0; h < w; ++h) {
            double acc = 0.0;
            for (int b = 0; b < bs; ++b) acc += Z2_(b, h);
            g.b_hid[h] = acc;
        }
        g.w_hid.noalias() = Z2_.topRows(bs).transpose() * Zl_.topRows(bs);
        dZl_.topRows(bs).noalias() = Z2_.topRows(bs) * m.w_hid;
        g.w_lat.noalias() = dZl_.topRows(bs).transpose() * A1_.topRows(bs);
        Z1_.topRows(bs).noalias() = dZl_.topRows(bs) * m.w_lat;  // dA1
        Z1_.topRows(bs).array() *= S1_.topRows(bs).array();      // dZ1
        for (int h = 0; h < w; ++h) {
            double acc = 0.0;
            for (int b = 0; b < bs; ++b) acc += Z1_(b, h);
            g.b_in[h] = acc;
        }
        for (int h = 0; h < w; ++h)
            for (int k = m.mask_in.row_ptr[static_cast<size_t>(h)];
                 k < m.mask_in.row_ptr[static_cast<size_t>(h) + 1]; ++k) {
                const int c = m.mask_in.col_idx[static_cast<size_t>(k)];
                double acc = 0.0;
                for (int b = 0; b < bs; ++b) acc += Z1_(b, h) * X(b, c);
                g.w_in[static_cast<size_t>(k)] = acc;
            }
        return loss;
    }

private:
    static void spmv(const TriBandMask& mk, const std::vector<double>& vals,
                     const double* x, double* out) {
        for (int r = 0; r < mk.rows; ++r) {
            double acc = 0.0;
            for (int k = mk.row_ptr[static_cast<size_t>(r)];
                 k < mk.row_ptr[static_cast<size_t>(r) + 1]; ++k)
                acc += vals[static_cast<size_t>(k)] *
                       x[mk.col_idx[static_cast<size_t>(k)]];
            out[r] = acc;
        }
    }

    static void activate(const RowMat& Z, RowMat& A, RowMat& S, int bs, int w) {
        for (int b = 0; b < bs; ++b)
            for (int h = 0; h < w; ++h) {
                const double z = Z(b, h);
                const double s = 1.0 / (1.0 + std::exp(-z));
                A(b, h) = z * s;
                S(b, h) = s + z * s * (1.0 - s);
            }
    }

    RowMat Y_, dY_, Z1_, A1_, S1_, Z2_, A2_, S2_, Zl_, dZl_;
};

}  // namespace ddrom::detail
