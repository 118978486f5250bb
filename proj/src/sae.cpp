#include "stsr/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stsr {

namespace {

constexpr double kKlClamp = 1e-6;

void add_row_broadcast(Tensor& m, const Tensor& row) {
    const std::size_t r = m.rows(), c = m.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) += row(j);
}

Tensor column_sum(const Tensor& m) {
    Tensor s({m.cols()});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(j) += m(i, j);
    return s;
}

Tensor column_mean(const Tensor& m) {
    Tensor s = column_sum(m);
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& v : s.data) v *= inv;
    return s;
}

void require_batch(const SparseAutoencoder& m, const Tensor& batch) {
    if (batch.ndim() != 2 || batch.cols() != m.input_dim())
        throw std::invalid_argument("sae: batch shape " + shape_to_string(batch.shape) +
                                    " does not match input dim " + std::to_string(m.input_dim()));
    if (batch.rows() == 0) throw std::invalid_argument("sae: empty batch");
}

}  // namespace

void SparseAutoencoder::validate() const {
    if (rho <= 0.0 || rho >= 1.0) throw std::invalid_argument("sae: rho must be in (0,1)");
    if (beta < 0.0 || lambda < 0.0) throw std::invalid_argument("sae: beta/lambda must be >= 0");
    if (w_enc.ndim() != 2 || w_dec.ndim() != 2 || w_dec.rows() != w_enc.cols() ||
        w_dec.cols() != w_enc.rows())
        throw std::invalid_argument("sae: inconsistent weight shapes");
    if (b_enc.size() != hidden_dim() || b_dec.size() != input_dim())
        throw std::invalid_argument("sae: inconsistent bias shapes");
    if (!w_enc.all_finite() || !w_dec.all_finite() || !b_enc.all_finite() || !b_dec.all_finite())
        throw std::invalid_argument("sae: non-finite parameters");
}

SparseAutoencoder SparseAutoencoder::init(std::size_t d, std::size_t h, Rng& rng) {
    SparseAutoencoder m;
    const double bound = std::sqrt(6.0 / static_cast<double>(d + h));
    m.w_enc = Tensor({h, d});
    m.w_dec = Tensor({d, h});
    m.b_enc = Tensor({h});
    m.b_dec = Tensor({d});
    for (double& v : m.w_enc.data) v = rng.uniform(-bound, bound);
    for (double& v : m.w_dec.data) v = rng.uniform(-bound, bound);
    return m;
}

Tensor encode(const SparseAutoencoder& m, const Tensor& x) {
    if (x.size() != m.input_dim())
        throw std::invalid_argument("encode: input length " + std::to_string(x.size()) +
                                    " != d " + std::to_string(m.input_dim()));
    Tensor z({m.hidden_dim()});
    for (std::size_t i = 0; i < m.hidden_dim(); ++i) {
        double s = m.b_enc(i);
        const double* wi = &m.w_enc.data[i * m.input_dim()];
        for (std::size_t j = 0; j < m.input_dim(); ++j) s += wi[j] * x.data[j];
        z(i) = sigmoid(s);
    }
    return z;
}

Tensor encode_batch(const SparseAutoencoder& m, const Tensor& batch) {
    require_batch(m, batch);
    Tensor a = matmul_nt(batch, m.w_enc);  // B x h
    add_row_broadcast(a, m.b_enc);
    for (double& v : a.data) v = sigmoid(v);
    return a;
}

Tensor decode(const SparseAutoencoder& m, const Tensor& z) {
    if (z.size() != m.hidden_dim())
        throw std::invalid_argument("decode: latent length " + std::to_string(z.size()) +
                                    " != h " + std::to_string(m.hidden_dim()));
    Tensor x({m.input_dim()});
    for (std::size_t i = 0; i < m.input_dim(); ++i) {
        double s = m.b_dec(i);
        const double* wi = &m.w_dec.data[i * m.hidden_dim()];
        for (std::size_t j = 0; j < m.hidden_dim(); ++j) s += wi[j] * z.data[j];
        x(i) = s;
    }
    return x;
}

Tensor decode_batch(const SparseAutoencoder& m, const Tensor& z_batch) {
    if (z_batch.ndim() != 2 || z_batch.cols() != m.hidden_dim())
        throw std::invalid_argument("decode_batch: bad latent shape " +
                                    shape_to_string(z_batch.shape));
    Tensor x = matmul_nt(z_batch, m.w_dec);  // B x d
    add_row_broadcast(x, m.b_dec);
    return x;
}

double kl_sparsity(const Tensor& zbar, double rho) {
    double kl = 0.0;
    for (double z : zbar.data) {
        const double c = std::clamp(z, kKlClamp, 1.0 - kKlClamp);
        kl += rho * std::log(rho / c) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - c));
    }
    return kl;
}

GenerativeAction generative_action(const SparseAutoencoder& m, const Tensor& batch) {
    require_batch(m, batch);
    const std::size_t b = batch.rows();
    Tensor z = encode_batch(m, batch);
    Tensor xhat = decode_batch(m, z);

    GenerativeAction a;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double e = batch.data[i] - xhat.data[i];
        a.mse_term += e * e;
    }
    a.mse_term /= static_cast<double>(b);
    a.kl_term = kl_sparsity(column_mean(z), m.rho);
    a.l2_term = squared_norm(m.w_dec) + (m.l2_decoder_only ? 0.0 : squared_norm(m.w_enc));
    a.value = a.mse_term + m.beta * a.kl_term + m.lambda * a.l2_term;
    return a;
}

Tensor decoder_surprisal(const SparseAutoencoder& m, const Tensor& batch) {
    require_batch(m, batch);
    const double inv_b = 1.0 / static_cast<double>(batch.rows());
    Tensor z = encode_batch(m, batch);
    Tensor err = sub(decode_batch(m, z), batch);  // x_hat - x, B x d
    for (double& v : err.data) v *= 2.0 * inv_b;
    Tensor g = matmul_tn(err, z);  // d x h
    axpy(2.0 * m.lambda, m.w_dec, g);
    return g;
}

SaeGradients sae_gradients(const SparseAutoencoder& m, const Tensor& batch) {
    require_batch(m, batch);
    const std::size_t b = batch.rows();
    const double inv_b = 1.0 / static_cast<double>(b);

    Tensor z = encode_batch(m, batch);       // B x h
    Tensor xhat = decode_batch(m, z);        // B x d
    Tensor err = sub(xhat, batch);
    for (double& v : err.data) v *= 2.0 * inv_b;  // dA/dxhat

    SaeGradients g;
    g.w_dec = matmul_tn(err, z);
    axpy(2.0 * m.lambda, m.w_dec, g.w_dec);
    g.b_dec = column_sum(err);

    // dA/dz: MSE path plus the KL penalty on the batch-mean activations.
    Tensor dz = matmul(err, m.w_dec);  // B x h
    Tensor zbar = column_mean(z);
    for (std::size_t j = 0; j < zbar.size(); ++j) {
        const double zj = zbar(j);
        // Clamped components contribute no gradient.
        if (zj <= kKlClamp || zj >= 1.0 - kKlClamp) continue;
        const double dkl = -m.rho / zj + (1.0 - m.rho) / (1.0 - zj);
        const double per_row = m.beta * dkl * inv_b;
        for (std::size_t i = 0; i < b; ++i) dz(i, j) += per_row;
    }
    for (std::size_t i = 0; i < dz.size(); ++i) {
        const double zi = z.data[i];
        dz.data[i] *= zi * (1.0 - zi);
    }

    g.w_enc = matmul_tn(dz, batch);  // h x d
    if (!m.l2_decoder_only) axpy(2.0 * m.lambda, m.w_enc, g.w_enc);
    g.b_enc = column_sum(dz);
    return g;
}

TrainTrace train_sae(SparseAutoencoder& m, const Tensor& patches, const SgdConfig& cfg, Rng& rng,
                     std::size_t batch_size) {
    m.validate();
    cfg.validate();
    require_batch(m, patches);
    const std::size_t n = patches.rows(), d = patches.cols();
    if (n < batch_size) throw std::invalid_argument("train_sae: fewer patches than batch size");

    SaeGradients vel{Tensor(m.w_enc.shape), Tensor(m.b_enc.shape), Tensor(m.w_dec.shape),
                     Tensor(m.b_dec.shape)};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainTrace trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start + batch_size <= n; start += batch_size) {
            Tensor batch({batch_size, d});
            for (std::size_t r = 0; r < batch_size; ++r)
                std::copy_n(&patches.data[order[start + r] * d], d, &batch.data[r * d]);

            loss_sum += generative_action(m, batch).value;
            ++n_batches;
            SaeGradients grad = sae_gradients(m, batch);
            // Weight decay lives inside the action's L2 term, not the optimizer.
            SgdConfig step_cfg = cfg;
            step_cfg.weight_decay = 0.0;
            sgd_step(m.w_enc, grad.w_enc, vel.w_enc, step_cfg, epoch);
            sgd_step(m.b_enc, grad.b_enc, vel.b_enc, step_cfg, epoch);
            sgd_step(m.w_dec, grad.w_dec, vel.w_dec, step_cfg, epoch);
            sgd_step(m.b_dec, grad.b_dec, vel.b_dec, step_cfg, epoch);
        }
        const double epoch_loss = loss_sum / static_cast<double>(n_batches);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_sae: non-finite loss at epoch " +
                                     std::to_string(epoch));
        trace.epoch_loss.push_back(epoch_loss);
    }
    return trace;
}

}  // namespace stsr
