#pragma once

#include <cstddef>
#include <vector>

#include "stsr/rng.hpp"
#include "stsr/sgd.hpp"
#include "stsr/tensor.hpp"

namespace stsr {

// One-hidden-layer sparse autoencoder: sigmoid encoder, affine decoder.
// The training objective is reconstruction MSE plus a KL sparsity penalty on
// the batch-mean activations plus L2 weight decay.
struct SparseAutoencoder {
    Tensor w_enc;  // h x d
    Tensor b_enc;  // h
    Tensor w_dec;  // d x h
    Tensor b_dec;  // d
    double beta = 3.0;
    double lambda = 3e-3;
    double rho = 0.035;
    // When set, the L2 term covers decoder weights only.
    bool l2_decoder_only = false;

    std::size_t input_dim() const { return w_enc.cols(); }
    std::size_t hidden_dim() const { return w_enc.rows(); }

    void validate() const;

    // Symmetric uniform init in +-sqrt(6/(d+h)), zero biases.
    static SparseAutoencoder init(std::size_t d, std::size_t h, Rng& rng);
};

struct GenerativeAction {
    double value = 0.0;
    double mse_term = 0.0;
    double kl_term = 0.0;
    double l2_term = 0.0;
};

// z = sigmoid(w_enc x + b_enc)
Tensor encode(const SparseAutoencoder& m, const Tensor& x);
// Z[Bxh] for a batch X[Bxd]
Tensor encode_batch(const SparseAutoencoder& m, const Tensor& batch);
// x_hat = w_dec z + b_dec (affine output)
Tensor decode(const SparseAutoencoder& m, const Tensor& z);
Tensor decode_batch(const SparseAutoencoder& m, const Tensor& z_batch);

// Sum over components of KL(rho || zbar_j) for Bernoulli means, with zbar
// clamped into [1e-6, 1-1e-6].
double kl_sparsity(const Tensor& zbar, double rho);

GenerativeAction generative_action(const SparseAutoencoder& m, const Tensor& batch);

// Closed-form dA_g/dw_dec = (2/B) sum_b (x_hat_b - x_b) z_b^T + 2 lambda w_dec.
Tensor decoder_surprisal(const SparseAutoencoder& m, const Tensor& batch);

struct SaeGradients {
    Tensor w_enc, b_enc, w_dec, b_dec;
};

// Analytic gradients of the full action for every parameter.
SaeGradients sae_gradients(const SparseAutoencoder& m, const Tensor& batch);

struct TrainTrace {
    std::vector<double> epoch_loss;
};

TrainTrace train_sae(SparseAutoencoder& m, const Tensor& patches, const SgdConfig& cfg, Rng& rng,
                     std::size_t batch_size = 64);

}  // namespace stsr
