#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stsr/rng.hpp"
#include "stsr/sae.hpp"

using namespace stsr;

namespace {

Tensor random_batch(std::size_t b, std::size_t d, Rng& rng) {
    Tensor t({b, d});
    for (double& v : t.data) v = rng.uniform(0.05, 0.95);
    return t;
}

double fd_generative(SparseAutoencoder& m, Tensor& param, std::size_t idx, const Tensor& batch,
                     double h = 1e-6) {
    const double saved = param.data[idx];
    param.data[idx] = saved + h;
    const double up = generative_action(m, batch).value;
    param.data[idx] = saved - h;
    const double dn = generative_action(m, batch).value;
    param.data[idx] = saved;
    return (up - dn) / (2.0 * h);
}

}  // namespace

TEST_CASE("init shape and symmetric range") {
    Rng rng(3);
    auto m = SparseAutoencoder::init(12, 20, rng);
    CHECK(m.w_enc.shape == std::vector<std::size_t>{20, 12});
    CHECK(m.w_dec.shape == std::vector<std::size_t>{12, 20});
    const double bound = std::sqrt(6.0 / 32.0);
    for (double v : m.w_enc.data) {
        CHECK(v <= bound);
        CHECK(v >= -bound);
    }
    for (double v : m.b_enc.data) CHECK(v == 0.0);
    for (double v : m.b_dec.data) CHECK(v == 0.0);
}

TEST_CASE("encode produces sigmoid-range activations, decode is affine") {
    Rng rng(4);
    auto m = SparseAutoencoder::init(6, 9, rng);
    Tensor x = random_batch(1, 6, rng);
    x.shape = {6};
    Tensor z = encode(m, x);
    CHECK(z.size() == 9);
    for (double v : z.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    // decode linearity: decode(a+b) - decode(a) - decode(b) + decode(0) == 0
    Tensor za = Tensor({9}), zb = Tensor({9}), z0 = Tensor({9});
    for (std::size_t i = 0; i < 9; ++i) {
        za(i) = rng.uniform();
        zb(i) = rng.uniform();
    }
    Tensor sum_z = add(za, zb);
    Tensor lhs = sub(add(decode(m, sum_z), decode(m, z0)), add(decode(m, za), decode(m, zb)));
    CHECK(max_abs(lhs) < 1e-12);
}

TEST_CASE("encode_batch agrees with per-sample encode") {
    Rng rng(5);
    auto m = SparseAutoencoder::init(8, 10, rng);
    Tensor batch = random_batch(4, 8, rng);
    Tensor zb = encode_batch(m, batch);
    for (std::size_t b = 0; b < 4; ++b) {
        Tensor x({8});
        for (std::size_t j = 0; j < 8; ++j) x(j) = batch(b, j);
        Tensor z = encode(m, x);
        for (std::size_t j = 0; j < 10; ++j) CHECK(zb(b, j) == doctest::Approx(z(j)));
    }
}

TEST_CASE("kl_sparsity is zero at rho and positive elsewhere") {
    Tensor zbar = Tensor::vector({0.035, 0.035, 0.035});
    CHECK(kl_sparsity(zbar, 0.035) == doctest::Approx(0.0).epsilon(1e-12));
    Tensor off = Tensor::vector({0.5, 0.2, 0.035});
    CHECK(kl_sparsity(off, 0.035) > 0.0);

    // hand computation for a single component
    const double rho = 0.1, q = 0.3;
    const double expected = rho * std::log(rho / q) + (1 - rho) * std::log((1 - rho) / (1 - q));
    CHECK(kl_sparsity(Tensor::vector({q}), rho) == doctest::Approx(expected).epsilon(1e-12));

    // clamping keeps extreme means finite
    CHECK(std::isfinite(kl_sparsity(Tensor::vector({0.0, 1.0}), rho)));
}

TEST_CASE("generative_action term decomposition") {
    Rng rng(6);
    auto m = SparseAutoencoder::init(5, 7, rng);
    Tensor batch = random_batch(3, 5, rng);
    auto act = generative_action(m, batch);
    CHECK(act.value ==
          doctest::Approx(act.mse_term + m.beta * act.kl_term + m.lambda * act.l2_term)
              .epsilon(1e-12));
    CHECK(act.mse_term >= 0.0);
    CHECK(act.kl_term >= 0.0);
    CHECK(act.l2_term >= 0.0);

    SparseAutoencoder dec_only = m;
    dec_only.l2_decoder_only = true;
    auto act2 = generative_action(dec_only, batch);
    CHECK(act2.l2_term <= act.l2_term);
    CHECK(act2.l2_term == doctest::Approx(squared_norm(m.w_dec)).epsilon(1e-12));
}

TEST_CASE("decoder_surprisal matches finite differences") {
    Rng rng(7);
    auto m = SparseAutoencoder::init(5, 8, rng);
    Tensor batch = random_batch(6, 5, rng);
    Tensor g = decoder_surprisal(m, batch);
    REQUIRE(g.shape == m.w_dec.shape);
    for (std::size_t idx = 0; idx < g.size(); idx += 3) {
        const double fd = fd_generative(m, m.w_dec, idx, batch);
        CHECK(std::fabs(g.data[idx] - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
    }
}

TEST_CASE("sae_gradients match finite differences on every parameter group") {
    Rng rng(8);
    auto m = SparseAutoencoder::init(4, 6, rng);
    Tensor batch = random_batch(5, 4, rng);
    auto grads = sae_gradients(m, batch);

    auto check_group = [&](Tensor& param, const Tensor& grad) {
        REQUIRE(grad.shape == param.shape);
        for (std::size_t idx = 0; idx < param.size(); ++idx) {
            const double fd = fd_generative(m, param, idx, batch);
            CHECK(std::fabs(grad.data[idx] - fd) < 2e-6 * std::max(1.0, std::fabs(fd)));
        }
    };
    check_group(m.w_enc, grads.w_enc);
    check_group(m.b_enc, grads.b_enc);
    check_group(m.w_dec, grads.w_dec);
    check_group(m.b_dec, grads.b_dec);
}

TEST_CASE("decoder_surprisal equals the w_dec slot of the full gradient") {
    Rng rng(9);
    auto m = SparseAutoencoder::init(6, 10, rng);
    Tensor batch = random_batch(8, 6, rng);
    Tensor direct = decoder_surprisal(m, batch);
    auto grads = sae_gradients(m, batch);
    CHECK(max_abs(sub(direct, grads.w_dec)) < 1e-12);
}

TEST_CASE("training with lr=0 leaves parameters unchanged") {
    Rng rng(10);
    auto m = SparseAutoencoder::init(6, 8, rng);
    auto before = m;
    Tensor patches = random_batch(32, 6, rng);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, 0.0}};
    cfg.epochs = 1;
    Rng train_rng(1);
    train_sae(m, patches, cfg, train_rng, 8);
    CHECK(max_abs(sub(m.w_enc, before.w_enc)) == 0.0);
    CHECK(max_abs(sub(m.b_enc, before.b_enc)) == 0.0);
    CHECK(max_abs(sub(m.w_dec, before.w_dec)) == 0.0);
    CHECK(max_abs(sub(m.b_dec, before.b_dec)) == 0.0);
}

TEST_CASE("training reduces the action on a small corpus") {
    Rng rng(11);
    auto m = SparseAutoencoder::init(12, 16, rng);
    Tensor patches = random_batch(256, 12, rng);
    const double before = generative_action(m, patches).value;
    SgdConfig cfg;
    cfg.lr_schedule = {{0, 0.05}};
    cfg.epochs = 30;
    cfg.weight_decay = 0.0;
    Rng train_rng(2);
    auto trace = train_sae(m, patches, cfg, train_rng, 32);
    const double after = generative_action(m, patches).value;
    CHECK(after < before);
    CHECK(trace.epoch_loss.size() == 30);
    CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
}

TEST_CASE("training is deterministic under a fixed seed") {
    Rng init_rng(12);
    auto m1 = SparseAutoencoder::init(6, 8, init_rng);
    auto m2 = m1;
    Rng data_rng(13);
    Tensor patches = random_batch(64, 6, data_rng);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, 0.05}};
    cfg.epochs = 3;
    Rng r1(99), r2(99);
    train_sae(m1, patches, cfg, r1, 16);
    train_sae(m2, patches, cfg, r2, 16);
    CHECK(max_abs(sub(m1.w_enc, m2.w_enc)) == 0.0);
    CHECK(max_abs(sub(m1.w_dec, m2.w_dec)) == 0.0);
}

TEST_CASE("validate rejects inconsistent shapes") {
    Rng rng(14);
    auto m = SparseAutoencoder::init(5, 7, rng);
    m.w_dec = Tensor({5, 6});
    CHECK_THROWS(m.validate());
}
