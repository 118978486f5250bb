#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "stsr/head.hpp"
#include "stsr/rng.hpp"

using namespace stsr;

namespace {

// Two well-separated Gaussian blobs in d dimensions.
void make_blobs(std::size_t n_per_class, std::size_t d, Rng& rng, Tensor& x,
                std::vector<std::size_t>& labels) {
    const std::size_t n = 2 * n_per_class;
    x = Tensor({n, d});
    labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 2;
        labels[i] = cls;
        for (std::size_t j = 0; j < d; ++j)
            x(i, j) = (cls ? 1.0 : -1.0) + 0.3 * rng.normal();
    }
}

}  // namespace

TEST_CASE("ce_loss hand computation and gradient oracle") {
    Tensor y = Tensor::vector({1.0, 2.0, 3.0});
    // softmax CE with label 2: log(sum exp) - y_2
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    CHECK(ce_loss(y, 2) == doctest::Approx(lse - 3.0).epsilon(1e-12));

    Tensor grad;
    ce_loss(y, 1, &grad);
    for (std::size_t k = 0; k < 3; ++k) {
        Tensor up = y, dn = y;
        up(k) += 1e-6;
        dn(k) -= 1e-6;
        const double fd = (ce_loss(up, 1) - ce_loss(dn, 1)) / 2e-6;
        CHECK(std::fabs(grad(k) - fd) < 1e-8);
    }
}

TEST_CASE("ce_loss is stable for huge logits") {
    Tensor y = Tensor::vector({1000.0, 0.0});
    CHECK(std::isfinite(ce_loss(y, 0)));
    CHECK(ce_loss(y, 0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mlp init shapes follow the 300/100 pattern") {
    Rng rng(31);
    auto h = MlpHead::init(40, 7, rng);
    CHECK(h.w1.shape == std::vector<std::size_t>{40, 300});
    CHECK(h.w2.shape == std::vector<std::size_t>{300, 100});
    CHECK(h.w3.shape == std::vector<std::size_t>{100, 7});
    CHECK(h.input_dim() == 40);
    CHECK(h.n_classes() == 7);
}

TEST_CASE("mlp_forward_batch agrees with per-sample mlp_forward") {
    Rng rng(32);
    auto h = MlpHead::init(6, 3, rng, 10, 5);
    Tensor batch({4, 6});
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    Tensor out = mlp_forward_batch(h, batch);
    REQUIRE(out.shape == std::vector<std::size_t>{4, 3});
    for (std::size_t b = 0; b < 4; ++b) {
        Tensor x({6});
        for (std::size_t j = 0; j < 6; ++j) x(j) = batch(b, j);
        Tensor y = mlp_forward(h, x);
        for (std::size_t k = 0; k < 3; ++k) CHECK(out(b, k) == doctest::Approx(y(k)));
    }
}

TEST_CASE("train_head separates easy blobs") {
    Rng rng(33);
    Tensor x;
    std::vector<std::size_t> labels;
    make_blobs(40, 8, rng, x, labels);
    auto h = MlpHead::init(8, 2, rng, 16, 8);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, 0.1}};
    cfg.epochs = 60;
    cfg.weight_decay = 0.0;
    Rng train_rng(34);
    auto stats = train_head(h, x, labels, cfg, train_rng, 16);
    CHECK(stats.final_train_accuracy > 0.95);
    CHECK(stats.epoch_loss.back() < stats.epoch_loss.front());
}

TEST_CASE("perception net trains on blobs and exposes penultimate features") {
    Rng rng(35);
    Tensor x;
    std::vector<std::size_t> labels;
    make_blobs(50, 10, rng, x, labels);
    auto net = PerceptionNet::init(10, 2, rng, 12);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, 0.1}};
    cfg.epochs = 60;
    cfg.weight_decay = 0.0;
    Rng train_rng(36);
    auto stats = train_perception(net, x, labels, cfg, train_rng, 16);
    CHECK(stats.final_train_accuracy > 0.95);

    Tensor sample({10});
    for (std::size_t j = 0; j < 10; ++j) sample(j) = x(0, j);
    Tensor z = percep_features(net, sample);
    CHECK(z.size() == net.feat_dim());
    for (double v : z.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    Tensor y = percep_logits(net, sample);
    Tensor manual = logits(net.head, z);
    CHECK(max_abs(sub(y, manual)) < 1e-12);
}

TEST_CASE("percep_features_batch agrees with per-sample path") {
    Rng rng(37);
    auto net = PerceptionNet::init(6, 3, rng, 9);
    Tensor batch({5, 6});
    for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
    Tensor zb = percep_features_batch(net, batch);
    REQUIRE(zb.shape == std::vector<std::size_t>{5, 9});
    for (std::size_t b = 0; b < 5; ++b) {
        Tensor x({6});
        for (std::size_t j = 0; j < 6; ++j) x(j) = batch(b, j);
        Tensor z = percep_features(net, x);
        for (std::size_t j = 0; j < 9; ++j) CHECK(zb(b, j) == doctest::Approx(z(j)));
    }
}

TEST_CASE("infer runs the full three-step pipeline") {
    Rng rng(38);
    Tensor x;
    std::vector<std::size_t> labels;
    make_blobs(60, 8, rng, x, labels);
    auto net = PerceptionNet::init(8, 2, rng, 10);
    SgdConfig pcfg;
    pcfg.lr_schedule = {{0, 0.1}};
    pcfg.epochs = 60;
    pcfg.weight_decay = 0.0;
    Rng prng(39);
    train_perception(net, x, labels, pcfg, prng, 16);

    // Build gradient features for the whole training set, normalize, train H.
    const std::size_t n = x.rows();
    std::vector<SurprisalFeature> feats;
    feats.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor xi({8});
        for (std::size_t j = 0; j < 8; ++j) xi(j) = x(i, j);
        feats.push_back(extract_rx(net.head, percep_features(net, xi)));
    }
    NormStats stats = fit_norm(feats);
    Tensor rx_rows({n, feats[0].r.size()});
    for (std::size_t i = 0; i < n; ++i) {
        Tensor r = apply_norm(feats[i].r, stats);
        for (std::size_t j = 0; j < r.size(); ++j) rx_rows(i, j) = r(j);
    }
    auto head = MlpHead::init(rx_rows.cols(), 2, rng, 16, 8);
    SgdConfig hcfg;
    hcfg.lr_schedule = {{0, 0.1}};
    hcfg.epochs = 80;
    hcfg.weight_decay = 0.0;
    Rng hrng(40);
    auto hstats = train_head(head, rx_rows, labels, hcfg, hrng, 16);
    CHECK(hstats.final_train_accuracy > 0.9);

    // infer's refined prediction must equal the manual pipeline sample by sample
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor xi({8});
        for (std::size_t j = 0; j < 8; ++j) xi(j) = x(i, j);
        InferResult res = infer(xi, net, stats, head);
        Tensor z = percep_features(net, xi);
        CHECK(res.coarse == predict(logits(net.head, z)));
        Tensor r = apply_norm(extract_rx(net.head, z).r, stats);
        CHECK(res.refined == predict(mlp_forward(head, r)));
        if (res.refined == labels[i]) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(n) > 0.9);
}

TEST_CASE("train_head rejects label out of range") {
    Rng rng(41);
    auto h = MlpHead::init(4, 2, rng, 8, 4);
    Tensor x({2, 4});
    std::vector<std::size_t> labels{0, 5};
    SgdConfig cfg;
    cfg.epochs = 1;
    Rng trng(42);
    CHECK_THROWS(train_head(h, x, labels, cfg, trng, 2));
}
