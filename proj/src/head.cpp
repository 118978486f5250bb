#include "stsr/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stsr {

namespace {

void uniform_init(Tensor& w, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
}

void add_row_broadcast(Tensor& m, const Tensor& row) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += row(j);
}

Tensor column_sum(const Tensor& m) {
    Tensor s({m.cols()});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(j) += m(i, j);
    return s;
}

void sigmoid_inplace(Tensor& t) {
    for (double& v : t.data) v = sigmoid(v);
}

// dL/d(pre-activation) given dL/d(activation), in place
void sigmoid_backward(Tensor& grad, const Tensor& act) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad.data[i] *= act.data[i] * (1.0 - act.data[i]);
}

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& order, std::size_t start,
                   std::size_t count) {
    const std::size_t w = src.cols();
    Tensor out({count, w});
    for (std::size_t r = 0; r < count; ++r)
        std::copy_n(&src.data[order[start + r] * w], w, &out.data[r * w]);
    return out;
}

// Batch softmax CE; returns mean loss and fills dlogits (already divided by B).
double ce_batch(const Tensor& y, const std::vector<std::size_t>& labels, Tensor& dlogits) {
    const std::size_t b = y.rows(), n = y.cols();
    dlogits = Tensor({b, n});
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = &y.data[i * n];
        const double m = *std::max_element(row, row + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - m);
        const double lse = m + std::log(sum);
        loss += lse - row[labels[i]];
        for (std::size_t j = 0; j < n; ++j)
            dlogits(i, j) = (std::exp(row[j] - lse) - (j == labels[i] ? 1.0 : 0.0)) /
                            static_cast<double>(b);
    }
    return loss / static_cast<double>(b);
}

}  // namespace

MlpHead MlpHead::init(std::size_t in_dim, std::size_t n_classes, Rng& rng, std::size_t h1,
                      std::size_t h2) {
    MlpHead h;
    h.w1 = Tensor({in_dim, h1});
    h.b1 = Tensor({h1});
    h.w2 = Tensor({h1, h2});
    h.b2 = Tensor({h2});
    h.w3 = Tensor({h2, n_classes});
    h.b3 = Tensor({n_classes});
    uniform_init(h.w1, rng);
    uniform_init(h.w2, rng);
    uniform_init(h.w3, rng);
    return h;
}

PerceptionNet PerceptionNet::init(std::size_t in_dim, std::size_t n_classes, Rng& rng,
                                  std::size_t hidden) {
    PerceptionNet net;
    net.w1 = Tensor({in_dim, hidden});
    net.b1 = Tensor({hidden});
    net.head.w_l = Tensor({hidden, n_classes});
    net.head.b_l = Tensor({n_classes});
    uniform_init(net.w1, rng);
    uniform_init(net.head.w_l, rng);
    return net;
}

double ce_loss(const Tensor& y, std::size_t label, Tensor* grad_logits) {
    if (label >= y.size()) throw std::out_of_range("ce_loss: label out of range");
    const double m = *std::max_element(y.data.begin(), y.data.end());
    double sum = 0.0;
    for (double v : y.data) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    if (grad_logits) {
        *grad_logits = Tensor({y.size()});
        for (std::size_t j = 0; j < y.size(); ++j)
            (*grad_logits)(j) = std::exp(y.data[j] - lse) - (j == label ? 1.0 : 0.0);
    }
    return lse - y.data[label];
}

Tensor mlp_forward_batch(const MlpHead& h, const Tensor& x) {
    Tensor z1 = matmul(x, h.w1);
    add_row_broadcast(z1, h.b1);
    sigmoid_inplace(z1);
    Tensor z2 = matmul(z1, h.w2);
    add_row_broadcast(z2, h.b2);
    sigmoid_inplace(z2);
    Tensor y = matmul(z2, h.w3);
    add_row_broadcast(y, h.b3);
    return y;
}

Tensor mlp_forward(const MlpHead& h, const Tensor& x) {
    if (x.size() != h.input_dim())
        throw std::invalid_argument("mlp_forward: input width " + std::to_string(x.size()) +
                                    " != " + std::to_string(h.input_dim()));
    Tensor row({1, x.size()}, x.data);
    Tensor y = mlp_forward_batch(h, row);
    return Tensor({y.cols()}, y.data);
}

TrainStats train_head(MlpHead& h, const Tensor& feats, const std::vector<std::size_t>& labels,
                      const SgdConfig& cfg, Rng& rng, std::size_t batch_size) {
    cfg.validate();
    if (feats.ndim() != 2 || feats.cols() != h.input_dim())
        throw std::invalid_argument("train_head: feature width mismatch");
    if (feats.rows() != labels.size())
        throw std::invalid_argument("train_head: labels/features length mismatch");
    for (std::size_t lbl : labels)
        if (lbl >= h.n_classes())
            throw std::invalid_argument("train_head: label " + std::to_string(lbl) +
                                        " outside [0," + std::to_string(h.n_classes() - 1) + "]");
    const std::size_t n = feats.rows();
    batch_size = std::min(batch_size, n);

    Tensor vw1(h.w1.shape), vb1(h.b1.shape), vw2(h.w2.shape), vb2(h.b2.shape), vw3(h.w3.shape),
        vb3(h.b3.shape);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainStats stats;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start + batch_size <= n; start += batch_size) {
            Tensor x = gather_rows(feats, order, start, batch_size);
            std::vector<std::size_t> yb(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r) yb[r] = labels[order[start + r]];

            Tensor z1 = matmul(x, h.w1);
            add_row_broadcast(z1, h.b1);
            sigmoid_inplace(z1);
            Tensor z2 = matmul(z1, h.w2);
            add_row_broadcast(z2, h.b2);
            sigmoid_inplace(z2);
            Tensor y = matmul(z2, h.w3);
            add_row_broadcast(y, h.b3);

            Tensor dy;
            loss_sum += ce_batch(y, yb, dy);
            ++n_batches;

            Tensor gw3 = matmul_tn(z2, dy);
            Tensor gb3 = column_sum(dy);
            Tensor dz2 = matmul_nt(dy, h.w3);
            sigmoid_backward(dz2, z2);
            Tensor gw2 = matmul_tn(z1, dz2);
            Tensor gb2 = column_sum(dz2);
            Tensor dz1 = matmul_nt(dz2, h.w2);
            sigmoid_backward(dz1, z1);
            Tensor gw1 = matmul_tn(x, dz1);
            Tensor gb1 = column_sum(dz1);

            sgd_step(h.w1, gw1, vw1, cfg, epoch);
            sgd_step(h.b1, gb1, vb1, cfg, epoch);
            sgd_step(h.w2, gw2, vw2, cfg, epoch);
            sgd_step(h.b2, gb2, vb2, cfg, epoch);
            sgd_step(h.w3, gw3, vw3, cfg, epoch);
            sgd_step(h.b3, gb3, vb3, cfg, epoch);
        }
        const double epoch_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, n_batches));
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_head: non-finite loss at epoch " +
                                     std::to_string(epoch));
        stats.epoch_loss.push_back(epoch_loss);
    }

    Tensor y = mlp_forward_batch(h, feats);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor row({y.cols()});
        std::copy_n(&y.data[i * y.cols()], y.cols(), row.data.begin());
        if (predict(row) == labels[i]) ++correct;
    }
    stats.final_train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

Tensor percep_features_batch(const PerceptionNet& net, const Tensor& x) {
    Tensor z = matmul(x, net.w1);
    add_row_broadcast(z, net.b1);
    sigmoid_inplace(z);
    return z;
}

Tensor percep_features(const PerceptionNet& net, const Tensor& x) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("percep_features: input width mismatch");
    Tensor row({1, x.size()}, x.data);
    Tensor z = percep_features_batch(net, row);
    return Tensor({z.cols()}, z.data);
}

Tensor percep_logits(const PerceptionNet& net, const Tensor& x) {
    return logits(net.head, percep_features(net, x));
}

TrainStats train_perception(PerceptionNet& net, const Tensor& images,
                            const std::vector<std::size_t>& labels, const SgdConfig& cfg, Rng& rng,
                            std::size_t batch_size) {
    cfg.validate();
    if (images.ndim() != 2 || images.cols() != net.input_dim())
        throw std::invalid_argument("train_perception: input width mismatch");
    if (images.rows() != labels.size())
        throw std::invalid_argument("train_perception: labels/images length mismatch");
    for (std::size_t lbl : labels)
        if (lbl >= net.n_classes())
            throw std::invalid_argument("train_perception: label " + std::to_string(lbl) +
                                        " outside [0," + std::to_string(net.n_classes() - 1) + "]");
    const std::size_t n = images.rows();
    batch_size = std::min(batch_size, n);

    Tensor vw1(net.w1.shape), vb1(net.b1.shape), vwl(net.head.w_l.shape), vbl(net.head.b_l.shape);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainStats stats;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start + batch_size <= n; start += batch_size) {
            Tensor x = gather_rows(images, order, start, batch_size);
            std::vector<std::size_t> yb(batch_size);
            for (std::size_t r = 0; r < batch_size; ++r) yb[r] = labels[order[start + r]];

            Tensor z = matmul(x, net.w1);
            add_row_broadcast(z, net.b1);
            sigmoid_inplace(z);
            Tensor y = matmul(z, net.head.w_l);
            add_row_broadcast(y, net.head.b_l);

            Tensor dy;
            loss_sum += ce_batch(y, yb, dy);
            ++n_batches;

            Tensor gwl = matmul_tn(z, dy);
            Tensor gbl = column_sum(dy);
            Tensor dz = matmul_nt(dy, net.head.w_l);
            sigmoid_backward(dz, z);
            Tensor gw1 = matmul_tn(x, dz);
            Tensor gb1 = column_sum(dz);

            sgd_step(net.w1, gw1, vw1, cfg, epoch);
            sgd_step(net.b1, gb1, vb1, cfg, epoch);
            sgd_step(net.head.w_l, gwl, vwl, cfg, epoch);
            sgd_step(net.head.b_l, gbl, vbl, cfg, epoch);
        }
        const double epoch_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, n_batches));
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_perception: non-finite loss at epoch " +
                                     std::to_string(epoch));
        stats.epoch_loss.push_back(epoch_loss);
    }

    Tensor z = percep_features_batch(net, images);
    Tensor y = matmul(z, net.head.w_l);
    add_row_broadcast(y, net.head.b_l);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor row({y.cols()});
        std::copy_n(&y.data[i * y.cols()], y.cols(), row.data.begin());
        if (predict(row) == labels[i]) ++correct;
    }
    stats.final_train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

InferResult infer(const Tensor& x, const PerceptionNet& net, const NormStats& stats,
                  const MlpHead& head) {
    Tensor z = percep_features(net, x);
    Tensor y = logits(net.head, z);
    InferResult res;
    res.coarse = predict(y);
    SurprisalFeature f = extract_rx(net.head, z);
    apply_norm(f, stats);
    res.refined = predict(mlp_forward(head, f.r));
    return res;
}

}  // namespace stsr
