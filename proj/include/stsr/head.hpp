#pragma once

#include <cstddef>
#include <vector>

#include "stsr/features.hpp"
#include "stsr/rng.hpp"
#include "stsr/sgd.hpp"
#include "stsr/tensor.hpp"

namespace stsr {

// Three affine layers with sigmoid after the first two; the last layer emits
// logits. Hidden widths follow the 300/100 pattern regardless of input width.
struct MlpHead {
    Tensor w1, b1;  // in x h1
    Tensor w2, b2;  // h1 x h2
    Tensor w3, b3;  // h2 x N

    std::size_t input_dim() const { return w1.rows(); }
    std::size_t n_classes() const { return w3.cols(); }

    static MlpHead init(std::size_t in_dim, std::size_t n_classes, Rng& rng, std::size_t h1 = 300,
                        std::size_t h2 = 100);
};

// Small feed-forward classifier: one sigmoid hidden layer feeding a linear
// N-way head. The head is exposed so gradient features can be extracted from
// the same parameters the classifier infers with.
struct PerceptionNet {
    Tensor w1, b1;  // in x hidden
    PerceptionHead head;

    std::size_t input_dim() const { return w1.rows(); }
    std::size_t feat_dim() const { return w1.cols(); }
    std::size_t n_classes() const { return head.n_classes(); }

    static PerceptionNet init(std::size_t in_dim, std::size_t n_classes, Rng& rng,
                              std::size_t hidden = 64);
};

// Softmax cross-entropy for one sample; optionally fills the gradient w.r.t.
// the logits.
double ce_loss(const Tensor& y, std::size_t label, Tensor* grad_logits = nullptr);

Tensor mlp_forward(const MlpHead& h, const Tensor& x);
Tensor mlp_forward_batch(const MlpHead& h, const Tensor& x);  // rows -> logits rows

struct TrainStats {
    std::vector<double> epoch_loss;
    double final_train_accuracy = 0.0;
};

TrainStats train_head(MlpHead& h, const Tensor& feats, const std::vector<std::size_t>& labels,
                      const SgdConfig& cfg, Rng& rng, std::size_t batch_size = 32);

// Penultimate features z_d for one flattened input.
Tensor percep_features(const PerceptionNet& net, const Tensor& x);
Tensor percep_features_batch(const PerceptionNet& net, const Tensor& x);
Tensor percep_logits(const PerceptionNet& net, const Tensor& x);

TrainStats train_perception(PerceptionNet& net, const Tensor& images,
                            const std::vector<std::size_t>& labels, const SgdConfig& cfg, Rng& rng,
                            std::size_t batch_size = 32);

struct InferResult {
    std::size_t coarse = 0;   // argmax of the perception network
    std::size_t refined = 0;  // argmax of H over the normalized gradient feature
};

// Three-step inference: coarse perception prediction, gradient-feature
// extraction, and the MLP head over the normalized feature. The head stage
// never sees the input image, only r_x.
InferResult infer(const Tensor& x, const PerceptionNet& net, const NormStats& stats,
                  const MlpHead& head);

}  // namespace stsr
