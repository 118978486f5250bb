#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stsr/rng.hpp"
#include "stsr/tensor.hpp"

namespace stsr {

struct LabeledImages {
    std::vector<Tensor> images;       // each H x W x 3
    std::vector<std::size_t> labels;  // 0-based
};

struct SyntheticDataset {
    LabeledImages train;
    LabeledImages test;
};

// 32x32x3 class-conditioned textured blobs. Class identity is carried by a
// fixed color palette, blob placement, and texture frequency; per-sample
// jitter keeps the classes from collapsing to constants. Deterministic given
// the rng seed; split is deterministic too.
SyntheticDataset make_synthetic_dataset(std::size_t n_per_class, std::size_t classes, Rng& rng,
                                        double test_fraction = 0.25);

// Deterministic pristine images for the desk IQA corpus: mixtures of smooth
// gradients, oriented sinusoids, and soft blobs, varied per image.
std::vector<Tensor> make_pristine_corpus(std::size_t count, std::size_t side, Rng& rng);

// Flatten image list to an M x (H*W*3) row matrix.
Tensor flatten_images(const std::vector<Tensor>& images);

// Optional loader for real CIFAR-10 binary batches (1 label byte + 3072
// pixel bytes per record, channel-planar R,G,B).
LabeledImages load_cifar10_batch(const std::string& path);

}  // namespace stsr
