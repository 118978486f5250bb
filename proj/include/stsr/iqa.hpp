#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stsr/rng.hpp"
#include "stsr/sae.hpp"
#include "stsr/sgd.hpp"
#include "stsr/tensor.hpp"

namespace stsr {

inline constexpr std::size_t kPatchSide = 8;
inline constexpr std::size_t kPatchDim = kPatchSide * kPatchSide * 3;  // 192

// Everything needed to score an image pair: the trained autoencoder plus the
// preprocessing statistics fitted once on the training corpus.
struct IqaModel {
    SparseAutoencoder sae;
    Tensor patch_mean;  // 192
    Tensor zca;         // 192 x 192
    double act_threshold = 0.025;
    double whiten_eps = 0.01;
    // Config alternatives (defaults follow the main pipeline).
    bool threshold_gradient_path = false;
    bool cross_projection = false;  // project dist onto ref's gradients
    bool raw_projection = false;    // skip the min-max rescale before logit

    void validate() const;
};

struct QualityRecord {
    std::string ref_id;
    std::string dist_id;
    double score = 0.0;
    std::string method;  // "baseline" | "proposed"
    std::optional<double> mos;
};

// Channel 1 = BT.601 luma, channel 2 = raw green, channel 3 = BT.601 Cr
// offset into [0,1].
Tensor rgb_to_ygcr(const Tensor& img);

// Non-overlapping stride-8 patches in raster order; right/bottom remainders
// dropped. Rows are flattened 8x8x3 blocks.
Tensor make_patches_grid(const Tensor& img);
// Seeded uniform patch positions.
Tensor make_patches_random(const Tensor& img, std::size_t count, Rng& rng);

// mean + Q diag(1/sqrt(lambda+eps)) Q^T from the patch covariance.
void fit_whitening(const Tensor& patches, double eps, Tensor& mean_out, Tensor& zca_out);

// YGCr -> grid patches -> mean subtract -> ZCA.
Tensor preprocess_image(const IqaModel& model, const Tensor& img);

// Concatenated thresholded encoder activations (baseline feature path).
Tensor unique_features(const IqaModel& model, const Tensor& img);
double unique_score(const IqaModel& model, const Tensor& ref, const Tensor& dist);

// Patch projections onto the decoder's action gradient, inverse-sigmoid
// latents, concatenated magnitude and sign per patch.
Tensor surprisal_project(const IqaModel& model, const Tensor& img);
// Same, but projecting onto an externally supplied gradient (cross-projection
// path); pass nullptr for the image's own gradient.
Tensor surprisal_project_with(const IqaModel& model, const Tensor& img, const Tensor* grad);
double surprisal_score(const IqaModel& model, const Tensor& ref, const Tensor& dist);

double score_pair(const IqaModel& model, const Tensor& ref, const Tensor& dist,
                  const std::string& method);

// Fit whitening on random patches from the corpus and train the autoencoder.
IqaModel train_iqa_model(const std::vector<Tensor>& images, std::size_t hidden, std::size_t n_patches,
                         const SgdConfig& cfg, Rng& rng, double whiten_eps = 0.01);

void save_iqa_model(const IqaModel& model, const std::string& dir);
IqaModel load_iqa_model(const std::string& dir);

}  // namespace stsr
