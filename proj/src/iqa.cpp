#include "stsr/iqa.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "stsr/metrics.hpp"
#include "stsr/tensorfile.hpp"

namespace stsr {

namespace fs = std::filesystem;
using nlohmann::json;

void IqaModel::validate() const {
    sae.validate();
    if (sae.input_dim() != kPatchDim)
        throw std::invalid_argument("iqa: autoencoder input dim must be " +
                                    std::to_string(kPatchDim));
    if (patch_mean.size() != kPatchDim || zca.ndim() != 2 || zca.rows() != kPatchDim ||
        zca.cols() != kPatchDim)
        throw std::invalid_argument("iqa: whitening stats have wrong shape");
    if (act_threshold < 0.0) throw std::invalid_argument("iqa: threshold must be >= 0");
}

Tensor rgb_to_ygcr(const Tensor& img) {
    if (img.ndim() != 3 || img.shape[2] != 3)
        throw std::invalid_argument("rgb_to_ygcr: expected HxWx3 image, got " +
                                    shape_to_string(img.shape));
    Tensor out(img.shape);
    for (std::size_t i = 0; i < img.size(); i += 3) {
        const double r = img.data[i], g = img.data[i + 1], b = img.data[i + 2];
        const double y = 0.299 * r + 0.587 * g + 0.114 * b;
        out.data[i] = y;
        out.data[i + 1] = g;
        out.data[i + 2] = 0.5 + 0.713 * (r - y);
    }
    return out;
}

namespace {

void copy_patch(const Tensor& img, std::size_t y0, std::size_t x0, double* dst) {
    std::size_t k = 0;
    for (std::size_t y = y0; y < y0 + kPatchSide; ++y)
        for (std::size_t x = x0; x < x0 + kPatchSide; ++x)
            for (std::size_t c = 0; c < 3; ++c) dst[k++] = img(y, x, c);
}

void require_patchable(const Tensor& img) {
    if (img.ndim() != 3 || img.shape[2] != 3)
        throw std::invalid_argument("make_patches: expected HxWx3 image");
    if (img.shape[0] < kPatchSide || img.shape[1] < kPatchSide)
        throw std::invalid_argument("make_patches: image smaller than patch size");
}

}  // namespace

Tensor make_patches_grid(const Tensor& img) {
    require_patchable(img);
    const std::size_t ny = img.shape[0] / kPatchSide, nx = img.shape[1] / kPatchSide;
    Tensor patches({ny * nx, kPatchDim});
    std::size_t row = 0;
    for (std::size_t py = 0; py < ny; ++py)
        for (std::size_t px = 0; px < nx; ++px)
            copy_patch(img, py * kPatchSide, px * kPatchSide, &patches.data[row++ * kPatchDim]);
    return patches;
}

Tensor make_patches_random(const Tensor& img, std::size_t count, Rng& rng) {
    require_patchable(img);
    const std::size_t ymax = img.shape[0] - kPatchSide + 1, xmax = img.shape[1] - kPatchSide + 1;
    Tensor patches({count, kPatchDim});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t y0 = rng.uniform_int(ymax), x0 = rng.uniform_int(xmax);
        copy_patch(img, y0, x0, &patches.data[i * kPatchDim]);
    }
    return patches;
}

void fit_whitening(const Tensor& patches, double eps, Tensor& mean_out, Tensor& zca_out) {
    if (patches.ndim() != 2) throw std::invalid_argument("fit_whitening: expected patch matrix");
    const std::size_t m = patches.rows(), d = patches.cols();
    if (m < d)
        throw std::invalid_argument("fit_whitening: need at least " + std::to_string(d) +
                                    " patches, got " + std::to_string(m));

    mean_out = Tensor({d});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) mean_out(j) += patches(i, j);
    for (double& v : mean_out.data) v /= static_cast<double>(m);

    Tensor centered = patches;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) -= mean_out(j);

    Tensor cov = matmul_tn(centered, centered);
    for (double& v : cov.data) v /= static_cast<double>(m);

    Tensor evals, evecs;
    sym_eig(cov, evals, evecs);

    // zca = Q diag(1/sqrt(lambda+eps)) Q^T
    Tensor scaled = evecs;  // columns scaled by 1/sqrt(lambda+eps)
    for (std::size_t j = 0; j < d; ++j) {
        const double lam = std::max(evals(j), 0.0);
        const double s = 1.0 / std::sqrt(lam + eps);
        for (std::size_t i = 0; i < d; ++i) scaled(i, j) *= s;
    }
    zca_out = matmul_nt(scaled, evecs);
}

Tensor preprocess_image(const IqaModel& model, const Tensor& img) {
    Tensor patches = make_patches_grid(rgb_to_ygcr(img));
    const std::size_t m = patches.rows();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < kPatchDim; ++j) patches(i, j) -= model.patch_mean(j);
    return matmul_nt(patches, model.zca);  // zca symmetric
}

Tensor unique_features(const IqaModel& model, const Tensor& img) {
    Tensor z = encode_batch(model.sae, preprocess_image(model, img));
    for (double& v : z.data)
        if (v < model.act_threshold) v = 0.0;
    const std::size_t flat = z.size();
    return Tensor({flat}, std::move(z.data));
}

double unique_score(const IqaModel& model, const Tensor& ref, const Tensor& dist) {
    if (ref.shape != dist.shape)
        throw std::invalid_argument("unique_score: image size mismatch " +
                                    shape_to_string(ref.shape) + " vs " +
                                    shape_to_string(dist.shape));
    return srcc(unique_features(model, ref).data, unique_features(model, dist).data);
}

Tensor surprisal_project_with(const IqaModel& model, const Tensor& img, const Tensor* grad) {
    Tensor patches = preprocess_image(model, img);
    Tensor g = grad ? *grad : decoder_surprisal(model.sae, patches);  // d x h
    Tensor u = matmul(patches, g);  // P x h projections
    const std::size_t p = u.rows(), h = u.cols();

    Tensor feature({p * 2 * h});
    for (std::size_t i = 0; i < p; ++i) {
        double lo = u(i, 0), hi = u(i, 0);
        for (std::size_t j = 1; j < h; ++j) {
            lo = std::min(lo, u(i, j));
            hi = std::max(hi, u(i, j));
        }
        const double range = hi - lo;
        for (std::size_t j = 0; j < h; ++j) {
            double v;
            if (model.raw_projection) {
                v = logit(u(i, j));
            } else if (range <= 0.0) {
                v = 0.0;  // degenerate vector maps to the sigmoid midpoint
            } else {
                const double scaled = 1e-6 + (1.0 - 2e-6) * (u(i, j) - lo) / range;
                v = logit(scaled);
            }
            if (model.threshold_gradient_path && std::fabs(v) < model.act_threshold) v = 0.0;
            feature(i * 2 * h + j) = std::fabs(v);                          // magnitude
            feature(i * 2 * h + h + j) = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);  // phase
        }
    }
    return feature;
}

Tensor surprisal_project(const IqaModel& model, const Tensor& img) {
    return surprisal_project_with(model, img, nullptr);
}

double surprisal_score(const IqaModel& model, const Tensor& ref, const Tensor& dist) {
    if (ref.shape != dist.shape)
        throw std::invalid_argument("surprisal_score: image size mismatch " +
                                    shape_to_string(ref.shape) + " vs " +
                                    shape_to_string(dist.shape));
    Tensor ref_feat = surprisal_project(model, ref);
    Tensor dist_feat;
    if (model.cross_projection) {
        Tensor ref_grad = decoder_surprisal(model.sae, preprocess_image(model, ref));
        dist_feat = surprisal_project_with(model, dist, &ref_grad);
    } else {
        dist_feat = surprisal_project(model, dist);
    }
    return srcc(ref_feat.data, dist_feat.data);
}

double score_pair(const IqaModel& model, const Tensor& ref, const Tensor& dist,
                  const std::string& method) {
    if (method == "baseline") return unique_score(model, ref, dist);
    if (method == "proposed") return surprisal_score(model, ref, dist);
    throw std::invalid_argument("score_pair: unknown method '" + method + "'");
}

IqaModel train_iqa_model(const std::vector<Tensor>& images, std::size_t hidden,
                         std::size_t n_patches, const SgdConfig& cfg, Rng& rng,
                         double whiten_eps) {
    if (images.empty()) throw std::invalid_argument("train_iqa_model: empty corpus");

    Tensor raw({n_patches, kPatchDim});
    for (std::size_t i = 0; i < n_patches; ++i) {
        const Tensor& img = images[rng.uniform_int(images.size())];
        Tensor one = make_patches_random(rgb_to_ygcr(img), 1, rng);
        std::copy_n(one.data.begin(), kPatchDim, &raw.data[i * kPatchDim]);
    }

    IqaModel model;
    model.whiten_eps = whiten_eps;
    fit_whitening(raw, whiten_eps, model.patch_mean, model.zca);

    Tensor centered = raw;
    for (std::size_t i = 0; i < n_patches; ++i)
        for (std::size_t j = 0; j < kPatchDim; ++j) centered(i, j) -= model.patch_mean(j);
    Tensor white = matmul_nt(centered, model.zca);

    model.sae = SparseAutoencoder::init(kPatchDim, hidden, rng);
    train_sae(model.sae, white, cfg, rng);
    return model;
}

void save_iqa_model(const IqaModel& model, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_tensor_file((root / "w_enc.stsr").string(), model.sae.w_enc);
    write_tensor_file((root / "b_enc.stsr").string(), model.sae.b_enc);
    write_tensor_file((root / "w_dec.stsr").string(), model.sae.w_dec);
    write_tensor_file((root / "b_dec.stsr").string(), model.sae.b_dec);
    write_tensor_file((root / "patch_mean.stsr").string(), model.patch_mean);
    write_tensor_file((root / "zca.stsr").string(), model.zca);
    json sidecar = {{"d", model.sae.input_dim()},
                    {"h", model.sae.hidden_dim()},
                    {"beta", model.sae.beta},
                    {"lambda", model.sae.lambda},
                    {"rho", model.sae.rho},
                    {"act_threshold", model.act_threshold},
                    {"whiten_eps", model.whiten_eps},
                    {"precision", "f64"}};
    std::ofstream out(root / "model.json");
    out << sidecar.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_iqa_model: cannot write sidecar under " + dir);
}

IqaModel load_iqa_model(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream in(root / "model.json");
    if (!in) throw std::runtime_error("load_iqa_model: missing sidecar in " + dir);
    json sidecar = json::parse(in);

    IqaModel model;
    model.sae.w_enc = read_tensor_file((root / "w_enc.stsr").string());
    model.sae.b_enc = read_tensor_file((root / "b_enc.stsr").string());
    model.sae.w_dec = read_tensor_file((root / "w_dec.stsr").string());
    model.sae.b_dec = read_tensor_file((root / "b_dec.stsr").string());
    model.patch_mean = read_tensor_file((root / "patch_mean.stsr").string());
    model.zca = read_tensor_file((root / "zca.stsr").string());
    model.sae.beta = sidecar.value("beta", 3.0);
    model.sae.lambda = sidecar.value("lambda", 3e-3);
    model.sae.rho = sidecar.value("rho", 0.035);
    model.act_threshold = sidecar.value("act_threshold", 0.025);
    model.whiten_eps = sidecar.value("whiten_eps", 0.01);
    model.validate();
    return model;
}

}  // namespace stsr
