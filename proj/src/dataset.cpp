#include "stsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace stsr {

namespace {

constexpr std::size_t kSide = 32;

// Ten visually distinct base colors.
constexpr double kPalette[10][3] = {
    {0.85, 0.20, 0.20}, {0.20, 0.75, 0.25}, {0.20, 0.30, 0.85}, {0.85, 0.80, 0.20},
    {0.75, 0.25, 0.80}, {0.20, 0.80, 0.80}, {0.90, 0.55, 0.15}, {0.55, 0.35, 0.15},
    {0.45, 0.85, 0.55}, {0.60, 0.60, 0.90}};

Tensor render_class_sample(std::size_t cls, std::size_t classes, Rng& rng) {
    Tensor img({kSide, kSide, 3});
    // Classes come in pairs that share a palette color; within a pair the two
    // classes differ only by texture frequency (coarse vs fine grating on the
    // blob). Color survives most distortions, fine texture does not, so
    // classification difficulty rises with distortion severity.
    const std::size_t npairs = (classes + 1) / 2;
    const std::size_t pair = cls % npairs;
    const bool fine = cls >= npairs;
    const double freq = (fine ? 2.30 : 0.55) + rng.uniform(-0.05, 0.05);
    const double theta = 3.14159 * static_cast<double>(pair) / static_cast<double>(npairs) +
                         rng.uniform(-0.10, 0.10);
    // Small phase jitter only: a fully random phase would force the classifier
    // to learn a phase-invariant frequency detector, which a single sigmoid
    // layer on raw pixels cannot do reliably.
    const double phase = rng.uniform(0.0, 1.2);
    const double ct = std::cos(theta), st = std::sin(theta);

    double color[3];
    for (int c = 0; c < 3; ++c)
        color[c] = kPalette[pair % 10][c] + rng.uniform(-0.04, 0.04);

    const double cx = 16.0 + rng.uniform(-2.5, 2.5), cy = 16.0 + rng.uniform(-2.5, 2.5);
    const double radius = 8.5 + rng.uniform(-1.0, 1.0);
    const double bg = 0.42 + rng.uniform(-0.02, 0.02);

    for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            const double mask = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
            const double tex = 0.14 * std::sin(freq * (ct * static_cast<double>(x) +
                                                       st * static_cast<double>(y)) +
                                               phase);
            for (int c = 0; c < 3; ++c) {
                double v = bg * (1.0 - mask) + mask * (color[c] + tex);
                v += 0.015 * rng.normal();
                img(y, x, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

}  // namespace

SyntheticDataset make_synthetic_dataset(std::size_t n_per_class, std::size_t classes, Rng& rng,
                                        double test_fraction) {
    if (classes < 2) throw std::invalid_argument("make_synthetic_dataset: need >= 2 classes");
    const std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                            n_per_class * test_fraction));
    SyntheticDataset ds;
    for (std::size_t cls = 0; cls < classes; ++cls) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            Tensor img = render_class_sample(cls, classes, rng);
            // Deterministic split: the tail of each class goes to test.
            if (i + n_test >= n_per_class) {
                ds.test.images.push_back(std::move(img));
                ds.test.labels.push_back(cls);
            } else {
                ds.train.images.push_back(std::move(img));
                ds.train.labels.push_back(cls);
            }
        }
    }
    return ds;
}

std::vector<Tensor> make_pristine_corpus(std::size_t count, std::size_t side, Rng& rng) {
    std::vector<Tensor> corpus;
    corpus.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        Tensor img({side, side, 3});
        const double bg = rng.uniform(0.25, 0.65);
        const double gx = rng.uniform(-0.004, 0.004), gy = rng.uniform(-0.004, 0.004);
        for (std::size_t y = 0; y < side; ++y)
            for (std::size_t x = 0; x < side; ++x)
                for (int c = 0; c < 3; ++c)
                    img(y, x, c) = bg + gx * static_cast<double>(x) + gy * static_cast<double>(y);

        const int n_gratings = 2 + static_cast<int>(rng.uniform_int(2));
        for (int g = 0; g < n_gratings; ++g) {
            const double freq = rng.uniform(0.25, 1.3);
            const double theta = rng.uniform(0.0, 3.14159);
            const double phase = rng.uniform(0.0, 6.28318);
            const double ct = std::cos(theta), st = std::sin(theta);
            double amp[3];
            for (int c = 0; c < 3; ++c) amp[c] = rng.uniform(0.02, 0.12);
            for (std::size_t y = 0; y < side; ++y)
                for (std::size_t x = 0; x < side; ++x) {
                    const double s = std::sin(
                        freq * (ct * static_cast<double>(x) + st * static_cast<double>(y)) + phase);
                    for (int c = 0; c < 3; ++c) img(y, x, c) += amp[c] * s;
                }
        }

        const int n_blobs = 2 + static_cast<int>(rng.uniform_int(3));
        for (int b = 0; b < n_blobs; ++b) {
            const double cx = rng.uniform(4.0, static_cast<double>(side) - 4.0);
            const double cy = rng.uniform(4.0, static_cast<double>(side) - 4.0);
            const double radius = rng.uniform(3.0, static_cast<double>(side) / 4.0);
            double color[3];
            for (int c = 0; c < 3; ++c) color[c] = rng.uniform(-0.35, 0.35);
            for (std::size_t y = 0; y < side; ++y)
                for (std::size_t x = 0; x < side; ++x) {
                    const double dx = static_cast<double>(x) - cx,
                                 dy = static_cast<double>(y) - cy;
                    const double mask = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
                    for (int c = 0; c < 3; ++c) img(y, x, c) += mask * color[c];
                }
        }

        for (double& v : img.data) v = std::clamp(v, 0.03, 0.97);
        corpus.push_back(std::move(img));
    }
    return corpus;
}

Tensor flatten_images(const std::vector<Tensor>& images) {
    if (images.empty()) throw std::invalid_argument("flatten_images: empty list");
    const std::size_t w = images.front().size();
    Tensor rows({images.size(), w});
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].size() != w)
            throw std::invalid_argument("flatten_images: inconsistent image sizes");
        std::copy(images[i].data.begin(), images[i].data.end(), &rows.data[i * w]);
    }
    return rows;
}

LabeledImages load_cifar10_batch(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cifar10: cannot open " + path);
    constexpr std::size_t kRecord = 1 + 3072;
    LabeledImages out;
    std::vector<unsigned char> rec(kRecord);
    while (in.read(reinterpret_cast<char*>(rec.data()), kRecord)) {
        if (rec[0] > 9) throw std::runtime_error("cifar10: label byte out of range");
        Tensor img({32, 32, 3});
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x)
                    img(y, x, c) = rec[1 + c * 1024 + y * 32 + x] / 255.0;
        out.images.push_back(std::move(img));
        out.labels.push_back(rec[0]);
    }
    if (in.gcount() != 0) throw std::runtime_error("cifar10: truncated record in " + path);
    return out;
}

}  // namespace stsr
