#include "stsr/distort.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stsr/rng.hpp"

namespace stsr {

namespace {

// Severity tables, strictly increasing in level (v1, versioned with the file
// formats).
constexpr double kNoiseSigma[5] = {0.02, 0.04, 0.08, 0.12, 0.18};
constexpr double kBlurSigma[5] = {0.5, 0.8, 1.2, 1.8, 2.6};
constexpr double kImpulseProb[5] = {0.005, 0.012, 0.022, 0.035, 0.055};
constexpr double kContrastScale[5] = {0.90, 0.80, 0.70, 0.60, 0.50};
constexpr double kBrightnessShift[5] = {0.05, 0.10, 0.16, 0.24, 0.34};
// Pixelation strength is a blend toward the block-averaged image; the blend
// weight gives a continuous severity ladder (MSE scales as alpha^2).
constexpr int kPixelateBlockSize = 6;
constexpr double kPixelateAlpha[5] = {0.2, 0.4, 0.6, 0.8, 1.0};

void clamp_unit(Tensor& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable blur with edge clamping.
Tensor gaussian_blur(const Tensor& img, double sigma) {
    const std::size_t h = img.shape[0], w = img.shape[1], c = img.shape[2];
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);

    Tensor tmp(img.shape);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const std::size_t xx = static_cast<std::size_t>(
                        std::clamp<long>(static_cast<long>(x) + dx, 0, static_cast<long>(w) - 1));
                    s += k[dx + radius] * img(y, xx, ch);
                }
                tmp(y, x, ch) = s;
            }
    Tensor out(img.shape);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    const std::size_t yy = static_cast<std::size_t>(
                        std::clamp<long>(static_cast<long>(y) + dy, 0, static_cast<long>(h) - 1));
                    s += k[dy + radius] * tmp(yy, x, ch);
                }
                out(y, x, ch) = s;
            }
    return out;
}

Tensor pixelate(const Tensor& img, int block) {
    const std::size_t h = img.shape[0], w = img.shape[1], c = img.shape[2];
    Tensor out(img.shape);
    for (std::size_t y0 = 0; y0 < h; y0 += block)
        for (std::size_t x0 = 0; x0 < w; x0 += block)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t y1 = std::min(y0 + block, h), x1 = std::min(x0 + block, w);
                double s = 0.0;
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x) s += img(y, x, ch);
                s /= static_cast<double>((y1 - y0) * (x1 - x0));
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x) out(y, x, ch) = s;
            }
    return out;
}

}  // namespace

std::string distortion_name(DistortionKind kind) {
    switch (kind) {
        case DistortionKind::GaussNoise: return "gauss_noise";
        case DistortionKind::GaussBlur: return "gauss_blur";
        case DistortionKind::Impulse: return "impulse";
        case DistortionKind::Contrast: return "contrast";
        case DistortionKind::Brightness: return "brightness";
        case DistortionKind::Pixelate: return "pixelate";
    }
    throw std::invalid_argument("distortion_name: unknown kind");
}

DistortionKind parse_distortion(const std::string& name) {
    for (DistortionKind k : kAllDistortions)
        if (distortion_name(k) == name) return k;
    throw std::invalid_argument("unknown distortion kind: " + name);
}

Tensor distort(const Tensor& img, const DistortionSpec& spec) {
    if (img.ndim() != 3 || img.shape[2] != 3)
        throw std::invalid_argument("distort: expected HxWx3 image");
    if (spec.level < 1 || spec.level > 5)
        throw std::invalid_argument("distort: level must be in [1,5]");
    const int li = spec.level - 1;
    Rng rng(spec.seed);

    Tensor out;
    switch (spec.kind) {
        case DistortionKind::GaussNoise: {
            out = img;
            const double sigma = kNoiseSigma[li];
            for (double& v : out.data) v += sigma * rng.normal();
            break;
        }
        case DistortionKind::GaussBlur:
            out = gaussian_blur(img, kBlurSigma[li]);
            break;
        case DistortionKind::Impulse: {
            out = img;
            const double p = kImpulseProb[li];
            const std::size_t pixels = img.shape[0] * img.shape[1];
            for (std::size_t i = 0; i < pixels; ++i) {
                if (rng.uniform() >= p) continue;
                const double v = rng.uniform() < 0.5 ? 0.0 : 1.0;
                out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = v;
            }
            break;
        }
        case DistortionKind::Contrast: {
            out = img;
            const double c = kContrastScale[li];
            for (double& v : out.data) v = (v - 0.5) * c + 0.5;
            break;
        }
        case DistortionKind::Brightness: {
            out = img;
            const double shift = kBrightnessShift[li];
            for (double& v : out.data) v += shift;
            break;
        }
        case DistortionKind::Pixelate: {
            out = pixelate(img, kPixelateBlockSize);
            const double a = kPixelateAlpha[li];
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data[i] = (1.0 - a) * img.data[i] + a * out.data[i];
            break;
        }
        default:
            throw std::invalid_argument("distort: unknown kind");
    }
    clamp_unit(out);
    return out;
}

}  // namespace stsr
