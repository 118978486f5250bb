#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "stsr/tensor.hpp"

namespace stsr {

// Six level-graded distortion kinds. Per-kind parameter tables are fixed
// constants (v1); changing them changes benchmark numbers, so treat them as
// part of the format.
enum class DistortionKind { GaussNoise, GaussBlur, Impulse, Contrast, Brightness, Pixelate };

inline constexpr std::array<DistortionKind, 6> kAllDistortions = {
    DistortionKind::GaussNoise, DistortionKind::GaussBlur,   DistortionKind::Impulse,
    DistortionKind::Contrast,   DistortionKind::Brightness,  DistortionKind::Pixelate};

struct DistortionSpec {
    DistortionKind kind;
    int level;  // 1..5
    std::uint64_t seed = 0;
};

std::string distortion_name(DistortionKind kind);
DistortionKind parse_distortion(const std::string& name);

// Deterministic given (img, spec); output clamped to [0,1].
Tensor distort(const Tensor& img, const DistortionSpec& spec);

}  // namespace stsr
