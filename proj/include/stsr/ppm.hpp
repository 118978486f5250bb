#pragma once

#include <stdexcept>
#include <string>

#include "stsr/tensor.hpp"

namespace stsr {

struct PpmError : std::runtime_error {
    enum class Code { Io, UnsupportedFormat, MalformedHeader, Truncated };
    Code code;
    PpmError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Binary P6, maxval 255 only. Pixels are scaled to [0,1] exactly as v/255;
// writing rounds back, so the round trip is byte-identical for 8-bit data.
Tensor read_ppm(const std::string& path);  // H x W x 3
void write_ppm(const Tensor& img, const std::string& path);

}  // namespace stsr
