#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "stsr/tensor.hpp"

namespace stsr {

// Bit-exact tensor container:
//   magic "STSR" | version u8 (=1) | dtype u8 (0=f32, 1=f64) | ndim u8
//   | ndim x u32 LE dims | row-major LE payload
enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

struct TensorFileError : std::runtime_error {
    enum class Code { Io, BadMagic, BadVersion, BadDtype, DimOverflow, LengthMismatch };
    Code code;
    TensorFileError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

void write_tensor_file(const std::string& path, const Tensor& t, Dtype dtype = Dtype::F64);
Tensor read_tensor_file(const std::string& path, Dtype* dtype_out = nullptr);

}  // namespace stsr
