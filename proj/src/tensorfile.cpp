#include "stsr/tensorfile.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace stsr {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'T', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;

using Code = TensorFileError::Code;

}  // namespace

void write_tensor_file(const std::string& path, const Tensor& t, Dtype dtype) {
    if (t.ndim() == 0 || t.ndim() > 255)
        throw TensorFileError(Code::DimOverflow, "tensorfile: ndim must be in [1,255]");
    for (std::size_t d : t.shape)
        if (d > std::numeric_limits<std::uint32_t>::max())
            throw TensorFileError(Code::DimOverflow, "tensorfile: dimension exceeds u32");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorFileError(Code::Io, "tensorfile: cannot open for write: " + path);
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    out.put(static_cast<char>(dtype));
    out.put(static_cast<char>(t.ndim()));
    for (std::size_t d : t.shape) {
        const std::uint32_t v = static_cast<std::uint32_t>(d);
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    if (dtype == Dtype::F64) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    } else {
        std::vector<float> payload(t.data.begin(), t.data.end());
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size() * sizeof(float)));
    }
    if (!out) throw TensorFileError(Code::Io, "tensorfile: write failed: " + path);
}

Tensor read_tensor_file(const std::string& path, Dtype* dtype_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorFileError(Code::Io, "tensorfile: cannot open for read: " + path);

    char magic[4];
    if (!in.read(magic, 4))
        throw TensorFileError(Code::Io, "tensorfile: cannot read header of " + path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw TensorFileError(Code::BadMagic, "tensorfile: bad magic in " + path);
    const int version = in.get();
    if (version != kVersion)
        throw TensorFileError(Code::BadVersion,
                              "tensorfile: unsupported version " + std::to_string(version));
    const int dtype_byte = in.get();
    if (dtype_byte != 0 && dtype_byte != 1)
        throw TensorFileError(Code::BadDtype,
                              "tensorfile: unknown dtype " + std::to_string(dtype_byte));
    const Dtype dtype = static_cast<Dtype>(dtype_byte);
    const int ndim = in.get();
    if (ndim <= 0 || in.eof())
        throw TensorFileError(Code::LengthMismatch, "tensorfile: truncated header in " + path);

    std::vector<std::size_t> shape(static_cast<std::size_t>(ndim));
    std::size_t count = 1;
    for (auto& d : shape) {
        std::uint32_t v;
        if (!in.read(reinterpret_cast<char*>(&v), 4))
            throw TensorFileError(Code::LengthMismatch, "tensorfile: truncated dims in " + path);
        d = v;
        if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d)
            throw TensorFileError(Code::DimOverflow, "tensorfile: shape product overflows");
        count *= d;
    }
    if (count > (1ull << 33))
        throw TensorFileError(Code::DimOverflow, "tensorfile: payload implausibly large");

    const std::size_t elem = dtype == Dtype::F64 ? sizeof(double) : sizeof(float);
    std::vector<char> payload(count * elem);
    if (count > 0 && !in.read(payload.data(), static_cast<std::streamsize>(payload.size())))
        throw TensorFileError(Code::LengthMismatch, "tensorfile: truncated payload in " + path);
    // No trailing bytes allowed.
    if (in.peek() != std::char_traits<char>::eof())
        throw TensorFileError(Code::LengthMismatch, "tensorfile: trailing bytes in " + path);

    Tensor t(shape);
    if (dtype == Dtype::F64) {
        std::memcpy(t.data.data(), payload.data(), payload.size());
    } else {
        const float* f = reinterpret_cast<const float*>(payload.data());
        for (std::size_t i = 0; i < count; ++i) t.data[i] = static_cast<double>(f[i]);
    }
    if (dtype_out) *dtype_out = dtype;
    return t;
}

}  // namespace stsr
