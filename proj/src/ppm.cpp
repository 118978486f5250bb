#include "stsr/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace stsr {

namespace {

using Code = PpmError::Code;

// Skips whitespace and '#' comment lines, then parses a decimal integer.
long read_header_int(std::ifstream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        } else {
            c = in.get();
        }
    }
    if (c == EOF || !std::isdigit(c))
        throw PpmError(Code::MalformedHeader, "ppm: expected integer in header");
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 24) throw PpmError(Code::MalformedHeader, "ppm: header value too large");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return value;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PpmError(Code::Io, "ppm: cannot open " + path);

    char m0 = static_cast<char>(in.get());
    char m1 = static_cast<char>(in.get());
    if (m0 != 'P' || (m1 != '6' && m1 != '3' && m1 != '5' && m1 != '2' && m1 != '1' && m1 != '4'))
        throw PpmError(Code::MalformedHeader, "ppm: not a PNM file: " + path);
    if (m1 != '6')
        throw PpmError(Code::UnsupportedFormat,
                       std::string("ppm: only binary P6 supported, got P") + m1);

    const long w = read_header_int(in);
    const long h = read_header_int(in);
    const long maxval = read_header_int(in);
    if (w <= 0 || h <= 0) throw PpmError(Code::MalformedHeader, "ppm: non-positive dimensions");
    if (maxval != 255)
        throw PpmError(Code::UnsupportedFormat, "ppm: only maxval 255 supported, got " +
                                                    std::to_string(maxval));
    // Single whitespace byte separates header and payload.
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep))
        throw PpmError(Code::MalformedHeader, "ppm: missing header separator");

    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    std::vector<unsigned char> bytes(count);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count)))
        throw PpmError(Code::Truncated, "ppm: truncated payload in " + path);

    Tensor img({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
    for (std::size_t i = 0; i < count; ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

void write_ppm(const Tensor& img, const std::string& path) {
    if (img.ndim() != 3 || img.shape[2] != 3)
        throw PpmError(Code::UnsupportedFormat, "ppm: expected HxWx3 image, got " +
                                                    shape_to_string(img.shape));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PpmError(Code::Io, "ppm: cannot open for write: " + path);
    out << "P6\n" << img.shape[1] << " " << img.shape[0] << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw PpmError(Code::Io, "ppm: write failed: " + path);
}

}  // namespace stsr
