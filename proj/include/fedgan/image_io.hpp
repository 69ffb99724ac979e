#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgan/tensor.hpp"

// 8-bit binary PGM (P5) and PPM (P6) readers/writers plus bilinear
// resampling. Byte v maps to v/127.5 - 1; images are H x W x C tensors.

namespace fedgan {

struct RawImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> bytes;  // row-major, interleaved channels
};

namespace detail {

inline int next_pnm_token(std::istream& in, std::string& token) {
    token.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {  // comment to end of line
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    return token.empty() ? EOF : 0;
}

}  // namespace detail

inline RawImage read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image " + path);
    std::string magic;
    if (detail::next_pnm_token(in, magic) == EOF || (magic != "P5" && magic != "P6"))
        throw std::runtime_error("unsupported image format in " + path + " (want P5/P6)");

    auto read_number = [&](const char* what) {
        std::string token;
        if (detail::next_pnm_token(in, token) == EOF)
            throw std::runtime_error(std::string("truncated header (") + what + ") in " + path);
        std::size_t value = 0;
        for (char ch : token) {
            if (ch < '0' || ch > '9')
                throw std::runtime_error(std::string("bad ") + what + " '" + token + "' in " + path);
            value = value * 10 + static_cast<std::size_t>(ch - '0');
        }
        return value;
    };

    RawImage img;
    img.width = read_number("width");
    img.height = read_number("height");
    const std::size_t maxval = read_number("maxval");
    if (img.width == 0 || img.height == 0)
        throw std::runtime_error("empty image dimensions in " + path);
    if (maxval == 0 || maxval > 255)
        throw std::runtime_error("unsupported maxval " + std::to_string(maxval) + " in " + path);
    img.channels = (magic == "P6") ? 3 : 1;

    const std::size_t count = img.width * img.height * img.channels;
    img.bytes.resize(count);
    in.read(reinterpret_cast<char*>(img.bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw std::runtime_error("truncated pixel data in " + path);
    return img;
}

inline Tensor normalize_image(const RawImage& img) {
    Tensor t = Tensor::zeros({img.height, img.width, img.channels});
    for (std::size_t i = 0; i < img.bytes.size(); ++i)
        t.data[i] = static_cast<double>(img.bytes[i]) / 127.5 - 1.0;
    return t;
}

inline std::uint8_t denormalize_value(double v) {
    const double scaled = std::round((v + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

// Writes P5 for single-channel tensors, P6 for three-channel ones.
inline void write_pnm(const std::string& path, const Tensor& image) {
    if (image.shape.size() != 3)
        throw std::invalid_argument("write_pnm: image tensor must be HxWxC");
    const std::size_t h = image.shape[0], w = image.shape[1], c = image.shape[2];
    if (c != 1 && c != 3)
        throw std::invalid_argument("write_pnm: " + std::to_string(c) + " channels unsupported");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << (c == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> bytes(image.numel());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = denormalize_value(image.data[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline Tensor bilinear_resample(const Tensor& image, std::size_t new_h, std::size_t new_w) {
    if (image.shape.size() != 3)
        throw std::invalid_argument("resample: image tensor must be HxWxC");
    const std::size_t h = image.shape[0], w = image.shape[1], c = image.shape[2];
    Tensor out = Tensor::zeros({new_h, new_w, c});
    const double row_scale = static_cast<double>(h) / static_cast<double>(new_h);
    const double col_scale = static_cast<double>(w) / static_cast<double>(new_w);
    for (std::size_t r = 0; r < new_h; ++r) {
        const double src_r = (static_cast<double>(r) + 0.5) * row_scale - 0.5;
        const double rf = std::clamp(src_r, 0.0, static_cast<double>(h - 1));
        const std::size_t r0 = static_cast<std::size_t>(rf);
        const std::size_t r1 = std::min(r0 + 1, h - 1);
        const double wr = rf - static_cast<double>(r0);
        for (std::size_t col = 0; col < new_w; ++col) {
            const double src_c = (static_cast<double>(col) + 0.5) * col_scale - 0.5;
            const double cf = std::clamp(src_c, 0.0, static_cast<double>(w - 1));
            const std::size_t c0 = static_cast<std::size_t>(cf);
            const std::size_t c1 = std::min(c0 + 1, w - 1);
            const double wc = cf - static_cast<double>(c0);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double v00 = image.data[(r0 * w + c0) * c + ch];
                const double v01 = image.data[(r0 * w + c1) * c + ch];
                const double v10 = image.data[(r1 * w + c0) * c + ch];
                const double v11 = image.data[(r1 * w + c1) * c + ch];
                out.data[(r * new_w + col) * c + ch] =
                    (1 - wr) * ((1 - wc) * v00 + wc * v01) + wr * ((1 - wc) * v10 + wc * v11);
            }
        }
    }
    return out;
}

}  // namespace fedgan
