#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedgan/nn.hpp"

// Bit-exact model checkpoints.
//
//   FGS1 <n_params>\n
//   <name> <ndim> <d0> <d1> ...\n     (per parameter)
//   <numel * 8 bytes>                 little-endian IEEE-754 f64
//
// The binary payload follows immediately after each parameter's header line.

namespace fedgan {

inline void write_f64_le(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline double read_f64_le(std::istream& in) {
    char bytes[8];
    in.read(bytes, 8);
    if (!in) throw std::runtime_error("checkpoint: truncated value data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    double value;
    std::memcpy(&value, &bits, 8);
    return value;
}

inline void save_params(std::ostream& out, const ModelParams& params) {
    out << "FGS1 " << params.entries.size() << "\n";
    for (const auto& [name, tensor] : params.entries) {
        out << name << " " << tensor.shape.size();
        for (std::size_t d : tensor.shape) out << " " << d;
        out << "\n";
        for (double v : tensor.data) write_f64_le(out, v);
    }
}

inline ModelParams load_params(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing header");
    std::istringstream header(line);
    std::string magic;
    std::size_t n_params = 0;
    header >> magic >> n_params;
    if (magic != "FGS1" || header.fail())
        throw std::runtime_error("checkpoint: bad header line '" + line + "'");

    ModelParams params;
    for (std::size_t p = 0; p < n_params; ++p) {
        if (!std::getline(in, line))
            throw std::runtime_error("checkpoint: missing parameter line " + std::to_string(p));
        std::istringstream meta(line);
        std::string name;
        std::size_t ndim = 0;
        meta >> name >> ndim;
        if (name.empty() || meta.fail())
            throw std::runtime_error("checkpoint: bad parameter line '" + line + "'");
        std::vector<std::size_t> shape(ndim);
        for (std::size_t d = 0; d < ndim; ++d) {
            meta >> shape[d];
            if (meta.fail()) throw std::runtime_error("checkpoint: bad shape in '" + line + "'");
        }
        Tensor tensor = Tensor::zeros(shape);
        for (double& v : tensor.data) v = read_f64_le(in);
        params.entries.emplace_back(name, std::move(tensor));
    }
    return params;
}

inline void save_params_file(const std::string& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_params(out, params);
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline ModelParams load_params_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_params(in);
}

}  // namespace fedgan
