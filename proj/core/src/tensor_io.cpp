#include "idcap/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "idcap/errors.hpp"

namespace idcap {

namespace {

constexpr char kMagic[5] = {'T', 'N', 'S', 'R', '1'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) {
        throw io_error("tensor file: truncated");
    }
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
    if (t.rank() == 0) {
        throw io_error("save_tensor: refusing to write an empty-shape tensor");
    }
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) {
        if (d > std::numeric_limits<uint32_t>::max()) {
            throw io_error("save_tensor: dimension exceeds u32");
        }
        put_u32(out, static_cast<uint32_t>(d));
    }
    for (double v : t.values()) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw io_error("save_tensor: cannot open '" + path + "'");
    }
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw io_error("save_tensor: write failed for '" + path + "'");
    }
}

Tensor load_tensor(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw missing_artifact_error("tensor file not found: " + path);
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw io_error("load_tensor: cannot open '" + path + "'");
    }
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw io_error("load_tensor: bad magic in '" + path + "'");
    }
    std::size_t pos = sizeof(kMagic);
    const uint32_t rank = get_u32(bytes, pos);
    if (rank == 0 || rank > 8) {
        throw io_error("load_tensor: unsupported rank");
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        const uint32_t d = get_u32(bytes, pos);
        if (d == 0) {
            throw io_error("load_tensor: zero dimension");
        }
        if (numel > std::numeric_limits<std::size_t>::max() / d) {
            throw io_error("load_tensor: shape overflow");
        }
        numel *= d;
        shape[i] = d;
    }
    if (pos + numel * 8 != bytes.size()) {
        throw io_error("load_tensor: payload length mismatch");
    }
    std::vector<double> data(numel);
    for (std::size_t n = 0; n < numel; ++n) {
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + n * 8 + i]))
                    << (8 * i);
        }
        std::memcpy(&data[n], &bits, 8);
    }
    return Tensor(std::move(shape), std::move(data));
}

void export_pgm(const std::string& path, const Tensor& t) {
    if (t.rank() != 3 || t.shape()[0] != 1) {
        throw io_error("export_pgm: expected a single-channel (1,H,W) tensor");
    }
    const std::size_t h = t.shape()[1], w = t.shape()[2];
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double v = std::floor(t.at(0, i, j) * 255.0 + 0.5);
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw io_error("export_pgm: cannot open '" + path + "'");
    }
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw io_error("export_pgm: write failed for '" + path + "'");
    }
}

}  // namespace idcap
