#include "imac/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace imac {

static_assert(std::endian::native == std::endian::little, "tensor files assume little-endian hosts");

namespace {

constexpr char kMagic[8] = {'I', 'M', 'A', 'C', 'T', 'N', 'S', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw std::runtime_error("truncated tensor file " + path.string());
    }
    return v;
}

}  // namespace

void save_tensors(const std::filesystem::path& path, std::span<const ParamView> tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(out, tensors.size());
    for (const auto& t : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::int64_t>(out, t.rows);
        put<std::int64_t>(out, t.cols);
        out.write(reinterpret_cast<const char*>(t.data),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void load_tensors(const std::filesystem::path& path, std::span<const ParamView> tensors,
                  bool allow_extra) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw std::runtime_error(path.string() + " is not a tensor file");
    }
    std::map<std::string, const ParamView*> wanted;
    for (const auto& t : tensors) wanted.emplace(t.name, &t);

    const auto count = get<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(in, path);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw std::runtime_error("truncated tensor file " + path.string());
        const auto rows = get<std::int64_t>(in, path);
        const auto cols = get<std::int64_t>(in, path);
        const auto bytes = static_cast<std::streamsize>(rows * cols) *
                           static_cast<std::streamsize>(sizeof(double));
        const auto it = wanted.find(name);
        if (it == wanted.end()) {
            if (!allow_extra) throw std::runtime_error("unexpected tensor '" + name + "' in " + path.string());
            in.seekg(bytes, std::ios::cur);
            continue;
        }
        const ParamView& dst = *it->second;
        if (dst.rows != rows || dst.cols != cols) {
            throw std::runtime_error("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + ", expected " + std::to_string(dst.rows) +
                                     "x" + std::to_string(dst.cols));
        }
        if (!in.read(reinterpret_cast<char*>(dst.data), bytes)) {
            throw std::runtime_error("truncated tensor file " + path.string());
        }
        wanted.erase(it);
    }
    if (!wanted.empty()) {
        throw std::runtime_error("tensor '" + wanted.begin()->first + "' missing from " + path.string());
    }
}

}  // namespace imac
