#include "mmf/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace mmf {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'T', '1'};
constexpr unsigned char kVersion = 1;

void put_u32_le(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32_le(const std::string& bytes, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
    return v;
}

[[noreturn]] void fail(size_t offset, const std::string& what) {
    throw format_error("tensor container malformed at byte offset " + std::to_string(offset) +
                       ": " + what);
}

}  // namespace

void append_tensor_bytes(std::string& out, const Tensor& t) {
    if (t.rank() < 1 || t.rank() > 4) {
        throw dimension_error("tensor container supports rank 1..4, got rank " +
                              std::to_string(t.rank()));
    }
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kVersion));
    out.push_back(static_cast<char>(t.rank()));
    for (int64_t d : t.shape) put_u32_le(out, static_cast<uint32_t>(d));
    static_assert(sizeof(float) == 4);
    for (float v : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32_le(out, bits);
    }
}

Tensor parse_tensor_bytes(const std::string& bytes, size_t& offset) {
    if (bytes.size() < offset + 6) fail(bytes.size(), "header truncated");
    if (std::memcmp(bytes.data() + offset, kMagic, 4) != 0) fail(offset, "bad magic");
    const unsigned char version = static_cast<unsigned char>(bytes[offset + 4]);
    if (version != kVersion) {
        throw version_error("tensor container version " + std::to_string(version) +
                            " unsupported (expected " + std::to_string(kVersion) + ")");
    }
    const int rank = static_cast<unsigned char>(bytes[offset + 5]);
    if (rank < 1 || rank > 4) fail(offset + 5, "rank " + std::to_string(rank) + " out of range");
    size_t pos = offset + 6;
    if (bytes.size() < pos + 4 * static_cast<size_t>(rank)) fail(bytes.size(), "dims truncated");

    std::vector<int64_t> shape(static_cast<size_t>(rank));
    int64_t numel = 1;
    for (int i = 0; i < rank; ++i) {
        shape[static_cast<size_t>(i)] = get_u32_le(bytes, pos);
        if (shape[static_cast<size_t>(i)] <= 0) fail(pos, "non-positive dimension");
        numel *= shape[static_cast<size_t>(i)];
        pos += 4;
    }
    if (bytes.size() < pos + 4 * static_cast<size_t>(numel)) {
        fail(bytes.size(), "payload shorter than header promises (" + std::to_string(numel) +
                               " values expected)");
    }
    Tensor t(shape);
    for (int64_t i = 0; i < numel; ++i) {
        const uint32_t bits = get_u32_le(bytes, pos);
        std::memcpy(&t.data[static_cast<size_t>(i)], &bits, 4);
        pos += 4;
    }
    offset = pos;
    return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::string bytes;
    append_tensor_bytes(bytes, t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) throw io_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw io_error("write to " + path.string() + " failed");
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw io_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t offset = 0;
    Tensor t = parse_tensor_bytes(bytes, offset);
    if (offset != bytes.size()) {
        throw format_error("tensor file " + path.string() + " has " +
                           std::to_string(bytes.size() - offset) + " trailing bytes");
    }
    return t;
}

}  // namespace mmf
