#pragma once

#include <filesystem>

#include "mmf/tensor.hpp"

namespace mmf {

// Binary tensor container, rank <= 4, bit-exact round trip:
//   magic "MMT1" (4 bytes), version byte 0x01, rank byte,
//   rank x little-endian u32 dims, then numel x little-endian IEEE-754 f32.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// In-memory forms used by the model checkpoint.
void append_tensor_bytes(std::string& out, const Tensor& t);
Tensor parse_tensor_bytes(const std::string& bytes, size_t& offset);

}  // namespace mmf
