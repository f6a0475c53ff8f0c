#pragma once

// Low-level SNNC container: "SNNC" | u32 LE version | u64 LE manifest length |
// JSON manifest | blob of little-endian float32 arrays.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnport/tensor.hpp"

namespace snnport::detail {

inline constexpr std::uint32_t kSnncVersion = 1;

struct Container {
    nlohmann::json manifest;
    std::vector<std::uint8_t> blob;
    std::size_t blob_base = 0;  // absolute file offset of the blob
};

std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> bytes);

/// Appends the tensor to the blob and returns {offset, length} in bytes.
std::pair<std::uint64_t, std::uint64_t> append_tensor(std::vector<std::uint8_t>& blob, const Tensor& t);

/// Reads `len` bytes at `offset` as float32 values with the given shape.
/// `blob_base` is the absolute file offset of the blob, used in errors.
Tensor read_tensor(std::span<const std::uint8_t> blob, std::uint64_t offset, std::uint64_t len,
                   const Shape& shape, std::size_t blob_base);

}  // namespace snnport::detail
