#include "snnc_container.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "snnport/model_ir.hpp"

namespace snnport::detail {

namespace {

static_assert(std::endian::native == std::endian::little, "SNNC I/O assumes a little-endian host");

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
    }
    return static_cast<T>(v);
}

constexpr std::size_t kHeaderSize = 4 + 4 + 8;

}  // namespace

std::vector<std::uint8_t> encode_container(const Container& c)
{
    const std::string text = c.manifest.dump();
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + text.size() + c.blob.size());
    out.insert(out.end(), {'S', 'N', 'N', 'C'});
    put_le<std::uint32_t>(out, kSnncVersion);
    put_le<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), c.blob.begin(), c.blob.end());
    return out;
}

Container decode_container(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderSize) {
        throw FormatError("truncated SNNC header", bytes.size());
    }
    if (std::memcmp(bytes.data(), "SNNC", 4) != 0) {
        throw FormatError("bad magic", 0);
    }
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kSnncVersion) {
        throw FormatError("version mismatch: expected " + std::to_string(kSnncVersion) + ", got " +
                              std::to_string(version),
                          4);
    }
    const auto manifest_len = get_le<std::uint64_t>(bytes, 8);
    if (manifest_len > bytes.size() - kHeaderSize) {
        throw FormatError("manifest length " + std::to_string(manifest_len) + " exceeds file size", 8);
    }
    Container c;
    const auto* text = reinterpret_cast<const char*>(bytes.data() + kHeaderSize);
    try {
        c.manifest = nlohmann::json::parse(text, text + manifest_len);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), kHeaderSize + e.byte);
    }
    if (!c.manifest.is_object()) {
        throw FormatError("manifest must be a JSON object", kHeaderSize);
    }
    const std::size_t blob_start = kHeaderSize + manifest_len;
    c.blob_base = blob_start;
    c.blob.assign(bytes.begin() + static_cast<std::ptrdiff_t>(blob_start), bytes.end());
    const auto declared = c.manifest.value("blob_len", std::uint64_t{0});
    if (declared != c.blob.size()) {
        throw FormatError("manifest/blob length mismatch: manifest declares " + std::to_string(declared) +
                              " bytes, blob has " + std::to_string(c.blob.size()),
                          blob_start);
    }
    return c;
}

std::pair<std::uint64_t, std::uint64_t> append_tensor(std::vector<std::uint8_t>& blob, const Tensor& t)
{
    const std::uint64_t offset = blob.size();
    for (float v : t.data()) {
        put_le<std::uint32_t>(blob, std::bit_cast<std::uint32_t>(v));
    }
    return {offset, blob.size() - offset};
}

Tensor read_tensor(std::span<const std::uint8_t> blob, std::uint64_t offset, std::uint64_t len,
                   const Shape& shape, std::size_t blob_base)
{
    if (offset > blob.size() || len > blob.size() - offset) {
        throw FormatError("tensor range [" + std::to_string(offset) + ", +" + std::to_string(len) +
                              ") outside blob of " + std::to_string(blob.size()) + " bytes",
                          blob_base + offset);
    }
    if (len != shape_size(shape) * 4) {
        throw FormatError("manifest/blob length mismatch: " + std::to_string(len) + " bytes for shape " +
                              shape_string(shape),
                          blob_base + offset);
    }
    std::vector<float> values(len / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::bit_cast<float>(get_le<std::uint32_t>(blob, offset + 4 * i));
    }
    return Tensor(shape, std::move(values));
}

}  // namespace snnport::detail
