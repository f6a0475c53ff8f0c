#include <gtest/gtest.h>

#include <filesystem>
#include <zlib.h>

#include "snnport/bench.hpp"

using namespace snnport;
using namespace snnport::bench;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> raw)
{
    z_stream zs{};
    deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY);
    std::vector<std::uint8_t> out(deflateBound(&zs, raw.size()) + 64);
    zs.next_in = const_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("snnport_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Four gzipped IDX files of a tiny dataset in the layout the fetcher expects.
void write_tiny_mirror(const fs::path& dir, std::uint8_t fill)
{
    for (const std::string split : {"train", "t10k"}) {
        std::vector<std::uint8_t> px(3 * 28 * 28, fill);
        const auto images = encode_idx_u8({3, 28, 28}, px);
        const std::vector<std::uint8_t> lv{1, 2, 3};
        const auto labels = encode_idx_u8({3}, lv);
        write_file((dir / (split + "-images-idx3-ubyte.gz")).string(), gzip(images));
        write_file((dir / (split + "-labels-idx1-ubyte.gz")).string(), gzip(labels));
    }
}

}  // namespace

TEST(Digest, KnownVectors)
{
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Gunzip, RoundTripAndCorruption)
{
    std::vector<std::uint8_t> raw(10000);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<std::uint8_t>((i * 7) ^ (i >> 3));
    }
    auto gz = gzip(raw);
    EXPECT_EQ(gunzip(gz), raw);
    gz.resize(gz.size() / 2);
    EXPECT_THROW(gunzip(gz), Error);
}

TEST(Fetch, MirrorThenWarmCache)
{
    TempDir mirror("mirror"), cache("cache");
    write_tiny_mirror(mirror.path, 128);
    const auto first = fetch_dataset("fmnist", cache.path.string(), mirror.path.string());
    EXPECT_EQ(first.downloaded, 4u);
    EXPECT_EQ(first.cached, 0u);
    EXPECT_NO_THROW(verify_cache(first.directory));
    const auto second = fetch_dataset("fmnist", cache.path.string(), mirror.path.string());
    EXPECT_EQ(second.downloaded, 0u);
    EXPECT_EQ(second.cached, 4u);
    const auto train = load_split(first.directory, "train");
    EXPECT_EQ(train.size(), 3u);
    EXPECT_EQ(train.labels, (std::vector<std::uint32_t>{1, 2, 3}));
    EXPECT_NEAR(train.images[0], 128.0f / 255.0f, 1e-6);
    EXPECT_THROW(load_split(first.directory, "val"), Error);
}

TEST(Fetch, TamperedCacheIsRejected)
{
    TempDir mirror("mirror2"), cache("cache2");
    write_tiny_mirror(mirror.path, 7);
    const auto r = fetch_dataset("fmnist", cache.path.string(), mirror.path.string());
    const auto victim = fs::path(r.directory) / "t10k-labels-idx1-ubyte";
    auto bytes = read_file(victim.string());
    bytes.back() ^= 0xff;
    write_file(victim.string(), bytes);
    try {
        verify_cache(r.directory);
        FAIL() << "tampering not detected";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
    }
    EXPECT_THROW(fetch_dataset("fmnist", cache.path.string(), mirror.path.string()), Error);
}

TEST(Fetch, PinnedChecksumRejectsWrongMnist)
{
    TempDir mirror("mirror3"), cache("cache3");
    write_tiny_mirror(mirror.path, 1);
    try {
        fetch_dataset("mnist", cache.path.string(), mirror.path.string());
        FAIL() << "wrong file accepted";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
    }
}

TEST(Fetch, UnknownAndSourceless)
{
    TempDir cache("cache4");
    EXPECT_THROW(fetch_dataset("cifar", cache.path.string()), Error);
    EXPECT_THROW(fetch_dataset("asl", cache.path.string()), Error);
    EXPECT_THROW(fetch_dataset("fmnist", cache.path.string(), (cache.path / "nowhere").string()), Error);
}

TEST(Provenance, ConfigHashStable)
{
    const nlohmann::json a{{"seed", 1}, {"dataset", "mnist"}};
    const nlohmann::json b{{"dataset", "mnist"}, {"seed", 1}};
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    EXPECT_NE(config_hash(a), config_hash({{"seed", 2}, {"dataset", "mnist"}}));
}

TEST(Summary, CurveJsonRoundTrip)
{
    sim::CurveResult c;
    c.durations = {10, 20};
    c.images = 2;
    c.accuracy = {0.5, 1.0};
    c.correct = {1, 1, 0, 1};
    c.predicted = {0, 0, 2, 1};
    c.sops = {10, 30, 20, 50};
    c.neuron_updates = {100, 200, 100, 200};
    c.input_spikes = {5, 8};
    const auto back = curve_from_json(curve_to_json(c));
    EXPECT_EQ(back.accuracy, c.accuracy);
    EXPECT_EQ(back.correct, c.correct);
    EXPECT_EQ(back.sops, c.sops);
    EXPECT_DOUBLE_EQ(back.mean_sops(1), 40.0);
    EXPECT_DOUBLE_EQ(mean_updates(back, 0), 100.0);
}
