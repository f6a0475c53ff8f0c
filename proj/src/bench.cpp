#include "snnport/bench.hpp"

#include <curl/curl.h>
#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

namespace snnport::bench {

namespace fs = std::filesystem;
using nlohmann::json;

const DatasetInfo& dataset_info(const std::string& name)
{
    static const std::map<std::string, DatasetInfo> known = {
        {"mnist",
         {"mnist",
          {{"train-images-idx3-ubyte", "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db"},
           {"train-labels-idx1-ubyte", "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5"},
           {"t10k-images-idx3-ubyte", "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7"},
           {"t10k-labels-idx1-ubyte", "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2"}},
          {"https://ossci-datasets.s3.amazonaws.com/mnist/", "https://storage.googleapis.com/cvdf-datasets/mnist/"}}},
        {"fmnist",
         {"fmnist",
          {{"train-images-idx3-ubyte", ""},
           {"train-labels-idx1-ubyte", ""},
           {"t10k-images-idx3-ubyte", ""},
           {"t10k-labels-idx1-ubyte", ""}},
          {"http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/"}}},
        {"asl",
         {"asl",
          {{"train-images-idx3-ubyte", ""},
           {"train-labels-idx1-ubyte", ""},
           {"t10k-images-idx3-ubyte", ""},
           {"t10k-labels-idx1-ubyte", ""}},
          {}}},
    };
    const auto it = known.find(name);
    if (it == known.end()) {
        throw Error("unknown dataset '" + name + "' (expected mnist, fmnist or asl)");
    }
    return it->second;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes)
{
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) {
        throw Error("zlib init failed");
    }
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 16);
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error("corrupt gzip stream");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

namespace {

std::size_t collect(char* data, std::size_t size, std::size_t n, void* user)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(user);
    out->insert(out->end(), data, data + size * n);
    return size * n;
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

}  // namespace

std::vector<std::uint8_t> http_get(const std::string& url)
{
    static std::once_flag init;
    std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
    CURL* curl = curl_easy_init();
    if (curl == nullptr) {
        throw Error("curl init failed");
    }
    std::vector<std::uint8_t> body;
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 20L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, collect);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    const CURLcode rc = curl_easy_perform(curl);
    curl_easy_cleanup(curl);
    if (rc != CURLE_OK) {
        throw Error("download failed for " + url + ": " + curl_easy_strerror(rc));
    }
    return body;
}

std::string default_cache_root()
{
    if (const char* env = std::getenv("SNNPORT_CACHE")) {
        return env;
    }
    if (const char* home = std::getenv("HOME")) {
        return (fs::path(home) / ".cache" / "snnport").string();
    }
    return ".snnport-cache";
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("missing artifact " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text)
{
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!(out << text)) {
        throw Error("cannot write " + path);
    }
}

void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

namespace {

// Raw bytes of one dataset file from the mirror or the built-in sources.
std::vector<std::uint8_t> obtain(const DatasetInfo& info, const RemoteFile& f, const std::optional<std::string>& mirror)
{
    std::vector<std::string> bases = mirror ? std::vector<std::string>{*mirror} : info.base_urls;
    if (bases.empty()) {
        throw Error("dataset " + info.name + " has no download source; place its IDX files in the cache directory "
                    "or pass --mirror DIR");
    }
    std::string errors;
    for (const auto& base : bases) {
        try {
            if (is_url(base)) {
                const std::string sep = base.back() == '/' ? "" : "/";
                return gunzip(http_get(base + sep + f.name + ".gz"));
            }
            const fs::path raw = fs::path(base) / f.name;
            if (fs::exists(raw)) {
                return read_file(raw.string());
            }
            const fs::path gz = fs::path(base) / (f.name + ".gz");
            if (fs::exists(gz)) {
                return gunzip(read_file(gz.string()));
            }
            throw Error(f.name + " not found in " + base);
        } catch (const Error& e) {
            errors += std::string("\n  ") + e.what();
        }
    }
    throw Error("could not obtain " + f.name + ":" + errors);
}

}  // namespace

void verify_cache(const std::string& directory)
{
    const auto manifest = read_json_file((fs::path(directory) / "manifest.json").string());
    for (const auto& [name, entry] : manifest.at("files").items()) {
        const fs::path p = fs::path(directory) / name;
        if (!fs::exists(p)) {
            throw Error("cached file missing: " + p.string());
        }
        const auto bytes = read_file(p.string());
        if (bytes.size() != entry.at("size").get<std::size_t>() || sha256_hex(bytes) != entry.at("sha256")) {
            throw Error("checksum mismatch for " + p.string());
        }
    }
}

FetchResult fetch_dataset(const std::string& dataset, const std::string& cache_root,
                          const std::optional<std::string>& mirror)
{
    const auto& info = dataset_info(dataset);
    FetchResult r;
    const fs::path dir = fs::path(cache_root) / dataset;
    r.directory = dir.string();
    fs::create_directories(dir);
    const fs::path manifest_path = dir / "manifest.json";
    json manifest = fs::exists(manifest_path) ? read_json_file(manifest_path.string()) : json{{"files", json::object()}};
    for (const auto& f : info.files) {
        const fs::path p = dir / f.name;
        std::string expected = f.sha256;
        if (expected.empty() && manifest["files"].contains(f.name)) {
            expected = manifest["files"][f.name].at("sha256").get<std::string>();
        }
        if (fs::exists(p)) {
            const auto bytes = read_file(p.string());
            const auto digest = sha256_hex(bytes);
            if (!expected.empty() && digest != expected) {
                throw Error("checksum mismatch for " + p.string() + " (expected " + expected + ", got " + digest + ")");
            }
            manifest["files"][f.name] = {{"size", bytes.size()}, {"sha256", digest}};
            ++r.cached;
            continue;
        }
        const auto bytes = obtain(info, f, mirror);
        const auto digest = sha256_hex(bytes);
        if (!expected.empty() && digest != expected) {
            throw Error("checksum mismatch for downloaded " + f.name + " (expected " + expected + ", got " + digest + ")");
        }
        write_file(p.string(), bytes);
        manifest["files"][f.name] = {{"size", bytes.size()}, {"sha256", digest}};
        ++r.downloaded;
    }
    write_json_file(manifest_path.string(), manifest);
    return r;
}

LabeledDataset load_split(const std::string& directory, const std::string& split)
{
    if (split != "train" && split != "t10k") {
        throw Error("split must be train or t10k");
    }
    const fs::path d(directory);
    return load_idx_dataset((d / (split + "-images-idx3-ubyte")).string(), (d / (split + "-labels-idx1-ubyte")).string());
}

std::string config_hash(const json& config)
{
    const auto text = config.dump();
    const auto digest = sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return digest.substr(0, 16);
}

json curve_to_json(const sim::CurveResult& c)
{
    json j;
    j["durations"] = c.durations;
    j["accuracy"] = c.accuracy;
    j["images"] = c.images;
    std::vector<double> sops, updates;
    for (std::size_t d = 0; d < c.durations.size(); ++d) {
        sops.push_back(c.mean_sops(d));
        updates.push_back(mean_updates(c, d));
    }
    j["mean_sops"] = sops;
    j["mean_neuron_updates"] = updates;
    j["correct"] = c.correct;
    j["predicted"] = c.predicted;
    j["sops"] = c.sops;
    j["neuron_updates"] = c.neuron_updates;
    j["input_spikes"] = c.input_spikes;
    return j;
}

sim::CurveResult curve_from_json(const json& j)
{
    sim::CurveResult c;
    try {
        c.durations = j.at("durations").get<std::vector<std::size_t>>();
        c.accuracy = j.at("accuracy").get<std::vector<double>>();
        c.images = j.at("images").get<std::size_t>();
        c.correct = j.at("correct").get<std::vector<std::uint8_t>>();
        c.predicted = j.at("predicted").get<std::vector<std::uint32_t>>();
        c.sops = j.at("sops").get<std::vector<std::uint64_t>>();
        c.neuron_updates = j.at("neuron_updates").get<std::vector<std::uint64_t>>();
        c.input_spikes = j.at("input_spikes").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        throw Error(std::string("malformed sweep artifact: ") + e.what());
    }
    const std::size_t cells = c.images * c.durations.size();
    if (c.correct.size() != cells || c.sops.size() != cells || c.neuron_updates.size() != cells) {
        throw Error("sweep artifact has inconsistent sizes");
    }
    return c;
}

double mean_updates(const sim::CurveResult& c, std::size_t d)
{
    double total = 0.0;
    for (std::size_t i = 0; i < c.images; ++i) {
        total += static_cast<double>(c.neuron_updates[i * c.durations.size() + d]);
    }
    return c.images ? total / static_cast<double>(c.images) : 0.0;
}

RunSummary summarize(const sim::CurveResult& curve, const opt::OptimizationResult& result, std::string dataset,
                     std::string variant, double mean_sparsity)
{
    if (curve.durations != result.durations) {
        throw Error("sweep and optimization cover different durations");
    }
    RunSummary s;
    s.dataset = std::move(dataset);
    s.variant = std::move(variant);
    s.recommended_duration = result.recommended_duration;
    const auto& d = curve.durations;
    const std::size_t rec = static_cast<std::size_t>(std::find(d.begin(), d.end(), s.recommended_duration) - d.begin());
    const auto best = std::max_element(curve.accuracy.begin(), curve.accuracy.end());
    s.max_accuracy = *best;
    s.max_duration = d[static_cast<std::size_t>(best - curve.accuracy.begin())];
    s.accuracy_at_recommended = curve.accuracy[rec];
    s.mean_sops = curve.mean_sops(rec);
    s.mean_updates = mean_updates(curve, rec);
    s.mean_sparsity = mean_sparsity;
    return s;
}

json to_json(const RunSummary& s)
{
    return {{"dataset", s.dataset},
            {"variant", s.variant},
            {"recommended_duration", s.recommended_duration},
            {"max_duration", s.max_duration},
            {"accuracy_at_recommended", s.accuracy_at_recommended},
            {"max_accuracy", s.max_accuracy},
            {"mean_sops", s.mean_sops},
            {"mean_updates", s.mean_updates},
            {"mean_sparsity", s.mean_sparsity}};
}

RunSummary summary_from_json(const json& j)
{
    RunSummary s;
    try {
        s.dataset = j.at("dataset").get<std::string>();
        s.variant = j.at("variant").get<std::string>();
        s.recommended_duration = j.at("recommended_duration").get<std::size_t>();
        s.max_duration = j.at("max_duration").get<std::size_t>();
        s.accuracy_at_recommended = j.at("accuracy_at_recommended").get<double>();
        s.max_accuracy = j.at("max_accuracy").get<double>();
        s.mean_sops = j.at("mean_sops").get<double>();
        s.mean_updates = j.at("mean_updates").get<double>();
        s.mean_sparsity = j.value("mean_sparsity", 0.0);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed run summary: ") + e.what());
    }
    return s;
}

energy::EnergyRow proxy_row(const RunSummary& s, const energy::PowerModel& model)
{
    const double wall = static_cast<double>(s.recommended_duration);
    const auto power = energy::proxy_power(s.mean_sops, s.mean_updates, model, wall);
    const double latency = energy::predict_latency(model.latency, wall);
    return energy::proxy_row(s.dataset, s.variant, 100.0 * s.accuracy_at_recommended, power, latency);
}

energy::PowerModel calibrate_on(const RunSummary& r, const energy::CalibrationTargets& targets)
{
    return energy::calibrate(r.mean_sops, r.mean_updates, static_cast<double>(r.recommended_duration), r.max_duration,
                             r.recommended_duration, targets);
}

}  // namespace snnport::bench
