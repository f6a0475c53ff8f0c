#include "snnport/edge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snnport/parallel.hpp"

namespace snnport::edge {

Image::Image(std::size_t r, std::size_t c, std::vector<float> p) : rows(r), cols(c), pixels(std::move(p))
{
    if (pixels.size() != rows * cols) {
        throw Error("image of " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
                    std::to_string(pixels.size()) + " pixels");
    }
}

Image Image::from_tensor(const Tensor& t)
{
    const auto& s = t.shape();
    if (s.size() == 3 && s[0] == 1) {
        return Image(s[1], s[2], t.values());
    }
    if (s.size() == 2) {
        return Image(s[0], s[1], t.values());
    }
    throw Error("edge detection expects a single-channel image, got " + shape_string(s));
}

Tensor Image::to_tensor() const { return Tensor({1, rows, cols}, pixels); }

void CannyParams::validate() const
{
    if (!(sigma > 0.0)) {
        throw Error("canny sigma must be positive");
    }
    if (kernel_size < 3 || kernel_size % 2 == 0) {
        throw Error("canny kernel size must be odd and >= 3, got " + std::to_string(kernel_size));
    }
    if (!(low >= 0.0 && low < high)) {
        throw Error("canny thresholds need 0 <= low < high");
    }
}

std::vector<double> gaussian_kernel(double sigma, std::size_t ksize)
{
    if (ksize % 2 == 0) {
        throw Error("gaussian kernel size must be odd, got " + std::to_string(ksize));
    }
    if (!(sigma > 0.0)) {
        throw Error("gaussian sigma must be positive");
    }
    const auto r = static_cast<double>(ksize / 2);
    std::vector<double> k(ksize);
    double sum = 0.0;
    for (std::size_t i = 0; i < ksize; ++i) {
        const double d = static_cast<double>(i) - r;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) {
        v /= sum;
    }
    return k;
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n)
{
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

}  // namespace

Image gaussian_blur(const Image& image, double sigma, std::size_t ksize)
{
    const auto k = gaussian_kernel(sigma, ksize);
    const auto r = static_cast<std::ptrdiff_t>(ksize / 2);
    Image tmp(image.rows, image.cols);
    for (std::size_t y = 0; y < image.rows; ++y) {
        for (std::size_t x = 0; x < image.cols; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                acc += k[static_cast<std::size_t>(i + r)] *
                       image.at(y, clamp_index(static_cast<std::ptrdiff_t>(x) + i, image.cols));
            }
            tmp.at(y, x) = static_cast<float>(acc);
        }
    }
    Image out(image.rows, image.cols);
    for (std::size_t y = 0; y < image.rows; ++y) {
        for (std::size_t x = 0; x < image.cols; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                acc += k[static_cast<std::size_t>(i + r)] *
                       tmp.at(clamp_index(static_cast<std::ptrdiff_t>(y) + i, image.rows), x);
            }
            out.at(y, x) = static_cast<float>(acc);
        }
    }
    return out;
}

Direction quantize_direction(float gx, float gy)
{
    double deg = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / std::numbers::pi;
    if (deg < 0.0) {
        deg += 180.0;
    }
    if (deg < 22.5 || deg >= 157.5) {
        return Direction::Deg0;
    }
    if (deg < 67.5) {
        return Direction::Deg45;
    }
    if (deg < 112.5) {
        return Direction::Deg90;
    }
    return Direction::Deg135;
}

Gradients sobel_gradients(const Image& image)
{
    Gradients g;
    g.gx = Image(image.rows, image.cols);
    g.gy = Image(image.rows, image.cols);
    g.magnitude = Image(image.rows, image.cols);
    g.direction.assign(image.rows * image.cols, Direction::Deg0);
    const auto px = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        return image.at(clamp_index(y, image.rows), clamp_index(x, image.cols));
    };
    float peak = 0.0f;
    for (std::size_t yy = 0; yy < image.rows; ++yy) {
        for (std::size_t xx = 0; xx < image.cols; ++xx) {
            const auto y = static_cast<std::ptrdiff_t>(yy);
            const auto x = static_cast<std::ptrdiff_t>(xx);
            const float gx = (px(y - 1, x + 1) + 2.0f * px(y, x + 1) + px(y + 1, x + 1)) -
                             (px(y - 1, x - 1) + 2.0f * px(y, x - 1) + px(y + 1, x - 1));
            const float gy = (px(y + 1, x - 1) + 2.0f * px(y + 1, x) + px(y + 1, x + 1)) -
                             (px(y - 1, x - 1) + 2.0f * px(y - 1, x) + px(y - 1, x + 1));
            g.gx.at(yy, xx) = gx;
            g.gy.at(yy, xx) = gy;
            const float m = std::sqrt(gx * gx + gy * gy);
            g.magnitude.at(yy, xx) = m;
            g.direction[yy * image.cols + xx] = quantize_direction(gx, gy);
            peak = std::max(peak, m);
        }
    }
    if (peak > 0.0f) {
        for (auto& m : g.magnitude.pixels) {
            m /= peak;
        }
    }
    return g;
}

Image nonmax_suppression(const Image& magnitude, const std::vector<Direction>& direction)
{
    if (direction.size() != magnitude.pixels.size()) {
        throw Error("magnitude and direction images differ in size");
    }
    static constexpr std::ptrdiff_t kStep[4][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}};
    const auto value = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(magnitude.rows) ||
            x >= static_cast<std::ptrdiff_t>(magnitude.cols)) {
            return 0.0f;
        }
        return magnitude.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    };
    Image out(magnitude.rows, magnitude.cols);
    for (std::size_t yy = 0; yy < magnitude.rows; ++yy) {
        for (std::size_t xx = 0; xx < magnitude.cols; ++xx) {
            const auto d = static_cast<std::size_t>(direction[yy * magnitude.cols + xx]);
            const auto y = static_cast<std::ptrdiff_t>(yy);
            const auto x = static_cast<std::ptrdiff_t>(xx);
            const float m = magnitude.at(yy, xx);
            const float fwd = value(y + kStep[d][0], x + kStep[d][1]);
            const float back = value(y - kStep[d][0], x - kStep[d][1]);
            const bool ridge_tail = m == fwd && m > back;
            if (m >= fwd && m >= back && !ridge_tail) {
                out.at(yy, xx) = m;
            }
        }
    }
    return out;
}

Image hysteresis(const Image& thinned, double low, double high)
{
    if (!(low < high)) {
        throw Error("hysteresis needs low < high");
    }
    Image out(thinned.rows, thinned.cols);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < thinned.pixels.size(); ++i) {
        if (thinned.pixels[i] >= high) {
            out.pixels[i] = 1.0f;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const auto y = static_cast<std::ptrdiff_t>(i / thinned.cols);
        const auto x = static_cast<std::ptrdiff_t>(i % thinned.cols);
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
            for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                const auto ny = y + dy;
                const auto nx = x + dx;
                if ((dy == 0 && dx == 0) || ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(thinned.rows) ||
                    nx >= static_cast<std::ptrdiff_t>(thinned.cols)) {
                    continue;
                }
                const auto j = static_cast<std::size_t>(ny) * thinned.cols + static_cast<std::size_t>(nx);
                if (out.pixels[j] == 0.0f && thinned.pixels[j] >= low) {
                    out.pixels[j] = 1.0f;
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

Image canny(const Image& image, const CannyParams& params)
{
    params.validate();
    const auto blurred = gaussian_blur(image, params.sigma, params.kernel_size);
    const auto grad = sobel_gradients(blurred);
    const auto thin = nonmax_suppression(grad.magnitude, grad.direction);
    return hysteresis(thin, params.low, params.high);
}

double sparsity(std::span<const float> pixels)
{
    if (pixels.empty()) {
        return 0.0;
    }
    const auto nz = std::count_if(pixels.begin(), pixels.end(), [](float v) { return v != 0.0f; });
    return static_cast<double>(nz) / static_cast<double>(pixels.size());
}

double sparsity(const Image& image) { return sparsity(image.pixels); }

LabeledDataset canny_dataset(const LabeledDataset& data, const CannyParams& params, std::size_t workers)
{
    params.validate();
    const auto shape = data.image_shape();
    if (shape[0] != 1) {
        throw Error("edge detection expects single-channel images");
    }
    const std::size_t n = shape_size(shape);
    std::vector<float> out(data.images.size());
    parallel_for(data.size(), workers, [&](std::size_t i) {
        const auto edges = canny(Image::from_tensor(data.image(i)), params);
        std::copy(edges.pixels.begin(), edges.pixels.end(), out.begin() + static_cast<std::ptrdiff_t>(i * n));
    });
    LabeledDataset result;
    result.images = Tensor(data.images.shape(), std::move(out));
    result.labels = data.labels;
    return result;
}

double mean_sparsity(const LabeledDataset& data)
{
    if (data.size() == 0) {
        return 0.0;
    }
    const std::size_t n = shape_size(data.image_shape());
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        total += sparsity(data.images.data().subspan(i * n, n));
    }
    return total / static_cast<double>(data.size());
}

}  // namespace snnport::edge
