#pragma once

// Canny edge detection used to sparsify inputs before rate coding.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "snnport/model_ir.hpp"

namespace snnport::edge {

/// Single-channel image, row-major.
struct Image {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), pixels(r * c, fill) {}
    Image(std::size_t r, std::size_t c, std::vector<float> p);

    float at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
    float& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }

    /// From a [1,h,w] (or [h,w]) tensor.
    static Image from_tensor(const Tensor& t);
    Tensor to_tensor() const;  // [1,h,w]

    bool operator==(const Image&) const = default;
};

/// Gradient direction quantized to the four neighbour axes (degrees).
enum class Direction : std::uint8_t { Deg0 = 0, Deg45 = 1, Deg90 = 2, Deg135 = 3 };

struct Gradients {
    Image magnitude;  // normalized so the maximum is 1 (all zero if flat)
    std::vector<Direction> direction;
    Image gx, gy;  // raw Sobel responses
};

struct CannyParams {
    double sigma = 1.0;
    std::size_t kernel_size = 5;
    double low = 0.1;
    double high = 0.2;

    void validate() const;
};

/// Sampled, normalized 1-D Gaussian of odd length `ksize`.
std::vector<double> gaussian_kernel(double sigma, std::size_t ksize);

/// Separable Gaussian blur with edge-replicated borders.
Image gaussian_blur(const Image& image, double sigma, std::size_t ksize);

/// 3x3 Sobel with edge-replicated borders. gx is d/dcol, gy is d/drow.
Gradients sobel_gradients(const Image& image);

Direction quantize_direction(float gx, float gy);

/// Keeps a pixel iff its magnitude is >= both neighbours along its gradient
/// direction. A two-pixel ridge (equal to the forward neighbour, strictly
/// above the backward one) keeps only its forward pixel so symmetric steps
/// yield one-pixel lines; plateaus are kept whole. Out-of-image neighbours
/// count as zero.
Image nonmax_suppression(const Image& magnitude, const std::vector<Direction>& direction);

/// Double threshold with 8-connected flood fill from strong pixels.
Image hysteresis(const Image& thinned, double low, double high);

Image canny(const Image& image, const CannyParams& params = {});

/// Fraction of non-zero pixels.
double sparsity(const Image& image);
double sparsity(std::span<const float> pixels);

/// Applies canny to every image of a dataset (labels unchanged).
LabeledDataset canny_dataset(const LabeledDataset& data, const CannyParams& params = {}, std::size_t workers = 1);

/// Mean per-image non-zero fraction.
double mean_sparsity(const LabeledDataset& data);

}  // namespace snnport::edge
