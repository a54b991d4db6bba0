#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlm {

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Interleaved 8-bit RGB, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h);

    std::uint8_t &sample(int x, int y, int c) {
        return pixels[3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                           static_cast<std::size_t>(x)) +
                      static_cast<std::size_t>(c)];
    }
    std::uint8_t sample(int x, int y, int c) const {
        return pixels[3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                           static_cast<std::size_t>(x)) +
                      static_cast<std::size_t>(c)];
    }
};

using Rgb = std::array<std::uint8_t, 3>;

// Binary PPM (P6), maxval 255, comment-tolerant header.
Image load_ppm(std::span<const std::uint8_t> bytes);
Image load_ppm_file(const std::string &path);

// Bilinear resample with half-pixel centers; samples rounded
// half-away-from-zero back to 8 bits.
Image resize_bilinear(const Image &img, int out_h, int out_w);

// Place img at the top-left of a target_h x target_w canvas, fill the rest.
Image pad_to(const Image &img, int target_h, int target_w, Rgb fill);

} // namespace vlm
