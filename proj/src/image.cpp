#include "vlm/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vlm {

Image::Image(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw std::invalid_argument("image dimensions must be >= 1");
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t &pos) {
    while (pos < bytes.size()) {
        char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n')
                ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        tok.push_back(static_cast<char>(bytes[pos]));
        ++pos;
    }
    if (tok.empty())
        throw ImageError("ppm: truncated header");
    return tok;
}

int parse_int(const std::string &tok, const char *what) {
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ImageError(std::string("ppm: bad ") + what);
    return std::stoi(tok);
}

} // namespace

Image load_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    if (next_token(bytes, pos) != "P6")
        throw ImageError("ppm: not a P6 file");
    int w = parse_int(next_token(bytes, pos), "width");
    int h = parse_int(next_token(bytes, pos), "height");
    int maxval = parse_int(next_token(bytes, pos), "maxval");
    if (w < 1 || h < 1)
        throw ImageError("ppm: dimensions must be >= 1");
    if (maxval != 255)
        throw ImageError("ppm: only maxval 255 is supported");
    // Exactly one whitespace byte separates the header from pixel data.
    if (pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw ImageError("ppm: missing header terminator");
    ++pos;
    std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() - pos < need)
        throw ImageError("ppm: truncated pixel data");
    Image img(w, h);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.pixels.begin());
    return img;
}

Image load_ppm_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_ppm(bytes);
}

Image resize_bilinear(const Image &img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize target must be >= 1");
    if (out_h == img.height && out_w == img.width)
        return img;
    Image out(out_w, out_h);
    double sy = static_cast<double>(img.height) / out_h;
    double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        double cy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(std::floor(cy));
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = cy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            double cx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(std::floor(cx));
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = cx - x0;
            for (int c = 0; c < 3; ++c) {
                double top = (1.0 - wx) * img.sample(x0, y0, c) + wx * img.sample(x1, y0, c);
                double bot = (1.0 - wx) * img.sample(x0, y1, c) + wx * img.sample(x1, y1, c);
                double v = (1.0 - wy) * top + wy * bot;
                out.sample(x, y, c) =
                    static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
            }
        }
    }
    return out;
}

Image pad_to(const Image &img, int target_h, int target_w, Rgb fill) {
    if (target_h < img.height || target_w < img.width)
        throw std::invalid_argument("pad_to target smaller than image");
    Image out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        for (int x = 0; x < target_w; ++x) {
            bool inside = x < img.width && y < img.height;
            for (int c = 0; c < 3; ++c)
                out.sample(x, y, c) = inside ? img.sample(x, y, c) : fill[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

} // namespace vlm
