#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ssfi/error.hpp"

namespace ssfi {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

    Rgb& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Binary portable pixmap, no codec dependencies.
inline void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (const auto& px : img.pixels) {
        char buf[3] = {static_cast<char>(px.r), static_cast<char>(px.g), static_cast<char>(px.b)};
        out.write(buf, 3);
    }
    if (!out) throw io_error("write failed: " + path);
}

// Blue-white-red diverging map on t in [0,1]; t = 0.5 is white.
inline Rgb diverging_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double blue[3] = {0.230, 0.299, 0.754};
    const double red[3] = {0.706, 0.016, 0.150};
    double rgb[3];
    if (t < 0.5) {
        double u = t / 0.5;
        for (int i = 0; i < 3; ++i) rgb[i] = blue[i] + (1.0 - blue[i]) * u;
    } else {
        double u = (t - 0.5) / 0.5;
        for (int i = 0; i < 3; ++i) rgb[i] = 1.0 + (red[i] - 1.0) * u;
    }
    return {static_cast<std::uint8_t>(rgb[0] * 255.0 + 0.5),
            static_cast<std::uint8_t>(rgb[1] * 255.0 + 0.5),
            static_cast<std::uint8_t>(rgb[2] * 255.0 + 0.5)};
}

inline Rgb gray_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto v = static_cast<std::uint8_t>(t * 255.0 + 0.5);
    return {v, v, v};
}

// Min-max mapping of a scalar field to [0,1]; a constant field maps to 0.5.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.5);
    if (values.empty()) return out;
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
    }
    return out;
}

}  // namespace ssfi
