#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace volmetrics {

// Minimal 8-bit RGB raster with a PNG writer (zlib deflate, filter 0).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // RGB, row-major

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h * 3, 0) {}

    std::uint8_t* at(int x, int y) { return &pixels[(std::size_t(y) * width + x) * 3]; }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        auto* p = at(x, y);
        p[0] = r; p[1] = g; p[2] = b;
    }
};

void write_png(const RgbImage& img, const std::string& path);

// 5x7 bitmap text (digits, '.', '-', and upper-case letters used in labels).
void draw_text(RgbImage& img, int x, int y, const std::string& text,
               std::uint8_t r, std::uint8_t g, std::uint8_t b, int scale = 1);

} // namespace volmetrics
