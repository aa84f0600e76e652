#include "volmetrics/png.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace volmetrics {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

void write_chunk(std::ofstream& f, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> head;
    put_u32_be(head, std::uint32_t(data.size()));
    f.write(reinterpret_cast<const char*>(head.data()), 4);
    f.write(type, 4);
    if (!data.empty())
        f.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty())
        crc = crc32(crc, data.data(), uInt(data.size()));
    std::vector<std::uint8_t> tail;
    put_u32_be(tail, crc);
    f.write(reinterpret_cast<const char*>(tail.data()), 4);
}

// 5x7 glyphs, 5-bit rows, MSB = leftmost column.
struct Glyph {
    char ch;
    std::array<std::uint8_t, 7> rows;
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
};

const Glyph* find_glyph(char c) {
    for (const auto& g : kFont)
        if (g.ch == c) return &g;
    return nullptr;
}

} // namespace

void write_png(const RgbImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("write_png: empty image");

    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path);

    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, std::uint32_t(img.width));
    put_u32_be(ihdr, std::uint32_t(img.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // RGB
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // interlace
    write_chunk(f, "IHDR", ihdr);

    // Filter byte 0 per scanline, then one zlib stream.
    const std::size_t stride = std::size_t(img.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[(stride + 1) * y] = 0;
        std::memcpy(&raw[(stride + 1) * y + 1], &img.pixels[stride * y], stride);
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("PNG deflate failed");
    idat.resize(bound);
    write_chunk(f, "IDAT", idat);
    write_chunk(f, "IEND", {});
}

void draw_text(RgbImage& img, int x, int y, const std::string& text,
               std::uint8_t r, std::uint8_t g, std::uint8_t b, int scale) {
    int cx = x;
    for (char c : text) {
        const Glyph* glyph = find_glyph(c);
        if (glyph) {
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (glyph->rows[row] & (0x10 >> col))
                        for (int sy = 0; sy < scale; ++sy)
                            for (int sx = 0; sx < scale; ++sx)
                                img.set(cx + col * scale + sx, y + row * scale + sy, r, g, b);
        }
        cx += 6 * scale;
    }
}

} // namespace volmetrics
