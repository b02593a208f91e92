#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace soil::io {

// 8-bit RGB image, row-major interleaved. On disk: binary PPM (P6),
// codec-free and bit-exact.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // width * height * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0) {}

    uint8_t at(int x, int y, int c) const { return data[(size_t(y) * width + x) * 3 + c]; }
    uint8_t& at(int x, int y, int c) { return data[(size_t(y) * width + x) * 3 + c]; }

    bool operator==(const Image&) const = default;
};

// Single-channel 8-bit mask (class ids), stored as binary PGM (P5).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), data(size_t(w) * h, 0) {}

    uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }

    bool operator==(const Mask&) const = default;
};

Image load_ppm(const std::string& path);
void save_ppm(const Image& img, const std::string& path);

Mask load_pgm(const std::string& path);
void save_pgm(const Mask& mask, const std::string& path);

}  // namespace soil::io
