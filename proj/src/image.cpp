#include "soil/image.hpp"

#include <fstream>

#include "soil/common.hpp"

namespace soil::io {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) continue;
        tok.push_back(char(c));
        while ((c = in.peek()) != EOF && !std::isspace(c)) {
            tok.push_back(char(in.get()));
        }
        return tok;
    }
    return tok;
}

struct PnmHeader {
    int width, height, maxval;
};

PnmHeader read_header(std::istream& in, const std::string& magic, const std::string& path) {
    std::string m = next_token(in);
    if (m != magic) {
        throw DataError(path + ": expected " + magic + " header, got '" + m + "'");
    }
    PnmHeader h{};
    try {
        h.width = std::stoi(next_token(in));
        h.height = std::stoi(next_token(in));
        h.maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw DataError(path + ": malformed " + magic + " header");
    }
    if (h.width <= 0 || h.height <= 0) {
        throw DataError(path + ": invalid dimensions");
    }
    if (h.maxval != 255) {
        throw DataError(path + ": only maxval 255 supported, got " + std::to_string(h.maxval));
    }
    in.get();  // single whitespace before raster
    return h;
}

}  // namespace

Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path);
    PnmHeader h = read_header(in, "P6", path);
    Image img(h.width, h.height);
    in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
    if (size_t(in.gcount()) != img.data.size()) {
        throw DataError(path + ": truncated pixel data");
    }
    return img;
}

void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
    if (!out) throw DataError("write failed: " + path);
}

Mask load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open mask file: " + path);
    PnmHeader h = read_header(in, "P5", path);
    Mask mask(h.width, h.height);
    in.read(reinterpret_cast<char*>(mask.data.data()), std::streamsize(mask.data.size()));
    if (size_t(in.gcount()) != mask.data.size()) {
        throw DataError(path + ": truncated pixel data");
    }
    return mask;
}

void save_pgm(const Mask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write mask file: " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.data.data()), std::streamsize(mask.data.size()));
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace soil::io
