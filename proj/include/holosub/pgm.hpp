#pragma once

// Binary PGM (P5, maxval 255) reader/writer. Dataset images are strictly
// binary (0 or 255); saliency maps use the full 8-bit range.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "holosub/errors.hpp"

namespace holosub {

struct PgmImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

namespace detail {
inline int pgm_next_int(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comment lines per the PNM grammar.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw IoError("pgm: truncated header: " + path);
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw ValidationError("pgm: malformed header: " + path);
    return value;
}
}  // namespace detail

inline PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("pgm: cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5')
        throw ValidationError("pgm: not a P5 file: " + path);
    PgmImage img;
    img.width = detail::pgm_next_int(in, path);
    img.height = detail::pgm_next_int(in, path);
    const int maxval = detail::pgm_next_int(in, path);
    if (maxval != 255)
        throw ValidationError("pgm: expected maxval 255: " + path);
    if (img.width <= 0 || img.height <= 0)
        throw ValidationError("pgm: bad dimensions: " + path);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw IoError("pgm: truncated pixel data: " + path);
    return img;
}

inline void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("pgm: cannot write: " + path);
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("pgm: write failed: " + path);
}

}  // namespace holosub
