#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "nets.hpp"
#include "sets.hpp"

namespace fuzzyifs {

struct GreyImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row major, top row first

    std::uint8_t& at(int x, int row) { return pixels[static_cast<std::size_t>(row) * width + x]; }
    std::uint8_t at(int x, int row) const { return pixels[static_cast<std::size_t>(row) * width + x]; }
};

/* One pixel per grid point, (n+1) x (n+1); the top row is the largest y.
 *
 * Crisp sets: members black (0) on white (255). Fuzzy sets: pixel = level, so
 * membership 1 is white. `invert` flips both conventions.
 *
 * In dimension 1 the raster is a plot of the set over x: crisp members are
 * full-height columns, and a fuzzy membership u(x) > 0 is a bar of
 * 1 + round(u(x)·n) pixels rising from the bottom row.
 */
inline GreyImage rasterize(const DiscreteSet& set, bool invert = false) {
    const Grid& g = set.grid;
    const int side = static_cast<int>(g.per_axis());
    const std::uint8_t fg = invert ? 255 : 0, bg = invert ? 0 : 255;
    GreyImage img{side, side, std::vector<std::uint8_t>(static_cast<std::size_t>(side) * side, bg)};
    for (std::uint32_t p : set.points) {
        const GridIndex gi = g.index(p);
        if (g.dim() == 1) {
            for (int row = 0; row < side; ++row)
                img.at(static_cast<int>(gi[0]), row) = fg;
        } else {
            img.at(static_cast<int>(gi[0]), side - 1 - static_cast<int>(gi[1])) = fg;
        }
    }
    return img;
}

inline GreyImage rasterize(const DiscreteFuzzySet& u, bool invert = false) {
    const Grid& g = u.grid;
    const int side = static_cast<int>(g.per_axis());
    GreyImage img{side, side, std::vector<std::uint8_t>(static_cast<std::size_t>(side) * side, invert ? 255 : 0)};
    for (std::size_t k = 0; k < u.points.size(); ++k) {
        const GridIndex gi = g.index(u.points[k]);
        const std::uint8_t level = u.levels[k];
        if (g.dim() == 1) {
            const int n = side - 1;
            const int bar = 1 + static_cast<int>((static_cast<long>(level) * n + kLevels / 2) / kLevels);
            for (int h = 0; h < std::min(bar, side); ++h)
                img.at(static_cast<int>(gi[0]), side - 1 - h) = invert ? 0 : 255;
        } else {
            img.at(static_cast<int>(gi[0]), side - 1 - static_cast<int>(gi[1])) =
                invert ? static_cast<std::uint8_t>(255 - level) : level;
        }
    }
    return img;
}

/// Binary PGM: "P5\n<w> <h>\n255\n" followed by the rows.
inline std::string encode_pgm(const GreyImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

inline void write_pgm(const GreyImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create image " + path);
    const std::string bytes = encode_pgm(img);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed on image " + path);
}

inline void write_image(const DiscreteSet& set, const std::string& path, bool invert = false) {
    write_pgm(rasterize(set, invert), path);
}

inline void write_image(const DiscreteFuzzySet& u, const std::string& path, bool invert = false) {
    write_pgm(rasterize(u, invert), path);
}

} // namespace fuzzyifs
