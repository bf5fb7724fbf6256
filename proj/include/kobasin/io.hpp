#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kobasin/grid.hpp"

namespace kobasin {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

/// 8-bit RGB raster, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Image() = default;
    Image(int w, int h, Rgb fill = {255, 255, 255});
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
    /// Binary PPM (P6).
    std::string ppm() const;
};

/// Binary PGM (P5) of a mask: Escaped 0, Undecided 128, Basin 255; top row is
/// the largest imaginary part.
std::string pgm(const GridDomain& grid);

/// Sidecar metadata for a raster file.
nlohmann::json raster_sidecar(const GridDomain& grid, double eps_attract, const std::string& map_hash,
                              const std::string& config_hash);

void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace kobasin
