#include "kobasin/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kobasin/errors.hpp"

namespace kobasin {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Image::Image(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

std::string Image::ppm() const {
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.reserve(out.size() + pixels.size() * 3);
    for (const auto& p : pixels) {
        out.push_back(static_cast<char>(p.r));
        out.push_back(static_cast<char>(p.g));
        out.push_back(static_cast<char>(p.b));
    }
    return out;
}

std::string pgm(const GridDomain& grid) {
    const int n = grid.geom.resolution;
    std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    for (int row = 0; row < n; ++row) {
        const int j = n - 1 - row;
        for (int i = 0; i < n; ++i) {
            switch (grid.mask[grid.geom.index(i, j)]) {
                case CellClass::Basin: out.push_back(static_cast<char>(255)); break;
                case CellClass::Undecided: out.push_back(static_cast<char>(128)); break;
                case CellClass::Escaped: out.push_back(static_cast<char>(0)); break;
            }
        }
    }
    return out;
}

nlohmann::json raster_sidecar(const GridDomain& grid, double eps_attract, const std::string& map_hash,
                              const std::string& config_hash) {
    const auto& g = grid.geom;
    return {{"box",
             {{"center", {g.center.real(), g.center.imag()}}, {"half_x", g.half_x}, {"half_y", g.half_y}}},
            {"resolution", g.resolution},
            {"eps_attract", eps_attract},
            {"map_hash", map_hash},
            {"config_hash", config_hash},
            {"components", grid.n_components},
            {"basin_cells", grid.count(CellClass::Basin)},
            {"undecided_cells", grid.count(CellClass::Undecided)},
            {"encoding", {{"escaped", 0}, {"undecided", 128}, {"basin", 255}}}};
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error(ErrorKind::Io, "write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_json(const std::string& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Io, path + ": " + e.what());
    }
}

}  // namespace kobasin
