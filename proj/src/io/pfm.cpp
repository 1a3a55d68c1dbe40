#include "dpscale/io/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dpscale::io {
namespace {

std::vector<char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string next_token(const std::vector<char>& data, std::size_t& pos) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    std::string token;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) token += data[pos++];
    return token;
}

float decode(const char* bytes, bool little_endian) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes, 4);
    const bool host_little = std::endian::native == std::endian::little;
    if (host_little != little_endian) bits = __builtin_bswap32(bits);
    return std::bit_cast<float>(bits);
}

void encode(float value, bool little_endian, char* out) {
    auto bits = std::bit_cast<std::uint32_t>(value);
    const bool host_little = std::endian::native == std::endian::little;
    if (host_little != little_endian) bits = __builtin_bswap32(bits);
    std::memcpy(out, &bits, 4);
}

Image mark_invalid(Image map) {
    for (double& v : map.pixels()) {
        if (!std::isfinite(v) || v <= 0.0) v = std::numeric_limits<double>::quiet_NaN();
    }
    return map;
}

}  // namespace

Image read_pfm(const std::filesystem::path& path) {
    const std::vector<char> data = read_all(path);
    std::size_t pos = 0;
    const std::string magic = next_token(data, pos);
    if (magic == "PF") throw PfmError(PfmFault::Unsupported, path.string() + ": color PFM is not supported");
    if (magic != "Pf") throw PfmError(PfmFault::BadMagic, path.string() + ": not a PFM file");

    int width = 0;
    int height = 0;
    double scale = 0.0;
    try {
        std::size_t used = 0;
        const std::string w = next_token(data, pos);
        width = std::stoi(w, &used);
        if (used != w.size()) throw std::invalid_argument(w);
        const std::string h = next_token(data, pos);
        height = std::stoi(h, &used);
        if (used != h.size()) throw std::invalid_argument(h);
        const std::string s = next_token(data, pos);
        scale = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
        throw PfmError(PfmFault::BadHeader, path.string() + ": malformed PFM header");
    }
    if (width <= 0 || height <= 0) throw PfmError(PfmFault::BadHeader, path.string() + ": bad PFM dimensions");
    if (scale == 0.0) throw PfmError(PfmFault::ZeroScale, path.string() + ": PFM scale is zero");
    // Exactly one whitespace byte separates the header from the payload.
    ++pos;

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (pos > data.size() || data.size() - pos < count * 4) {
        throw PfmError(PfmFault::Truncated, path.string() + ": PFM payload is truncated");
    }
    const bool little = scale < 0.0;
    Image map(width, height);
    const char* payload = data.data() + pos;
    for (int row = 0; row < height; ++row) {
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x) {
            map(x, y) = decode(payload + (static_cast<std::size_t>(row) * width + x) * 4, little);
        }
    }
    return map;
}

void write_pfm(const std::filesystem::path& path, const Image& map, bool little_endian) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "Pf\n" << map.width() << ' ' << map.height() << '\n' << (little_endian ? "-1.0" : "1.0") << '\n';
    std::vector<char> payload(map.size() * 4);
    for (int row = 0; row < map.height(); ++row) {
        const int y = map.height() - 1 - row;
        for (int x = 0; x < map.width(); ++x) {
            encode(static_cast<float>(map(x, y)), little_endian,
                   payload.data() + (static_cast<std::size_t>(row) * map.width() + x) * 4);
        }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Image load_depth_map(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".pfm") return mark_invalid(read_pfm(path));

    std::filesystem::path dims_path = path;
    dims_path += ".dims";
    std::ifstream dims(dims_path);
    if (!dims) {
        throw Error(ErrorCode::Format,
                    path.string() + ": not a PFM file and no " + dims_path.filename().string() + " sidecar");
    }
    int width = 0;
    int height = 0;
    if (!(dims >> width >> height) || width <= 0 || height <= 0) {
        throw Error(ErrorCode::Format, dims_path.string() + ": expected \"width height\"");
    }
    const std::vector<char> data = read_all(path);
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (data.size() != count * 4) {
        throw Error(ErrorCode::Format, path.string() + ": raw float32 size does not match the sidecar");
    }
    Image map(width, height);
    for (std::size_t i = 0; i < count; ++i) map.pixels()[i] = decode(data.data() + i * 4, true);
    return mark_invalid(std::move(map));
}

}  // namespace dpscale::io
