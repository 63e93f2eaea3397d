#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "tilekit/colormap.hpp"
#include "tilekit/error.hpp"

namespace tilekit::detail {

// Minimal RGB8 PNG writer: one IDAT chunk, filter 0 on every scanline, fixed
// zlib level so the bytes are reproducible.
inline void png_append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void png_append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                             const std::uint8_t* data, std::size_t len) {
    png_append_u32(out, static_cast<std::uint32_t>(len));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len > 0) out.insert(out.end(), data, data + len);
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, out.data() + start, static_cast<uInt>(4 + len)));
    png_append_u32(out, crc);
}

inline std::vector<std::uint8_t> encode_png_rgb(const std::vector<Rgb>& pixels,
                                                int width, int height) {
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0); // filter: none
        for (int x = 0; x < width; ++x) {
            const Rgb& c = pixels[static_cast<std::size_t>(y) * width + x];
            raw.push_back(c.r);
            raw.push_back(c.g);
            raw.push_back(c.b);
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> deflated(bound);
    if (compress2(deflated.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        raise(errc::io_error, "png deflate failed");
    deflated.resize(bound);

    std::vector<std::uint8_t> out;
    static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.insert(out.end(), magic, magic + 8);

    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(width);
    ihdr[4] = static_cast<std::uint8_t>(height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // color type: truecolor
    ihdr[10] = 0; // compression
    ihdr[11] = 0; // filter
    ihdr[12] = 0; // interlace
    png_append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
    png_append_chunk(out, "IDAT", deflated.data(), deflated.size());
    png_append_chunk(out, "IEND", nullptr, 0);
    return out;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t k = 0;
    while (k + 2 < data.size()) {
        std::uint32_t v = (static_cast<std::uint32_t>(data[k]) << 16) |
                          (static_cast<std::uint32_t>(data[k + 1]) << 8) |
                          data[k + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        k += 3;
    }
    if (k + 1 == data.size()) {
        std::uint32_t v = static_cast<std::uint32_t>(data[k]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (k + 2 == data.size()) {
        std::uint32_t v = (static_cast<std::uint32_t>(data[k]) << 16) |
                          (static_cast<std::uint32_t>(data[k + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

} // namespace tilekit::detail
