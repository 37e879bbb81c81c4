// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "topbac/image.hpp"

namespace topbac {

/// round-half-up quantization to 8 bits (0.5 -> 128)
inline std::uint8_t quantize8(double v) {
    double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(q);
}

inline std::uint16_t quantize16(double v) {
    double q = std::floor(std::clamp(v, 0.0, 1.0) * 65535.0 + 0.5);
    return static_cast<std::uint16_t>(q);
}

namespace detail {

inline void skip_pnm_junk(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    for (auto& c : tail) c = static_cast<char>(std::tolower(c));
    return tail == suf;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("load_image: cannot open '" + path + "'");
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5")
        throw error("load_image: '" + path + "': unsupported PNM magic '" + magic + "'");
    detail::skip_pnm_junk(in);
    int w = 0, h = 0, maxval = 0;
    in >> w;
    detail::skip_pnm_junk(in);
    in >> h;
    detail::skip_pnm_junk(in);
    in >> maxval;
    if (!in || w <= 0 || h <= 0)
        throw error("load_image: '" + path + "': malformed PGM header");
    if (maxval <= 0 || maxval > 65535)
        throw error("load_image: '" + path + "': unsupported maxval " + std::to_string(maxval));
    GrayImage img(w, h);
    const double scale = 1.0 / maxval;
    if (magic == "P2") {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                long v;
                in >> v;
                if (!in) throw error("load_image: '" + path + "': truncated P2 data");
                img.at(x, y) = v * scale;
            }
    } else {
        in.get();  // single whitespace after maxval
        if (maxval < 256) {
            std::vector<std::uint8_t> row(w);
            for (int y = 0; y < h; ++y) {
                in.read(reinterpret_cast<char*>(row.data()), w);
                if (!in) throw error("load_image: '" + path + "': truncated P5 data");
                for (int x = 0; x < w; ++x) img.at(x, y) = row[x] * scale;
            }
        } else {
            // 16-bit P5 is big-endian
            std::vector<std::uint8_t> row(2 * static_cast<std::size_t>(w));
            for (int y = 0; y < h; ++y) {
                in.read(reinterpret_cast<char*>(row.data()), 2 * w);
                if (!in) throw error("load_image: '" + path + "': truncated P5 data");
                for (int x = 0; x < w; ++x) {
                    int v = (row[2 * x] << 8) | row[2 * x + 1];
                    img.at(x, y) = v * scale;
                }
            }
        }
    }
    return img;
}

inline void save_pgm(const GrayImage& img, const std::string& path, int bits = 8) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("save_image: cannot open '" + path + "' for writing");
    if (bits != 8 && bits != 16) throw error("save_image: bit depth must be 8 or 16");
    int maxval = bits == 8 ? 255 : 65535;
    out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
    if (bits == 8) {
        std::vector<std::uint8_t> row(img.width());
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) row[x] = quantize8(img.at(x, y));
            out.write(reinterpret_cast<const char*>(row.data()), row.size());
        }
    } else {
        std::vector<std::uint8_t> row(2 * static_cast<std::size_t>(img.width()));
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                std::uint16_t v = quantize16(img.at(x, y));
                row[2 * x] = static_cast<std::uint8_t>(v >> 8);
                row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
            }
            out.write(reinterpret_cast<const char*>(row.data()), row.size());
        }
    }
    if (!out) throw error("save_image: I/O failure writing '" + path + "'");
}

inline GrayImage load_png(const std::string& path) {
    detail::PngReadCloser c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw error("load_image: cannot open '" + path + "'");
    std::array<unsigned char, 8> sig{};
    if (std::fread(sig.data(), 1, 8, c.fp) != 8 || png_sig_cmp(sig.data(), 0, 8))
        throw error("load_image: '" + path + "': not a PNG file");
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = png_create_info_struct(c.png);
    if (!c.png || !c.info) throw error("load_image: libpng init failed");
    if (setjmp(png_jmpbuf(c.png)))
        throw error("load_image: '" + path + "': libpng decode error");
    png_init_io(c.png, c.fp);
    png_set_sig_bytes(c.png, 8);
    png_read_info(c.png, c.info);
    png_uint_32 w, h;
    int depth, color;
    png_get_IHDR(c.png, c.info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw error("load_image: '" + path + "': only grayscale PNG is supported (color type " +
                    std::to_string(color) + ")");
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
    png_read_update_info(c.png, c.info);
    depth = png_get_bit_depth(c.png, c.info);
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::vector<std::uint8_t> row(png_get_rowbytes(c.png, c.info));
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(c.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            int v = depth == 16 ? (row[2 * x] << 8) | row[2 * x + 1] : row[x];
            img.at(static_cast<int>(x), static_cast<int>(y)) = v * scale;
        }
    }
    png_read_end(c.png, nullptr);
    return img;
}

inline void save_png_gray(const std::vector<std::uint8_t>& bytes, int w, int h,
                          const std::string& path) {
    detail::PngWriteCloser c;
    c.fp = std::fopen(path.c_str(), "wb");
    if (!c.fp) throw error("save_image: cannot open '" + path + "' for writing");
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = png_create_info_struct(c.png);
    if (!c.png || !c.info) throw error("save_image: libpng init failed");
    if (setjmp(png_jmpbuf(c.png))) throw error("save_image: libpng encode error for '" + path + "'");
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    for (int y = 0; y < h; ++y)
        png_write_row(c.png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * w));
    png_write_end(c.png, nullptr);
}

inline void save_png(const GrayImage& img, const std::string& path) {
    std::vector<std::uint8_t> bytes(img.size());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            bytes[static_cast<std::size_t>(y) * img.width() + x] = quantize8(img.at(x, y));
    save_png_gray(bytes, img.width(), img.height(), path);
}

inline void save_png_rgb(const std::vector<std::uint8_t>& rgb, int w, int h,
                         const std::string& path) {
    detail::PngWriteCloser c;
    c.fp = std::fopen(path.c_str(), "wb");
    if (!c.fp) throw error("save_image: cannot open '" + path + "' for writing");
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = png_create_info_struct(c.png);
    if (!c.png || !c.info) throw error("save_image: libpng init failed");
    if (setjmp(png_jmpbuf(c.png))) throw error("save_image: libpng encode error for '" + path + "'");
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    for (int y = 0; y < h; ++y)
        png_write_row(c.png,
                      const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * w * 3));
    png_write_end(c.png, nullptr);
}

/// Loads an 8/16-bit grayscale PGM (P2/P5) or PNG, rescaled linearly to [0,1].
inline GrayImage load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw error("load_image: cannot open '" + path + "'");
    char m[2] = {0, 0};
    probe.read(m, 2);
    probe.close();
    if (m[0] == 'P' && (m[1] == '2' || m[1] == '5')) return load_pgm(path);
    if (static_cast<unsigned char>(m[0]) == 0x89 && m[1] == 'P') return load_png(path);
    throw error("load_image: '" + path + "': unrecognized format (expected PGM P2/P5 or PNG)");
}

/// Saves by extension: .pgm writes binary P5, anything else writes 8-bit PNG.
inline void save_image(const GrayImage& img, const std::string& path) {
    if (detail::has_suffix(path, ".pgm")) save_pgm(img, path);
    else save_png(img, path);
}

/// Region as a PNG mask, member = 255.
inline void save_region_png(const PixelRegion& r, const std::string& path) {
    std::vector<std::uint8_t> bytes(r.mask().size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = r.mask()[i] ? 255 : 0;
    save_png_gray(bytes, r.width(), r.height(), path);
}

}  // namespace topbac
