#pragma once

// File-format plumbing: magic-byte sniffing, JPEG (libjpeg) and PNG
// (libpng) codecs, small readers/writers for 24-bit BMP and uncompressed
// 8-bit TIFF, and capture-device extraction from JPEG/TIFF metadata.
// HEIC/HEIF files are recognized but not decoded.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <csetjmp>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "ctv/exif.hpp"
#include "ctv/image.hpp"

namespace ctv {

enum class ImageFormat { JPEG, PNG, HEIC, BMP, TIFF, UNKNOWN };

inline const char* format_name(ImageFormat f) {
    switch (f) {
        case ImageFormat::JPEG: return "JPEG";
        case ImageFormat::PNG: return "PNG";
        case ImageFormat::HEIC: return "HEIC";
        case ImageFormat::BMP: return "BMP";
        case ImageFormat::TIFF: return "TIFF";
        default: return "UNKNOWN";
    }
}

inline std::optional<ImageFormat> format_from_name(const std::string& name) {
    if (name == "JPEG") return ImageFormat::JPEG;
    if (name == "PNG") return ImageFormat::PNG;
    if (name == "HEIC") return ImageFormat::HEIC;
    if (name == "BMP") return ImageFormat::BMP;
    if (name == "TIFF") return ImageFormat::TIFF;
    if (name == "UNKNOWN") return ImageFormat::UNKNOWN;
    return std::nullopt;
}

inline ImageFormat sniff_format(const std::vector<std::uint8_t>& bytes) {
    const std::size_t n = bytes.size();
    if (n >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
        return ImageFormat::JPEG;
    static const std::uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (n >= 8 && std::equal(png_magic, png_magic + 8, bytes.begin()))
        return ImageFormat::PNG;
    if (n >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return ImageFormat::BMP;
    if (n >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
                   (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42)))
        return ImageFormat::TIFF;
    if (n >= 12 && std::memcmp(bytes.data() + 4, "ftyp", 4) == 0) {
        static const char* brands[] = {"heic", "heix", "hevc", "hevx",
                                       "heim", "heis", "mif1", "msf1", "heif"};
        for (const char* b : brands)
            if (std::memcmp(bytes.data() + 8, b, 4) == 0) return ImageFormat::HEIC;
    }
    return ImageFormat::UNKNOWN;
}

inline ImageFormat format_from_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".jpg" || ext == ".jpeg") return ImageFormat::JPEG;
    if (ext == ".png") return ImageFormat::PNG;
    if (ext == ".heic" || ext == ".heif") return ImageFormat::HEIC;
    if (ext == ".bmp") return ImageFormat::BMP;
    if (ext == ".tif" || ext == ".tiff") return ImageFormat::TIFF;
    return ImageFormat::UNKNOWN;
}

inline bool has_image_extension(const std::filesystem::path& path) {
    return format_from_extension(path) != ImageFormat::UNKNOWN;
}

struct DecodeResult {
    bool ok = false;
    Image image;
    std::optional<std::string> device;
};

// ---------------------------------------------------------------- file IO

inline std::optional<std::vector<std::uint8_t>> read_file(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) return std::nullopt;
    return bytes;
}

inline bool write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    return out.good();
}

// ------------------------------------------------------------------ JPEG

namespace detail {

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

// Counts corruption warnings without printing them; the default handler
// does the counting inside its print path, so a plain no-op would lose
// the num_warnings signal decode_jpeg relies on.
inline void jpeg_silence(j_common_ptr cinfo, int msg_level) {
    if (msg_level < 0) cinfo->err->num_warnings++;
}

}  // namespace detail

inline DecodeResult decode_jpeg(const std::vector<std::uint8_t>& bytes) {
    // Everything with a destructor is declared before setjmp so the
    // longjmp recovery path never skips an initialization.
    DecodeResult result;
    Image img;
    jpeg_decompress_struct cinfo{};
    detail::JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = detail::jpeg_error_exit;
    err.pub.emit_message = detail::jpeg_silence;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        return DecodeResult{};
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_save_markers(&cinfo, JPEG_APP0 + 1, 0xFFFF);
    if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
        jpeg_destroy_decompress(&cinfo);
        return result;
    }
    for (jpeg_saved_marker_ptr m = cinfo.marker_list; m; m = m->next) {
        if (m->marker == JPEG_APP0 + 1) {
            if (auto model = exif::model_from_app1(m->data, m->data_length)) {
                result.device = std::move(model);
                break;
            }
        }
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img = Image(static_cast<int>(cinfo.output_width),
                static_cast<int>(cinfo.output_height), 3);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    // Truncated or corrupt streams surface as warnings, not errors; a
    // clean decode has none, so any warning marks the file unreadable.
    const bool corrupt = err.pub.num_warnings > 0;
    jpeg_destroy_decompress(&cinfo);
    if (corrupt) return DecodeResult{};
    result.ok = true;
    result.image = std::move(img);
    return result;
}

inline std::vector<std::uint8_t> encode_jpeg(
    const Image& img, int quality,
    const std::optional<std::string>& device = std::nullopt) {
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> row_copy;
    std::vector<std::uint8_t> app1;
    jpeg_compress_struct cinfo{};
    detail::JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = detail::jpeg_error_exit;
    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        return {};
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    if (device) {
        app1 = exif::build_exif_model(*device);
        jpeg_write_marker(&cinfo, JPEG_APP0 + 1, app1.data(),
                          static_cast<unsigned int>(app1.size()));
    }
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    row_copy.resize(stride);
    while (cinfo.next_scanline < cinfo.image_height) {
        std::memcpy(row_copy.data(), img.pixels.data() + cinfo.next_scanline * stride,
                    stride);
        JSAMPROW row = row_copy.data();
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    out.assign(buffer, buffer + buffer_size);
    jpeg_destroy_compress(&cinfo);
    free(buffer);
    return out;
}

// ------------------------------------------------------------------- PNG

inline DecodeResult decode_png(const std::vector<std::uint8_t>& bytes) {
    DecodeResult result;
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        return result;
    png.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(png.width), static_cast<int>(png.height), 3);
    if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
        png_image_free(&png);
        return result;
    }
    result.ok = true;
    result.image = std::move(img);
    return result;
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels.data(), 0,
                                   nullptr))
        return {};
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels.data(), 0,
                                   nullptr))
        return {};
    out.resize(size);
    return out;
}

// ------------------------------------------------------------------- BMP
// 24-bit uncompressed, BITMAPINFOHEADER only.

inline DecodeResult decode_bmp(const std::vector<std::uint8_t>& bytes) {
    DecodeResult result;
    if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M') return result;
    auto u32 = [&bytes](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) |
               (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    auto u16 = [&bytes](std::size_t off) {
        return static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
    };
    const std::uint32_t data_offset = u32(10);
    const std::uint32_t header_size = u32(14);
    if (header_size < 40) return result;
    const auto width = static_cast<std::int32_t>(u32(18));
    const auto raw_height = static_cast<std::int32_t>(u32(22));
    const std::uint16_t bpp = u16(28);
    const std::uint32_t compression = u32(30);
    if (width <= 0 || raw_height == 0 || bpp != 24 || compression != 0)
        return result;
    const bool bottom_up = raw_height > 0;
    const std::int32_t height = bottom_up ? raw_height : -raw_height;
    const std::size_t row_bytes = (static_cast<std::size_t>(width) * 3 + 3) & ~std::size_t{3};
    if (data_offset + row_bytes * static_cast<std::size_t>(height) > bytes.size())
        return result;
    Image img(width, height, 3);
    for (std::int32_t y = 0; y < height; ++y) {
        const std::int32_t src_y = bottom_up ? height - 1 - y : y;
        const std::uint8_t* row = bytes.data() + data_offset +
                                  static_cast<std::size_t>(src_y) * row_bytes;
        for (std::int32_t x = 0; x < width; ++x) {
            img.at(x, y, 0) = row[x * 3 + 2];
            img.at(x, y, 1) = row[x * 3 + 1];
            img.at(x, y, 2) = row[x * 3 + 0];
        }
    }
    result.ok = true;
    result.image = std::move(img);
    return result;
}

inline std::vector<std::uint8_t> encode_bmp(const Image& img) {
    const int w = img.width, h = img.height;
    const std::size_t row_bytes = (static_cast<std::size_t>(w) * 3 + 3) & ~std::size_t{3};
    const std::size_t data_size = row_bytes * static_cast<std::size_t>(h);
    const std::size_t file_size = 54 + data_size;
    std::vector<std::uint8_t> out(file_size, 0);
    auto put16 = [&out](std::size_t off, std::uint16_t v) {
        out[off] = static_cast<std::uint8_t>(v & 0xFF);
        out[off + 1] = static_cast<std::uint8_t>(v >> 8);
    };
    auto put32 = [&out](std::size_t off, std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out[off + static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
    };
    out[0] = 'B';
    out[1] = 'M';
    put32(2, static_cast<std::uint32_t>(file_size));
    put32(10, 54);
    put32(14, 40);
    put32(18, static_cast<std::uint32_t>(w));
    put32(22, static_cast<std::uint32_t>(h));
    put16(26, 1);
    put16(28, 24);
    put32(34, static_cast<std::uint32_t>(data_size));
    put32(38, 2835);
    put32(42, 2835);
    for (int y = 0; y < h; ++y) {
        std::uint8_t* row = out.data() + 54 + static_cast<std::size_t>(h - 1 - y) * row_bytes;
        for (int x = 0; x < w; ++x) {
            const std::uint8_t r = img.channels == 3 ? img.at(x, y, 0) : img.at(x, y, 0);
            const std::uint8_t g = img.channels == 3 ? img.at(x, y, 1) : img.at(x, y, 0);
            const std::uint8_t b = img.channels == 3 ? img.at(x, y, 2) : img.at(x, y, 0);
            row[x * 3 + 0] = b;
            row[x * 3 + 1] = g;
            row[x * 3 + 2] = r;
        }
    }
    return out;
}

// ------------------------------------------------------------------ TIFF
// Uncompressed 8-bit gray or RGB, chunky layout, strip-based.

inline DecodeResult decode_tiff(const std::vector<std::uint8_t>& bytes) {
    DecodeResult result;
    exif::TiffView view(bytes.data(), bytes.size());
    if (!view.parse_header()) return result;
    std::uint32_t width = 0, height = 0, compression = 1, samples = 1,
                  rows_per_strip = 0;
    std::vector<std::uint32_t> strip_offsets, strip_counts, bits;
    for (const auto& e : view.read_ifd(view.first_ifd())) {
        switch (e.tag) {
            case 256: width = view.entry_uint(e).value_or(0); break;
            case 257: height = view.entry_uint(e).value_or(0); break;
            case 258: bits = view.entry_uints(e); break;
            case 259: compression = view.entry_uint(e).value_or(1); break;
            case 273: strip_offsets = view.entry_uints(e); break;
            case 277: samples = view.entry_uint(e).value_or(1); break;
            case 278: rows_per_strip = view.entry_uint(e).value_or(0); break;
            case 279: strip_counts = view.entry_uints(e); break;
            case exif::kTagModel: result.device = view.entry_ascii(e); break;
            default: break;
        }
    }
    if (width == 0 || height == 0 || compression != 1) return result;
    if (samples != 1 && samples != 3) return result;
    for (std::uint32_t b : bits)
        if (b != 8) return result;
    if (strip_offsets.empty() || strip_offsets.size() != strip_counts.size())
        return result;
    if (rows_per_strip == 0) rows_per_strip = height;

    const std::size_t row_bytes = static_cast<std::size_t>(width) * samples;
    std::vector<std::uint8_t> data;
    data.reserve(row_bytes * height);
    for (std::size_t s = 0; s < strip_offsets.size(); ++s) {
        const std::size_t off = strip_offsets[s], cnt = strip_counts[s];
        if (off + cnt > bytes.size()) return result;
        data.insert(data.end(), bytes.begin() + static_cast<std::ptrdiff_t>(off),
                    bytes.begin() + static_cast<std::ptrdiff_t>(off + cnt));
    }
    if (data.size() < row_bytes * height) return result;
    data.resize(row_bytes * height);
    Image img(static_cast<int>(width), static_cast<int>(height),
              static_cast<int>(samples));
    img.pixels = std::move(data);
    result.ok = true;
    result.image = std::move(img);
    return result;
}

inline std::vector<std::uint8_t> encode_tiff(
    const Image& img, const std::optional<std::string>& device = std::nullopt) {
    std::vector<std::uint8_t> out;
    auto put16 = [&out](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    auto put32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    const std::uint16_t samples = static_cast<std::uint16_t>(img.channels);
    const std::uint16_t n_entries = device ? 10 : 9;
    const std::uint32_t ifd_offset = 8;
    const std::uint32_t after_ifd = ifd_offset + 2 + n_entries * 12u + 4;

    // Out-of-line data: bits-per-sample array (RGB only), model string, pixels.
    std::uint32_t bits_offset = 0, model_offset = 0;
    std::uint32_t cursor = after_ifd;
    if (samples == 3) {
        bits_offset = cursor;
        cursor += 6;
    }
    std::uint32_t model_count = 0;
    if (device) {
        model_count = static_cast<std::uint32_t>(device->size() + 1);
        if (model_count > 4) {
            model_offset = cursor;
            cursor += model_count;
        }
    }
    if (cursor % 2 == 1) ++cursor;  // word-align pixel data
    const std::uint32_t pixels_offset = cursor;
    const auto pixel_bytes = static_cast<std::uint32_t>(img.pixels.size());

    out.push_back('I');
    out.push_back('I');
    put16(42);
    put32(ifd_offset);
    put16(n_entries);
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count,
                     std::uint32_t value) {
        put16(tag);
        put16(type);
        put32(count);
        put32(value);
    };
    entry(256, 4, 1, static_cast<std::uint32_t>(img.width));
    entry(257, 4, 1, static_cast<std::uint32_t>(img.height));
    if (samples == 3)
        entry(258, 3, 3, bits_offset);
    else
        entry(258, 3, 1, 8);
    entry(259, 3, 1, 1);                       // no compression
    entry(262, 3, 1, samples == 3 ? 2u : 1u);  // RGB or min-is-black
    if (device) {
        if (model_count <= 4) {
            std::uint32_t inline_value = 0;
            for (std::size_t i = 0; i < device->size(); ++i)
                inline_value |= static_cast<std::uint32_t>(
                                    static_cast<std::uint8_t>((*device)[i]))
                                << (8 * i);
            entry(exif::kTagModel, 2, model_count, inline_value);
        } else {
            entry(exif::kTagModel, 2, model_count, model_offset);
        }
    }
    entry(273, 4, 1, pixels_offset);
    entry(277, 3, 1, samples);
    entry(278, 4, 1, static_cast<std::uint32_t>(img.height));
    entry(279, 4, 1, pixel_bytes);
    put32(0);  // no next IFD

    if (samples == 3) {
        put16(8);
        put16(8);
        put16(8);
    }
    if (device && model_count > 4) {
        for (char c : *device) out.push_back(static_cast<std::uint8_t>(c));
        out.push_back(0);
    }
    while (out.size() < pixels_offset) out.push_back(0);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

// ------------------------------------------------------------- dispatch

inline DecodeResult decode_image(const std::vector<std::uint8_t>& bytes,
                                 ImageFormat format) {
    switch (format) {
        case ImageFormat::JPEG: return decode_jpeg(bytes);
        case ImageFormat::PNG: return decode_png(bytes);
        case ImageFormat::BMP: return decode_bmp(bytes);
        case ImageFormat::TIFF: return decode_tiff(bytes);
        default: return {};
    }
}

}  // namespace ctv
