#pragma once

// Minimal TIFF IFD walker, enough to pull the capture-device "Model"
// tag (0x0110) out of a TIFF file body or a JPEG APP1 Exif payload,
// and to build a tiny Exif blob for the encoders.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ctv::exif {

constexpr std::uint16_t kTagModel = 0x0110;

struct IfdEntry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint32_t raw_value = 0;   // value or offset, already byte-swapped
    std::size_t value_offset = 0;  // absolute offset of the 4-byte value field
};

class TiffView {
public:
    TiffView(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    bool parse_header() {
        if (size_ < 8) return false;
        if (data_[0] == 'I' && data_[1] == 'I') little_endian_ = true;
        else if (data_[0] == 'M' && data_[1] == 'M') little_endian_ = false;
        else return false;
        if (u16(2) != 42) return false;
        first_ifd_ = u32(4);
        return first_ifd_ + 2 <= size_;
    }

    std::uint16_t u16(std::size_t off) const {
        if (off + 2 > size_) return 0;
        return little_endian_
                   ? static_cast<std::uint16_t>(data_[off] | (data_[off + 1] << 8))
                   : static_cast<std::uint16_t>((data_[off] << 8) | data_[off + 1]);
    }

    std::uint32_t u32(std::size_t off) const {
        if (off + 4 > size_) return 0;
        if (little_endian_)
            return static_cast<std::uint32_t>(data_[off]) |
                   (static_cast<std::uint32_t>(data_[off + 1]) << 8) |
                   (static_cast<std::uint32_t>(data_[off + 2]) << 16) |
                   (static_cast<std::uint32_t>(data_[off + 3]) << 24);
        return (static_cast<std::uint32_t>(data_[off]) << 24) |
               (static_cast<std::uint32_t>(data_[off + 1]) << 16) |
               (static_cast<std::uint32_t>(data_[off + 2]) << 8) |
               static_cast<std::uint32_t>(data_[off + 3]);
    }

    std::vector<IfdEntry> read_ifd(std::size_t ifd_off) const {
        std::vector<IfdEntry> entries;
        if (ifd_off + 2 > size_) return entries;
        const std::uint16_t n = u16(ifd_off);
        for (std::uint16_t i = 0; i < n; ++i) {
            const std::size_t e = ifd_off + 2 + static_cast<std::size_t>(i) * 12;
            if (e + 12 > size_) break;
            IfdEntry entry;
            entry.tag = u16(e);
            entry.type = u16(e + 2);
            entry.count = u32(e + 4);
            entry.raw_value = u32(e + 8);
            entry.value_offset = e + 8;
            entries.push_back(entry);
        }
        return entries;
    }

    std::size_t first_ifd() const { return first_ifd_; }
    std::size_t size() const { return size_; }
    const std::uint8_t* data() const { return data_; }

    // Integer field of type SHORT or LONG; first element only.
    std::optional<std::uint32_t> entry_uint(const IfdEntry& e) const {
        if (e.type == 3) return u16(e.value_offset);  // SHORT stored in-place
        if (e.type == 4) return e.raw_value;          // LONG
        return std::nullopt;
    }

    // All elements of a SHORT or LONG array field.
    std::vector<std::uint32_t> entry_uints(const IfdEntry& e) const {
        std::vector<std::uint32_t> out;
        const std::size_t elem = e.type == 3 ? 2 : (e.type == 4 ? 4 : 0);
        if (elem == 0) return out;
        const std::size_t total = elem * e.count;
        const std::size_t base = total <= 4 ? e.value_offset : e.raw_value;
        if (base + total > size_) return out;
        for (std::uint32_t i = 0; i < e.count; ++i) {
            const std::size_t off = base + i * elem;
            out.push_back(elem == 2 ? u16(off) : u32(off));
        }
        return out;
    }

    std::optional<std::string> entry_ascii(const IfdEntry& e) const {
        if (e.type != 2 || e.count == 0) return std::nullopt;
        const std::size_t base = e.count <= 4 ? e.value_offset : e.raw_value;
        if (base + e.count > size_) return std::nullopt;
        std::string text(reinterpret_cast<const char*>(data_ + base), e.count);
        while (!text.empty() && (text.back() == '\0' || text.back() == ' '))
            text.pop_back();
        if (text.empty()) return std::nullopt;
        return text;
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    bool little_endian_ = true;
    std::size_t first_ifd_ = 0;
};

// Device model from a TIFF-structured blob (TIFF body or Exif payload
// after the "Exif\0\0" prefix). Looks at IFD0 only.
inline std::optional<std::string> model_from_tiff(const std::uint8_t* data,
                                                  std::size_t size) {
    TiffView view(data, size);
    if (!view.parse_header()) return std::nullopt;
    for (const auto& e : view.read_ifd(view.first_ifd())) {
        if (e.tag == kTagModel) return view.entry_ascii(e);
    }
    return std::nullopt;
}

// Device model from a JPEG APP1 payload (starts with "Exif\0\0").
inline std::optional<std::string> model_from_app1(const std::uint8_t* data,
                                                  std::size_t size) {
    static const char prefix[] = "Exif\0\0";
    if (size < 6 || !std::equal(prefix, prefix + 6,
                                reinterpret_cast<const char*>(data)))
        return std::nullopt;
    return model_from_tiff(data + 6, size - 6);
}

// Builds an "Exif\0\0" + little-endian TIFF payload whose IFD0 holds a
// single Model tag. Suitable for a JPEG APP1 segment.
inline std::vector<std::uint8_t> build_exif_model(const std::string& model) {
    std::vector<std::uint8_t> out;
    auto put16 = [&out](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    auto put32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };
    const char prefix[] = "Exif\0\0";
    out.insert(out.end(), prefix, prefix + 6);
    const std::size_t tiff_base = out.size();
    out.push_back('I');
    out.push_back('I');
    put16(42);
    put32(8);  // IFD0 right after the header
    put16(1);  // one entry
    const std::uint32_t count = static_cast<std::uint32_t>(model.size() + 1);
    put16(kTagModel);
    put16(2);  // ASCII
    put32(count);
    if (count <= 4) {
        std::size_t before = out.size();
        for (char c : model) out.push_back(static_cast<std::uint8_t>(c));
        out.push_back(0);
        while (out.size() - before < 4) out.push_back(0);
        put32(0);  // next IFD
    } else {
        put32(8 + 2 + 12 + 4);  // string lives right after the IFD terminator
        put32(0);               // next IFD
        for (char c : model) out.push_back(static_cast<std::uint8_t>(c));
        out.push_back(0);
    }
    (void)tiff_base;
    return out;
}

}  // namespace ctv::exif
