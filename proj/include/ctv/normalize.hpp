#pragma once

// Derived-dataset production: every readable image becomes a square
// JPEG of side `target` (default 336) at a fixed quality (default 95).
// Square inputs are resampled directly; everything else scales its
// shorter side to the target, rounds the longer side to nearest (floored
// at target so the crop window always fits), and center-crops.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctv/catalog.hpp"
#include "ctv/codec.hpp"
#include "ctv/parallel.hpp"
#include "ctv/resample.hpp"

namespace ctv {

// Pre-crop dimensions for the aspect-preserving scale step.
inline std::pair<int, int> scaled_dims(int w, int h, int target) {
    if (w == h) return {target, target};
    if (w < h) {
        const auto longer = static_cast<int>(
            std::lround(static_cast<double>(h) * target / w));
        return {target, longer < target ? target : longer};
    }
    const auto longer =
        static_cast<int>(std::lround(static_cast<double>(w) * target / h));
    return {longer < target ? target : longer, target};
}

inline Image crop_center(const Image& img, int target) {
    const int off_x = (img.width - target) / 2;
    const int off_y = (img.height - target) / 2;
    Image out(target, target, img.channels);
    for (int y = 0; y < target; ++y)
        for (int x = 0; x < target; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(x + off_x, y + off_y, c);
    return out;
}

inline Image resize_center_crop(const Image& img, int target) {
    if (target <= 0) throw std::invalid_argument("target must be positive");
    const auto [sw, sh] = scaled_dims(img.width, img.height, target);
    const Image scaled = resample_bicubic(img, sw, sh);
    if (sw == target && sh == target) return scaled;
    return crop_center(scaled, target);
}

struct NormalizeReport {
    std::uint64_t images_processed = 0;
    std::uint64_t input_bytes = 0;
    std::uint64_t output_bytes = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // (image_id, reason)
};

inline NormalizeReport process_dataset(const Catalog& catalog,
                                       const std::filesystem::path& dataset_root,
                                       const std::filesystem::path& out_dir,
                                       int target = 336, int quality = 95,
                                       int threads = 1) {
    namespace fs = std::filesystem;
    struct Slot {
        bool ok = false;
        std::string reason;
        std::uint64_t in_bytes = 0;
        std::uint64_t out_bytes = 0;
    };
    std::vector<Slot> slots(catalog.records.size());

    // Directories are created up front; workers only write files.
    for (const auto& r : catalog.records)
        fs::create_directories(out_dir / r.team / r.class_label);

    parallel_for(catalog.records.size(), threads, [&](std::size_t i) {
        const auto& rec = catalog.records[i];
        Slot& slot = slots[i];
        if (!rec.readable) {
            slot.reason = "unreadable";
            return;
        }
        const auto bytes = read_file(dataset_root / rec.rel_path);
        if (!bytes) {
            slot.reason = "missing file";
            return;
        }
        const auto decoded = decode_image(*bytes, rec.format);
        if (!decoded.ok) {
            slot.reason = "decode failed";
            return;
        }
        const Image square = resize_center_crop(decoded.image, target);
        const auto jpeg = encode_jpeg(square, quality);
        if (jpeg.empty()) {
            slot.reason = "encode failed";
            return;
        }
        const auto out_path =
            out_dir / rec.team / rec.class_label / (rec.image_id + ".jpg");
        if (!write_file(out_path, jpeg)) {
            slot.reason = "write failed";
            return;
        }
        slot.ok = true;
        slot.in_bytes = bytes->size();
        slot.out_bytes = jpeg.size();
    });

    NormalizeReport report;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& slot = slots[i];
        if (slot.ok) {
            ++report.images_processed;
            report.input_bytes += slot.in_bytes;
            report.output_bytes += slot.out_bytes;
        } else {
            report.failures.emplace_back(catalog.records[i].image_id, slot.reason);
        }
    }
    std::sort(report.failures.begin(), report.failures.end());
    return report;
}

inline void save_normalize_report(const NormalizeReport& report,
                                  const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["images_processed"] = report.images_processed;
    j["input_bytes"] = report.input_bytes;
    j["output_bytes"] = report.output_bytes;
    j["failures"] = nlohmann::json::array();
    for (const auto& [id, reason] : report.failures)
        j["failures"].push_back({{"image_id", id}, {"reason", reason}});
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write report: " + path.string());
    out << j.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("report write failed");
}

}  // namespace ctv
