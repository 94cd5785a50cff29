#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "whitebilevel/image.hpp"

namespace wb::io {

/// 8-bit binary PGM (P5). Samples are mapped to [0,1] by /255.
Image read_pgm(const std::filesystem::path& path);
/// Clamps to [0,1] and rounds to 8 bits. `comment` lines land in the header.
void write_pgm(const std::filesystem::path& path, const Image& image, const std::string& comment = {});

/// Raw float64 format: one line of JSON ({"height":..,"width":..} plus any
/// extra metadata), a '\n', then height*width little-endian doubles row-major.
Image read_f64(const std::filesystem::path& path, nlohmann::json* header = nullptr);
void write_f64(const std::filesystem::path& path, const Image& image, nlohmann::json metadata = {});

/// Dispatches on extension: .pgm or .f64.
Image read_image(const std::filesystem::path& path);

}  // namespace wb::io
