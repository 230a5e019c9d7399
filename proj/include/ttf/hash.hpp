#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ttf {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

// Version ids are the first 16 hex digits of the content hash.
inline constexpr std::size_t kVersionIdLength = 16;
inline std::string version_id_of(std::string_view bytes) { return sha256_hex(bytes).substr(0, kVersionIdLength); }

} // namespace ttf
