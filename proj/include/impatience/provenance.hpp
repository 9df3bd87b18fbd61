#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace impatience {

inline constexpr std::string_view kToolVersion = "impatience 0.1.0";

/// 64-bit FNV-1a. Stable across platforms, used for provenance only.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// fnv1a64 rendered as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

/// content_hash of a whole file; throws IoError if unreadable.
std::string file_hash(const std::string& path);

}  // namespace impatience
