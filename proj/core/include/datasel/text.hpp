#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace datasel {

// Lowercases ASCII letters and splits on runs of non-alphanumeric bytes.
// Bytes >= 0x80 are kept as token characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// Full-precision decimal rendering of a double ("%.17g").
std::string format_real(double value);

// Shortest fixed rendering with `digits` decimals, used in human-facing reports.
std::string format_fixed(double value, int digits);

}  // namespace datasel
