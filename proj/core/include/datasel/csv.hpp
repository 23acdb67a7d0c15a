#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace datasel::csv {

// Quotes a field when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

// Joins escaped fields with commas (no trailing newline).
std::string join(const std::vector<std::string>& fields);

// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split(std::string_view line);

}  // namespace datasel::csv
