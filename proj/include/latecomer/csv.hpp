#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace latecomer::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and `""` escapes.
std::vector<std::string> split_record(std::string_view line);

/// Splits text into lines, accepting both LF and CRLF. A trailing empty line is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

} // namespace latecomer::csv
