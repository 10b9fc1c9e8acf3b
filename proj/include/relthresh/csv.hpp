#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace relthresh::csv {

struct Row {
    std::size_t line = 0;  // 1-based source line of the row's first character
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF, optional UTF-8 BOM.
/// Blank lines are skipped.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a separator, quote, or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace relthresh::csv
