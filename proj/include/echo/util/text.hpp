#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace echo {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
bool iequals(std::string_view a, std::string_view b);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

// Standard alphabet, padded.
std::string base64_encode(std::string_view bytes);
// Throws InvalidValue on malformed input.
std::string base64_decode(std::string_view text);

// Lowercase hex digest.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::string& path);
// Writes via a temporary file and rename so readers never see partial files.
void write_file_atomic(const std::string& path, std::string_view content);

// ISO-8601 UTC with milliseconds.
std::string utc_timestamp();

}  // namespace echo
