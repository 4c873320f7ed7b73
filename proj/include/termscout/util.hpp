#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace termscout {

/// Thrown for malformed or inconsistent input data (bad files, unknown ids).
/// The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

std::string to_lower_ascii(std::string_view s);

/// Splits on a single delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view s, char delim);

/// Strips a trailing '\r' (TSV files may come from CRLF sources).
std::string_view strip_cr(std::string_view line);

/// Scores, metrics and config values: 6 significant digits.
std::string fmt_g6(double v);

/// Time columns: fixed millisecond precision so frame-grid values survive
/// a text round trip at any utterance length.
std::string fmt_sec(double v);

double parse_double(std::string_view s, const std::string& context);
long parse_long(std::string_view s, const std::string& context);

std::string read_file_bytes(const std::filesystem::path& p);

/// FNV-1a, used for pipeline stage cache keys.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);

}  // namespace termscout
