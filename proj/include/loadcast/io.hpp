#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace loadcast::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Splits CSV text into rows of fields. No quoting support; the formats
/// written by this project never need it.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// printf("%.*f") into a std::string.
std::string fixed(double value, int decimals);

/// Shortest text that round-trips to the same double.
std::string round_trip(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

double parse_double(std::string_view text);

}  // namespace loadcast::io
