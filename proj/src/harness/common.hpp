#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wb::harness::detail {

/// printf-style %.<precision>g; "nan" / "inf" / "-inf" for non-finite values.
std::string fmt(double v, int precision = 17);
/// Fixed-point with `decimals` digits.
std::string fmt_fixed(double v, int decimals);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex16(std::uint64_t v);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep);

/// Data lines of a CSV: comment lines ('#') dropped, header returned separately.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

double parse_double(const std::string& s, const std::string& what);

}  // namespace wb::harness::detail
