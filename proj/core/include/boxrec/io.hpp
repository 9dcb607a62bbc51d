#pragma once

// Small text/file helpers shared by the pipeline, checkpoints and the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace boxrec {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Calls `row(line_number, columns)` for every non-blank line, split on TAB.
void for_each_tsv_row(
    const std::filesystem::path& path,
    const std::function<void(std::size_t, const std::vector<std::string_view>&)>& row);

/// `key=value` lines (whitespace around both trimmed, blank lines and `#` comments skipped).
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

std::uint64_t parse_uint(std::string_view s, const std::string& where, std::size_t line);
double parse_real(std::string_view s, const std::string& where, std::size_t line);
/// Same parsers for values that have no file position; throw InputError.
std::uint64_t parse_uint(std::string_view s);
double parse_real(std::string_view s);

/// Shortest round-trippable decimal form.
std::string format_real(double v);

std::string_view trim(std::string_view s);

}  // namespace boxrec
