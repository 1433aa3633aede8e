#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fcot {

// Index-fed worker pool over [0, count); the first exception wins and is
// rethrown after all threads join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

// SHA-256 of the input as a 64-char lowercase hex string.
std::string sha256_hex(std::string_view data);

std::string trim(std::string_view s);

// Runs of whitespace become a single space; leading/trailing runs are dropped.
std::string collapse_whitespace(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::string to_lower(std::string_view s);

// Shortest round-trip decimal representation, stable across platforms.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& file);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written file.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);

void append_line(const std::filesystem::path& file, std::string_view line);

// Splits on '\n', dropping a trailing '\r' per line. Keeps empty lines.
std::vector<std::string> split_lines(std::string_view text);

std::string iso8601_utc_now();

}  // namespace fcot
