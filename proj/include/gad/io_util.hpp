#pragma once

#include <filesystem>
#include <string>

namespace gad {

// 17-significant-digit general-format rendering: enough digits to parse
// back to exactly the same double, locale-independent, '.' decimal point.
std::string format_double(double value);

// Whole-file read; IoError when the file cannot be opened or read.
std::string read_text_file(const std::filesystem::path& path);

// Write-to-temp-then-rename so readers never observe a partial file.
// Parent directories are created as needed. IoError on failure.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace gad
