#pragma once

#include <cstdint>
#include <string>

namespace fcnet {

// Whole-file read; throws FormatError if the file cannot be opened.
std::string read_file(const std::string& path);

// Single-writer atomic write: temp file in the target directory, then rename.
// A failed run never leaves a partial file at `path`.
void atomic_write_file(const std::string& path, const std::string& content);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters.
std::string file_digest_hex(const std::string& path);

}  // namespace fcnet
