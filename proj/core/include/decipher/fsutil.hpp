#pragma once

// Small file helpers shared by checkpointing and the CLI: FNV-1a content
// checksums and atomic text writes (temp file + rename).

#include <cstdint>
#include <string>

namespace decipher {

std::uint64_t fnv1a64(const void* data, std::size_t len);

// Checksum of a file's bytes as "fnv1a64:<16 hex digits>"; throws
// std::runtime_error when the file cannot be read.
std::string file_checksum(const std::string& path);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace decipher
