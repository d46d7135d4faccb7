#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fabric {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs, then renames into place. Readers
// never observe partial content; leftover "*.tmp-*" files are invisible.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void ensure_dir(const std::filesystem::path& dir);

bool is_temp_artifact(const std::filesystem::path& path);

// Regular files under root (skipping temp artifacts), relative paths,
// lexicographically sorted.
std::vector<std::filesystem::path> list_files_recursive(const std::filesystem::path& root);

}  // namespace fabric
