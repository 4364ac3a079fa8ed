#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace kgfuse {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace kgfuse
