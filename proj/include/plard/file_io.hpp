#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace plard {

std::vector<std::byte> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::byte> bytes);
void write_file_text(const std::string& path, const std::string& text);

}  // namespace plard
