#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace factornet {

// Shortest decimal form that round-trips an IEEE754 double exactly
// (%.17g, trimmed). Every file this project writes uses it, so rerunning
// a command reproduces its outputs byte for byte.
std::string fmt_g17(double v);

std::string read_file(const std::filesystem::path& path);

// write to <path>.tmp in the same directory, then rename over the target
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

// strict double parse; throws ValidationError with context on failure
double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

}  // namespace factornet
