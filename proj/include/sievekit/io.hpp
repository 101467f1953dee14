#pragma once

#include <string>

namespace sievekit {

/// Six significant digits, for humans.
std::string format_real(double value);
/// Seventeen significant digits; parse_exact(format_exact(x)) == x for every finite x.
std::string format_exact(double value);
/// Strict decimal parse of the whole token; throws CacheError on trailing garbage.
double parse_exact(const std::string& token);

/// Writes via a temporary sibling file and rename(2), so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace sievekit
