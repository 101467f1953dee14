#include "sievekit/io.hpp"

#include "sievekit/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

namespace sievekit {

namespace {

std::string printf_double(const char* format, double value) {
    char buffer[64];
    const int n = std::snprintf(buffer, sizeof buffer, format, value);
    return std::string(buffer, static_cast<std::size_t>(n));
}

}  // namespace

std::string format_real(double value) { return printf_double("%.6g", value); }

std::string format_exact(double value) { return printf_double("%.17g", value); }

double parse_exact(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        throw CacheError("malformed number '" + token + "'");
    }
    return value;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    std::random_device rd;
    const fs::path temp = target.string() + ".tmp" + std::to_string(rd());
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CacheError("cannot write " + temp.string());
        }
        out << contents;
        if (!out.flush()) {
            throw CacheError("write failed for " + temp.string());
        }
    }
    std::error_code ec;
    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp);
        throw CacheError("cannot rename into " + path + ": " + ec.message());
    }
}

}  // namespace sievekit
