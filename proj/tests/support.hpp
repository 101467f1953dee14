#pragma once

#include "sievekit/dhr.hpp"
#include "sievekit/weighted_bound.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <string>

namespace test_support {

// Calibrated pairs and bound tables shared across test cases in one binary.
inline const sievekit::DhrPair& pair(int k) {
    static std::mutex mutex;
    static std::map<int, sievekit::DhrPair> pairs;
    std::lock_guard lock(mutex);
    auto it = pairs.find(k);
    if (it == pairs.end()) {
        const sievekit::SieveDimension dim(k);
        it = pairs.emplace(k, sievekit::calibrate(dim, sievekit::default_dhr_u_max(dim))).first;
    }
    return it->second;
}

inline const sievekit::BoundTables& tables(int k) {
    static std::mutex mutex;
    static std::map<int, sievekit::BoundTables> built;
    std::lock_guard lock(mutex);
    auto it = built.find(k);
    if (it == built.end()) {
        it = built.emplace(k, sievekit::BoundTables::build(sievekit::SieveDimension(k), 16.0)).first;
    }
    return it->second;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("sievekit-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace test_support
