#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sievekit::cli {

enum class Command { buchstab, dhr, bound, optimize, tuple_check, normalize, scan };
enum class Output { text, json, csv };

struct RunConfig {
    Command command = Command::buchstab;
    Output output = Output::text;
    std::filesystem::path cache_dir;
    std::optional<double> step;

    std::optional<int> k;
    std::optional<double> u;
    std::optional<double> v;
    /// dhr: F, f or beta; empty means all three.
    std::string which;
    bool old = false;

    double u_lo = 0.0, u_hi = 0.0, v_lo = 0.0, v_hi = 0.0;
    int grid = 64;
    /// optimize: "mixed" or "unmixed".
    std::string objective = "mixed";
    unsigned threads = 0;

    std::string tuple;
    std::int64_t N = 0;
    std::uint64_t z = 0;
    double tau = 0.0;
    std::size_t max_witnesses = 10000;
    std::uint64_t primes_up_to = 30;
};

/// Thrown by parse_args; `exit_code` is 0 for --help and 2 for invalid usage.
struct UsageExit {
    int exit_code;
    std::string message;
};

/// Validates the command line; the cache directory falls back to $SIEVEKIT_CACHE and then
/// ./.sievekit-cache.
RunConfig parse_args(const std::vector<std::string>& args);

/// Executes a parsed configuration: 0 on success, 1 on a computation error (reported on `err`).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run, mapping usage problems to exit code 2.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sievekit::cli
