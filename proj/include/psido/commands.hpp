#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace psido {

/// Reads a JSON config file; ConfigError when it is missing or malformed.
nlohmann::json load_config(const std::filesystem::path& path);

/// Batch commands. Each writes its tables and report into `out` and a short
/// summary to `log`, and returns 0 when every check passes and 1 otherwise.
/// Invalid configs raise ConfigError.
int cmd_star_test(const nlohmann::json& cfg, const std::filesystem::path& out, std::uint64_t seed, std::ostream& log);
int cmd_egorov_scan(const nlohmann::json& cfg, const std::filesystem::path& out, std::uint64_t seed,
                    std::ostream& log);
int cmd_decompose(const nlohmann::json& cfg, const std::filesystem::path& out, std::uint64_t seed, std::ostream& log);

}  // namespace psido
