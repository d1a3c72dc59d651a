#pragma once

#include "rctlab/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace rctlab {

inline constexpr const char* kSeedEnvVar = "RCT_LAB_SEED";

// INI-style experiment file. Sections: [experiment], [estimator], [model],
// [online], [session], [thresholds]. Every key is optional and overrides the
// built-in scenario named by experiment.scenario (default "cc"). Unknown
// sections or keys are rejected. Relative paths resolve against base_dir.
ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Seed from RCT_LAB_SEED, if set. Throws ConfigError when it is not an
// unsigned integer.
std::optional<std::uint64_t> seed_from_env();

} // namespace rctlab
