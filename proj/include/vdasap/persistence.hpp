#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "vdasap/mechanism.hpp"

namespace vdasap {

inline constexpr int kMechanismFormatVersion = 1;

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

std::string serialize_mechanism(const MechanismParams& params);
MechanismParams parse_mechanism(const std::string& text);

void save_mechanism(const MechanismParams& params, const std::filesystem::path& path);
/// Loads weights; throws kFingerprintMismatch when `expected` is given and
/// differs from the stored scenario fingerprint.
MechanismParams load_mechanism(const std::filesystem::path& path,
                               const std::optional<ScenarioFingerprint>& expected = std::nullopt);

}  // namespace vdasap
