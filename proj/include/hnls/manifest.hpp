#pragma once

// Per-run manifest: the configuration, every file written under the output
// directory with its size and git blob hash, wall time and the stage
// verdicts. Written last and atomically, so a directory without manifest.json
// is an incomplete run.

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hnls {

/// SHA-1 of "blob <size>\0" + bytes, as `git hash-object` prints it.
std::string git_blob_hash(std::string_view bytes);

struct ArtifactEntry {
    std::string path; // relative to the run directory, '/' separated
    std::uintmax_t size = 0;
    std::string hash;
};

struct RunManifest {
    std::string experiment;
    std::string config_text;
    std::vector<ArtifactEntry> artifacts;
    double wall_time = 0.0;
    bool passed = false;
    nlohmann::json stages = nlohmann::json::object(); // stage -> {passed, checks...}

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kLockName = ".lock";

/// Hashes every regular file under dir except the manifest and lock file.
std::vector<ArtifactEntry> scan_artifacts(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& dir);

/// Rehashes every listed artifact; throws HashMismatch on the first
/// difference and Io on a missing file.
void verify_manifest(const std::filesystem::path& dir, const RunManifest& m);

/// Exclusive ownership of a run directory for the lifetime of the object.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    std::filesystem::path path_;
};

} // namespace hnls
