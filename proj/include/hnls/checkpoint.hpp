#pragma once

// Checkpoint files: one line of JSON followed by the raw samples.
//
//   {"format_version":1,"tag":"radial","d":3,"c":0.1,"grid":{...},"count":8192,
//    "post_blowup":false,"meta":{...}}\n
//   count x (re, im) as little-endian IEEE-754 binary64
//
// grid is {"nodes","s_min","r_max"} for radial fields and
// {"points","half_width"} for Cartesian ones. Readers reject any other
// format_version.

#include "hnls/grids.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace hnls {

inline constexpr int kCheckpointFormatVersion = 1;

struct LoadedCheckpoint {
    Field field;
    nlohmann::json meta;
};

std::string encode_checkpoint(const Field& f, const nlohmann::json& meta = nlohmann::json::object());
LoadedCheckpoint decode_checkpoint(std::string_view bytes);

/// Writes through a temporary file and rename.
void write_checkpoint(const std::filesystem::path& path, const Field& f,
                      const nlohmann::json& meta = nlohmann::json::object());
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

/// Whole-file helpers shared with the run manifest.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace hnls
