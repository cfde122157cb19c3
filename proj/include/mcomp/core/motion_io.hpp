#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcomp/core/motion.hpp"

namespace mcomp {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MotionLabel {
    std::string text;
    int start_frame = 0;
    int end_frame = 0; // exclusive

    bool operator==(const MotionLabel&) const = default;
};

// Contents of a motion file:
// {"fps", "skeleton": {"joints": [{"name", "parent", "offset"}]},
//  "frames": [{"root_t": [3], "rot6d": [[6] x J]}],
//  "labels": [{"text", "start_frame", "end_frame"}]}
struct MotionFile {
    Motion motion;
    std::vector<MotionLabel> labels;
};

nlohmann::json skeleton_to_json(const Skeleton& skeleton);
Skeleton skeleton_from_json(const nlohmann::json& j);

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json motion_file_to_json(const MotionFile& file);
MotionFile motion_file_from_json(const nlohmann::json& j);

std::string dump_motion_file(const MotionFile& file);
MotionFile parse_motion_file(std::string_view text);

MotionFile read_motion_file(const std::filesystem::path& path);
void write_motion_file(const std::filesystem::path& path, const MotionFile& file);

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

} // namespace mcomp
