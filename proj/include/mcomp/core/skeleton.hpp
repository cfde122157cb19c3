#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcomp/core/rotation.hpp"

namespace mcomp {

struct Joint {
    std::string name;
    int parent = -1; // -1 for the root
    Vec3 offset = Vec3::Zero(); // meters, in the parent's frame

    bool operator==(const Joint&) const = default;
};

// Joint hierarchy in topological order: joint 0 is the root and every other
// joint's parent has a smaller index. Coordinates are z-up, +y forward.
class Skeleton {
public:
    explicit Skeleton(std::vector<Joint> joints);

    // 22-joint humanoid with SMPL-like topology and hand-authored offsets.
    static Skeleton default_humanoid();

    int joint_count() const { return static_cast<int>(joints_.size()); }
    const Joint& joint(int index) const { return joints_.at(index); }
    std::span<const Joint> joints() const { return joints_; }

    // -1 when absent.
    int index_of(std::string_view name) const;

    bool operator==(const Skeleton&) const = default;

private:
    std::vector<Joint> joints_;
};

using SkeletonPtr = std::shared_ptr<const Skeleton>;

SkeletonPtr default_skeleton();

// Named joint indices of the default humanoid.
namespace joints {
inline constexpr int pelvis = 0;
inline constexpr int left_hip = 1;
inline constexpr int right_hip = 2;
inline constexpr int spine1 = 3;
inline constexpr int left_knee = 4;
inline constexpr int right_knee = 5;
inline constexpr int spine2 = 6;
inline constexpr int left_ankle = 7;
inline constexpr int right_ankle = 8;
inline constexpr int spine3 = 9;
inline constexpr int left_foot = 10;
inline constexpr int right_foot = 11;
inline constexpr int neck = 12;
inline constexpr int left_collar = 13;
inline constexpr int right_collar = 14;
inline constexpr int head = 15;
inline constexpr int left_shoulder = 16;
inline constexpr int right_shoulder = 17;
inline constexpr int left_elbow = 18;
inline constexpr int right_elbow = 19;
inline constexpr int left_wrist = 20;
inline constexpr int right_wrist = 21;
inline constexpr int count = 22;
} // namespace joints

} // namespace mcomp
