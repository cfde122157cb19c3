#include "mcomp/core/skeleton.hpp"

#include <stdexcept>

namespace mcomp {

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints))
{
    if (joints_.size() < 2) {
        throw std::invalid_argument("skeleton needs at least two joints");
    }
    if (joints_[0].parent != -1) {
        throw std::invalid_argument("skeleton joint 0 must be the root");
    }
    for (std::size_t j = 1; j < joints_.size(); ++j) {
        const int p = joints_[j].parent;
        if (p < 0 || p >= static_cast<int>(j)) {
            throw std::invalid_argument("skeleton joint '" + joints_[j].name +
                                        "' must have a parent with a smaller index");
        }
    }
}

int Skeleton::index_of(std::string_view name) const
{
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        if (joints_[j].name == name) {
            return static_cast<int>(j);
        }
    }
    return -1;
}

Skeleton Skeleton::default_humanoid()
{
    // Right is +x, forward +y, up +z. Arms hang down in the rest pose.
    return Skeleton({
        {"pelvis", -1, {0.0, 0.0, 0.0}},
        {"left_hip", 0, {-0.09, 0.0, -0.08}},
        {"right_hip", 0, {0.09, 0.0, -0.08}},
        {"spine1", 0, {0.0, -0.02, 0.11}},
        {"left_knee", 1, {0.0, 0.0, -0.40}},
        {"right_knee", 2, {0.0, 0.0, -0.40}},
        {"spine2", 3, {0.0, 0.0, 0.13}},
        {"left_ankle", 4, {0.0, 0.0, -0.40}},
        {"right_ankle", 5, {0.0, 0.0, -0.40}},
        {"spine3", 6, {0.0, 0.0, 0.05}},
        {"left_foot", 7, {0.0, 0.12, -0.06}},
        {"right_foot", 8, {0.0, 0.12, -0.06}},
        {"neck", 9, {0.0, 0.0, 0.21}},
        {"left_collar", 9, {-0.08, 0.0, 0.12}},
        {"right_collar", 9, {0.08, 0.0, 0.12}},
        {"head", 12, {0.0, 0.01, 0.09}},
        {"left_shoulder", 13, {-0.10, 0.0, 0.03}},
        {"right_shoulder", 14, {0.10, 0.0, 0.03}},
        {"left_elbow", 16, {0.0, 0.0, -0.26}},
        {"right_elbow", 17, {0.0, 0.0, -0.26}},
        {"left_wrist", 18, {0.0, 0.0, -0.25}},
        {"right_wrist", 19, {0.0, 0.0, -0.25}},
    });
}

SkeletonPtr default_skeleton()
{
    static const SkeletonPtr instance = std::make_shared<const Skeleton>(Skeleton::default_humanoid());
    return instance;
}

} // namespace mcomp
