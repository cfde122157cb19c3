#include "mcomp/core/motion_io.hpp"

#include <fstream>
#include <sstream>

namespace mcomp {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const json& a, const char* what)
{
    if (!a.is_array() || a.size() != N) {
        throw FormatError(std::string("motion file: '") + what + "' must be an array of " +
                          std::to_string(N) + " numbers");
    }
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) {
        v[i] = a[i].get<double>();
    }
    return v;
}

} // namespace

json skeleton_to_json(const Skeleton& skeleton)
{
    json joints = json::array();
    for (const Joint& jt : skeleton.joints()) {
        joints.push_back({{"name", jt.name}, {"parent", jt.parent}, {"offset", vec_to_json(jt.offset)}});
    }
    return {{"joints", joints}};
}

Skeleton skeleton_from_json(const json& j)
{
    std::vector<Joint> joints;
    for (const json& jt : j.at("joints")) {
        Joint joint;
        joint.name = jt.at("name").get<std::string>();
        joint.parent = jt.at("parent").is_null() ? -1 : jt.at("parent").get<int>();
        joint.offset = vec_from_json<3>(jt.at("offset"), "offset");
        joints.push_back(std::move(joint));
    }
    return Skeleton(std::move(joints));
}

json pose_to_json(const Pose& pose)
{
    json rot = json::array();
    for (const Rot6d& r : pose.rot6d) {
        rot.push_back(vec_to_json(r));
    }
    return {{"root_t", vec_to_json(pose.root_translation)}, {"rot6d", rot}};
}

Pose pose_from_json(const json& j)
{
    Pose p;
    p.root_translation = vec_from_json<3>(j.at("root_t"), "root_t");
    for (const json& r : j.at("rot6d")) {
        p.rot6d.push_back(vec_from_json<6>(r, "rot6d"));
    }
    return p;
}

json motion_file_to_json(const MotionFile& file)
{
    json frames = json::array();
    for (const Pose& p : file.motion.frames()) {
        frames.push_back(pose_to_json(p));
    }
    json out = {
        {"fps", file.motion.fps()},
        {"skeleton", skeleton_to_json(*file.motion.skeleton())},
        {"frames", std::move(frames)},
    };
    json labels = json::array();
    for (const MotionLabel& l : file.labels) {
        labels.push_back({{"text", l.text}, {"start_frame", l.start_frame}, {"end_frame", l.end_frame}});
    }
    out["labels"] = std::move(labels);
    return out;
}

MotionFile motion_file_from_json(const json& j)
{
    try {
        auto skeleton = std::make_shared<const Skeleton>(skeleton_from_json(j.at("skeleton")));
        std::vector<Pose> frames;
        for (const json& f : j.at("frames")) {
            frames.push_back(pose_from_json(f));
        }
        std::vector<MotionLabel> labels;
        if (j.contains("labels")) {
            for (const json& l : j.at("labels")) {
                labels.push_back({l.at("text").get<std::string>(), l.at("start_frame").get<int>(),
                                  l.at("end_frame").get<int>()});
            }
        }
        return {Motion(std::move(frames), j.at("fps").get<double>(), std::move(skeleton)), std::move(labels)};
    } catch (const json::exception& e) {
        throw FormatError(std::string("motion file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("motion file: ") + e.what());
    }
}

std::string dump_motion_file(const MotionFile& file)
{
    return motion_file_to_json(file).dump();
}

MotionFile parse_motion_file(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("motion file: ") + e.what());
    }
    return motion_file_from_json(j);
}

MotionFile read_motion_file(const std::filesystem::path& path)
{
    return parse_motion_file(read_file(path));
}

void write_motion_file(const std::filesystem::path& path, const MotionFile& file)
{
    write_file_atomic(path, dump_motion_file(file));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mcomp
