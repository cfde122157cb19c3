#include "mcomp/dataset/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "mcomp/core/motion_io.hpp"
#include "mcomp/core/seed.hpp"

namespace mcomp {

std::string to_string(Split s)
{
    return s == Split::train ? "train" : "val";
}

Split split_from_string(const std::string& s)
{
    if (s == "train") {
        return Split::train;
    }
    if (s == "val") {
        return Split::val;
    }
    throw FormatError("split must be \"train\" or \"val\", got \"" + s + "\"");
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    CorpusManifest m;
    try {
        m.fps = j.at("fps").get<double>();
        for (const auto& e : j.at("entries")) {
            std::filesystem::path p = e.at("path").get<std::string>();
            if (p.is_relative()) {
                p = path.parent_path() / p;
            }
            m.entries.push_back({p, split_from_string(e.at("split").get<std::string>())});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!(m.fps > 0.0)) {
        throw FormatError(path.string() + ": fps must be positive");
    }
    return m;
}

void CorpusManifest::save(const std::filesystem::path& path) const
{
    nlohmann::json j;
    j["fps"] = fps;
    j["entries"] = nlohmann::json::array();
    const std::filesystem::path base = path.parent_path();
    for (const ManifestEntry& e : entries) {
        std::filesystem::path p = e.path;
        if (!base.empty() && p.is_absolute()) {
            p = std::filesystem::relative(p, std::filesystem::absolute(base));
        }
        j["entries"].push_back({{"path", p.generic_string()}, {"split", to_string(e.split)}});
    }
    write_file_atomic(path, j.dump(2));
}

SequenceRecord resample_record(const SequenceRecord& record, double target_fps)
{
    if (std::abs(record.motion.fps() - target_fps) < 1e-9) {
        return record;
    }
    SequenceRecord out{resample(record.motion, target_fps), {}};
    const double ratio = record.motion.fps() / target_fps;
    const int n = static_cast<int>(out.motion.size());
    for (const LabeledSegment& s : record.segments) {
        int b = static_cast<int>(std::ceil(s.start_frame / ratio - 1e-9));
        int e = static_cast<int>(std::ceil(s.end_frame / ratio - 1e-9));
        b = std::clamp(b, 0, n - 1);
        e = std::clamp(e, b + 1, n);
        out.segments.push_back({s.text, b, e});
    }
    return out;
}

std::vector<SequenceRecord> load_records(const CorpusManifest& manifest, Split split)
{
    std::vector<SequenceRecord> out;
    for (const ManifestEntry& e : manifest.entries) {
        if (e.split != split) {
            continue;
        }
        SequenceRecord r = SequenceRecord::from_file(read_motion_file(e.path));
        r.validate();
        out.push_back(resample_record(r, manifest.fps));
    }
    return out;
}

std::vector<ActionPair> collect_pairs(const std::vector<SequenceRecord>& records, const FilterConfig& config)
{
    std::vector<ActionPair> out;
    for (const SequenceRecord& r : records) {
        for (ActionPair& p : extract_pairs(r)) {
            const double duration = static_cast<double>(p.motion_1.size() + p.motion_2.size()) / p.motion_1.fps();
            if (duration < config.min_duration_s - 1e-9 || duration > config.max_pair_duration_s + 1e-9) {
                continue;
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<SingleClip> collect_singles(const std::vector<SequenceRecord>& records, std::uint64_t seed,
                                        const FilterConfig& config)
{
    std::vector<SingleClip> out;
    std::uint64_t k = 0;
    for (const SequenceRecord& r : records) {
        for (const LabeledSegment& s : r.segments) {
            if (!s.is_action()) {
                continue;
            }
            const Motion clip = r.motion.slice(static_cast<std::size_t>(s.start_frame),
                                               static_cast<std::size_t>(s.end_frame));
            FilterOutcome o = filter_and_resample(clip, ClipKind::single, derive_seed(seed, k++), config);
            if (auto* m = std::get_if<Motion>(&o)) {
                out.push_back({std::move(*m), s.text});
            }
        }
    }
    return out;
}

CorpusManifest write_synth_corpus(const std::filesystem::path& dir, const CorpusSpec& spec, std::uint64_t seed,
                                  std::size_t count, double val_fraction)
{
    std::filesystem::create_directories(dir);
    const auto val_count = static_cast<std::size_t>(std::llround(static_cast<double>(count) * val_fraction));
    CorpusManifest manifest;
    manifest.fps = spec.synth.fps;
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "seq_%05zu.json", i);
        const SequenceRecord r = synth_record(spec, seed, i);
        write_motion_file(dir / name, r.to_file());
        manifest.entries.push_back({name, i + val_count >= count ? Split::val : Split::train});
    }
    manifest.save(dir / "manifest.json");
    // Entries resolve relative to the manifest, as they would after load().
    for (ManifestEntry& e : manifest.entries) {
        e.path = dir / e.path;
    }
    return manifest;
}

} // namespace mcomp
