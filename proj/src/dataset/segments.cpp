#include "mcomp/dataset/segments.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

namespace mcomp {

std::string normalize_label(std::string_view text)
{
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) {
        --e;
    }
    std::string out(text.substr(b, e - b));
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool LabeledSegment::is_transition() const
{
    return normalize_label(text) == "transition";
}

bool LabeledSegment::is_calibration_pose() const
{
    const std::string t = normalize_label(text);
    return t == "t-pose" || t == "a-pose" || t == "t pose" || t == "a pose" || t == "tpose" || t == "apose";
}

void SequenceRecord::validate() const
{
    const int n = static_cast<int>(motion.size());
    std::vector<char> covered(static_cast<std::size_t>(n), 0);
    for (const LabeledSegment& s : segments) {
        if (s.start_frame < 0 || s.start_frame >= s.end_frame || s.end_frame > n) {
            throw InvalidRecord("segment '" + s.text + "' has invalid interval [" +
                                std::to_string(s.start_frame) + ", " + std::to_string(s.end_frame) + ")");
        }
        std::fill(covered.begin() + s.start_frame, covered.begin() + s.end_frame, 1);
    }
    const auto gap = std::find(covered.begin(), covered.end(), 0);
    if (gap != covered.end()) {
        throw InvalidRecord("frame " + std::to_string(gap - covered.begin()) + " is not covered by any segment");
    }
}

SequenceRecord SequenceRecord::from_file(const MotionFile& file)
{
    SequenceRecord r{file.motion, {}};
    for (const MotionLabel& l : file.labels) {
        r.segments.push_back({l.text, l.start_frame, l.end_frame});
    }
    return r;
}

MotionFile SequenceRecord::to_file() const
{
    MotionFile f{motion, {}};
    for (const LabeledSegment& s : segments) {
        f.labels.push_back({s.text, s.start_frame, s.end_frame});
    }
    return f;
}

namespace {

// Nearest predecessor (latest start before the transition starts) and
// successor (earliest start at or after it) among overlapping actions.
std::pair<int, int> bridge_members(const std::vector<LabeledSegment>& segments, const LabeledSegment& transition)
{
    int pred = -1;
    int succ = -1;
    for (int i = 0; i < static_cast<int>(segments.size()); ++i) {
        const LabeledSegment& s = segments[i];
        if (!s.is_action() || !s.overlaps(transition)) {
            continue;
        }
        if (s.start_frame < transition.start_frame) {
            if (pred < 0 || s.start_frame > segments[pred].start_frame) {
                pred = i;
            }
        } else if (succ < 0 || s.start_frame < segments[succ].start_frame) {
            succ = i;
        }
    }
    return {pred, succ};
}

} // namespace

std::vector<PairLayout> pair_layouts(const std::vector<LabeledSegment>& segments)
{
    std::vector<PairLayout> out;
    const int n = static_cast<int>(segments.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const LabeledSegment& a = segments[i];
            const LabeledSegment& b = segments[j];
            if (!a.is_action() || !b.is_action() || !a.overlaps(b) || a.contains(b) || b.contains(a)) {
                continue;
            }
            const bool a_first = a.start_frame < b.start_frame;
            const int first = a_first ? i : j;
            const int second = a_first ? j : i;
            const LabeledSegment& f = segments[first];
            const LabeledSegment& s = segments[second];
            const int overlap = f.end_frame - s.start_frame;
            const int split = s.start_frame + (overlap + 1) / 2;
            out.push_back({first, second, {f.start_frame, split}, {split, s.end_frame}, PairSource::overlap});
        }
    }

    std::set<std::pair<int, int>> bridged;
    for (const LabeledSegment& t : segments) {
        if (!t.is_transition()) {
            continue;
        }
        const auto [p, s] = bridge_members(segments, t);
        if (p < 0 || s < 0 || segments[p].end_frame > segments[s].start_frame) {
            continue;
        }
        if (!bridged.insert({p, s}).second) {
            continue;
        }
        out.push_back({p,
                       s,
                       {segments[p].start_frame, segments[p].end_frame},
                       {segments[p].end_frame, segments[s].end_frame},
                       PairSource::transition_bridge});
    }

    std::sort(out.begin(), out.end(), [&](const PairLayout& x, const PairLayout& y) {
        return std::make_tuple(segments[x.segment_1].start_frame, segments[x.segment_2].start_frame, x.segment_1,
                               x.segment_2) < std::make_tuple(segments[y.segment_1].start_frame,
                                                              segments[y.segment_2].start_frame, y.segment_1,
                                                              y.segment_2);
    });
    return out;
}

std::vector<ActionPair> extract_pairs(const SequenceRecord& record)
{
    record.validate();
    std::vector<ActionPair> out;
    for (const PairLayout& l : pair_layouts(record.segments)) {
        out.push_back({record.motion.slice(l.range_1.begin, l.range_1.end),
                       record.segments[l.segment_1].text,
                       record.motion.slice(l.range_2.begin, l.range_2.end),
                       record.segments[l.segment_2].text,
                       l.source,
                       l.segment_1,
                       l.segment_2,
                       l.range_1,
                       l.range_2});
    }
    return out;
}

} // namespace mcomp
