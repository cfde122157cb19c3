#pragma once

#include <string>
#include <vector>

#include "mcomp/core/motion.hpp"
#include "mcomp/core/motion_io.hpp"

namespace mcomp {

class InvalidRecord : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Lowercased, whitespace-trimmed label text.
std::string normalize_label(std::string_view text);

struct LabeledSegment {
    std::string text;
    int start_frame = 0;
    int end_frame = 0; // exclusive

    bool is_transition() const;
    // "t-pose" / "a-pose" calibration labels never enter training.
    bool is_calibration_pose() const;
    // A segment that may be a pair member or a single training segment.
    bool is_action() const { return !is_transition() && !is_calibration_pose(); }
    int length() const { return end_frame - start_frame; }

    bool overlaps(const LabeledSegment& o) const
    {
        return start_frame < o.end_frame && o.start_frame < end_frame;
    }
    bool contains(const LabeledSegment& o) const
    {
        return start_frame <= o.start_frame && o.end_frame <= end_frame;
    }
    bool operator==(const LabeledSegment&) const = default;
};

struct SequenceRecord {
    Motion motion;
    std::vector<LabeledSegment> segments;

    // Throws InvalidRecord on a malformed interval or an unlabeled frame.
    void validate() const;

    static SequenceRecord from_file(const MotionFile& file);
    MotionFile to_file() const;
};

enum class PairSource { overlap, transition_bridge };

struct FrameRange {
    int begin = 0;
    int end = 0;
    bool operator==(const FrameRange&) const = default;
};

struct ActionPair {
    Motion motion_1;
    std::string text_1;
    Motion motion_2;
    std::string text_2;
    PairSource source = PairSource::overlap;

    // Bookkeeping into the source record.
    int segment_1 = -1;
    int segment_2 = -1;
    FrameRange range_1;
    FrameRange range_2;
};

// Segment-level description of a pair, before motion slicing.
struct PairLayout {
    int segment_1 = -1;
    int segment_2 = -1;
    FrameRange range_1;
    FrameRange range_2;
    PairSource source = PairSource::overlap;
    bool operator==(const PairLayout&) const = default;
};

// Pairs of temporally consecutive actions:
//  - overlap: two action segments that intersect without either containing
//    the other; the shared frames are split at the overlap midpoint, the odd
//    frame going to the earlier segment;
//  - transition bridge: two disjoint action segments overlapped by the same
//    transition (its nearest predecessor and successor by start frame); the
//    transition frames are appended to the second member.
// Sorted by (start of first segment, start of second segment).
std::vector<PairLayout> pair_layouts(const std::vector<LabeledSegment>& segments);
std::vector<ActionPair> extract_pairs(const SequenceRecord& record);

} // namespace mcomp
