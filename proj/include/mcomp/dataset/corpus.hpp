#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcomp/dataset/resample.hpp"
#include "mcomp/dataset/segments.hpp"
#include "mcomp/dataset/synth.hpp"

namespace mcomp {

enum class Split { train, val };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
    std::filesystem::path path;
    Split split = Split::train;
};

// {"fps": 30, "entries": [{"path": "...", "split": "train" | "val"}]}.
// Relative paths resolve against the manifest's directory.
struct CorpusManifest {
    double fps = 30.0;
    std::vector<ManifestEntry> entries;

    static CorpusManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Reads every entry of the split, resampled to the manifest rate with label
// frames rescaled. Throws FormatError / InvalidRecord on bad files.
std::vector<SequenceRecord> load_records(const CorpusManifest& manifest, Split split);

// Records resampled from a higher frame rate; segment bounds are mapped to
// the new frame grid and kept non-empty.
SequenceRecord resample_record(const SequenceRecord& record, double target_fps);

// All pairs of all records that pass the duration filter.
std::vector<ActionPair> collect_pairs(const std::vector<SequenceRecord>& records, const FilterConfig& config = {});

struct SingleClip {
    Motion motion;
    std::string text;
};

// Every action segment as a standalone clip; short ones are rejected and
// long ones cropped, crop k drawing from derive_seed(seed, k).
std::vector<SingleClip> collect_singles(const std::vector<SequenceRecord>& records, std::uint64_t seed,
                                        const FilterConfig& config = {});

// Writes `count` synthetic records plus manifest.json into dir; the last
// round(count * val_fraction) records form the validation split.
CorpusManifest write_synth_corpus(const std::filesystem::path& dir, const CorpusSpec& spec, std::uint64_t seed,
                                  std::size_t count, double val_fraction);

} // namespace mcomp
