#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mcomp/dataset/segments.hpp"

namespace mcomp {

class EmptyDataset : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Frame counts of the two members of a pair (frames_2 = 0 for single clips).
struct ItemLength {
    int frames_1 = 0;
    int frames_2 = 0;
    bool operator==(const ItemLength&) const = default;
};

struct Batch {
    std::vector<std::size_t> indices;
    std::vector<ItemLength> lengths;
};

std::vector<ItemLength> pair_lengths(const std::vector<ActionPair>& pairs);

// Epoch e visits every item once in an order drawn from (seed, e). Items keep
// their own lengths; nothing is padded or truncated.
class BatchIterator {
public:
    BatchIterator(std::vector<ItemLength> lengths, std::size_t batch_size, std::uint64_t seed);

    std::vector<Batch> epoch(std::uint64_t epoch_index) const;
    std::vector<std::size_t> order(std::uint64_t epoch_index) const;
    std::size_t batches_per_epoch() const;
    std::size_t size() const { return lengths_.size(); }

private:
    std::vector<ItemLength> lengths_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

} // namespace mcomp
