#include "mcomp/dataset/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mcomp/core/seed.hpp"

namespace mcomp {

std::vector<ItemLength> pair_lengths(const std::vector<ActionPair>& pairs)
{
    std::vector<ItemLength> out;
    out.reserve(pairs.size());
    for (const ActionPair& p : pairs) {
        out.push_back({static_cast<int>(p.motion_1.size()), static_cast<int>(p.motion_2.size())});
    }
    return out;
}

BatchIterator::BatchIterator(std::vector<ItemLength> lengths, std::size_t batch_size, std::uint64_t seed)
    : lengths_(std::move(lengths)), batch_size_(batch_size), seed_(seed)
{
    if (lengths_.empty()) {
        throw EmptyDataset("batch iterator over an empty dataset");
    }
    if (batch_size_ == 0) {
        throw std::invalid_argument("batch size must be at least 1");
    }
}

std::vector<std::size_t> BatchIterator::order(std::uint64_t epoch_index) const
{
    std::vector<std::size_t> idx(lengths_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Explicit Fisher-Yates: std::shuffle's draw pattern is implementation-defined.
    std::mt19937_64 rng(derive_seed(seed_, epoch_index));
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::vector<Batch> BatchIterator::epoch(std::uint64_t epoch_index) const
{
    const std::vector<std::size_t> idx = order(epoch_index);
    std::vector<Batch> out;
    for (std::size_t b = 0; b < idx.size(); b += batch_size_) {
        Batch batch;
        for (std::size_t k = b; k < std::min(idx.size(), b + batch_size_); ++k) {
            batch.indices.push_back(idx[k]);
            batch.lengths.push_back(lengths_[idx[k]]);
        }
        out.push_back(std::move(batch));
    }
    return out;
}

std::size_t BatchIterator::batches_per_epoch() const
{
    return (lengths_.size() + batch_size_ - 1) / batch_size_;
}

} // namespace mcomp
