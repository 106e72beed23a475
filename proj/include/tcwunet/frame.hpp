#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tcwunet/errors.hpp"

namespace tcwunet {

// Channel-major block of 32-bit float samples. Sample (c, t) lives at
// data()[c * length + t]; rows are contiguous, one per channel.
class Frame {
public:
    Frame() = default;

    // Zero-filled frame.
    Frame(int channels, int length)
        : channels_(channels), length_(length) {
        check_dims(channels, length);
        data_.assign(static_cast<std::size_t>(channels) * length, 0.0f);
    }

    // Adopts an existing buffer; size must be channels * length.
    Frame(int channels, int length, std::vector<float> data)
        : channels_(channels), length_(length), data_(std::move(data)) {
        check_dims(channels, length);
        if (data_.size() != static_cast<std::size_t>(channels) * length)
            throw ConfigError("Frame: buffer size does not match channels * length");
    }

    int channels() const { return channels_; }
    int length() const { return length_; }
    bool empty() const { return data_.empty(); }

    float at(int c, int t) const { return data_[idx(c, t)]; }
    float& at(int c, int t) { return data_[idx(c, t)]; }

    std::span<const float> row(int c) const {
        return {data_.data() + static_cast<std::size_t>(c) * length_,
                static_cast<std::size_t>(length_)};
    }
    std::span<float> row(int c) {
        return {data_.data() + static_cast<std::size_t>(c) * length_,
                static_cast<std::size_t>(length_)};
    }

    const float* data() const { return data_.data(); }
    float* data() { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    bool operator==(const Frame&) const = default;

private:
    static void check_dims(int channels, int length) {
        if (channels < 0 || length < 0)
            throw ConfigError("Frame: negative dimensions");
    }
    std::size_t idx(int c, int t) const {
        return static_cast<std::size_t>(c) * length_ + t;
    }

    int channels_ = 0;
    int length_ = 0;
    std::vector<float> data_;
};

} // namespace tcwunet
