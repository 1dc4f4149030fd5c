#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shrinkdet {

enum class Label : uint8_t { normal = 0, outlier = 1 };

/// An ordered univariate series sampled at implicit integer timestamps
/// 0..n-1, optionally carrying ground-truth outlier labels.
/// Immutable after construction.
class TimeSeries {
public:
    TimeSeries(std::vector<double> values,
               std::optional<std::vector<Label>> labels = std::nullopt,
               std::string name = "")
        : values_(std::move(values)), labels_(std::move(labels)), name_(std::move(name)) {
        if (values_.empty())
            throw std::invalid_argument("TimeSeries: empty series");
        for (size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw std::invalid_argument("TimeSeries: non-finite value at index " +
                                            std::to_string(i));
        if (labels_ && labels_->size() != values_.size())
            throw std::invalid_argument("TimeSeries: label/value length mismatch");
    }

    const std::vector<double>& values() const { return values_; }
    bool has_labels() const { return labels_.has_value(); }
    const std::vector<Label>& labels() const { return *labels_; }
    const std::string& name() const { return name_; }
    size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
    std::optional<std::vector<Label>> labels_;
    std::string name_;
};

struct Interval {
    size_t begin;        // inclusive
    size_t end;          // exclusive
    double local_range;  // max - min within [begin, end)
    double beta;         // local_range / global_range, 0 when the series is constant
};

struct IntervalPartition {
    size_t interval_length = 0;
    double global_range = 0.0;
    std::vector<Interval> intervals;

    const Interval& interval_of(size_t index) const {
        return intervals[index / interval_length];
    }
};

/// max(values) - min(values).
inline double global_range(const TimeSeries& series) {
    auto [mn, mx] = std::minmax_element(series.values().begin(), series.values().end());
    return *mx - *mn;
}

/// Tiles [0, n) into fixed-length intervals (the last one may be shorter)
/// and computes each interval's local range and beta = local/global ratio.
inline IntervalPartition partition(const TimeSeries& series, size_t interval_length) {
    if (interval_length < 2)
        throw std::invalid_argument("partition: interval_length must be >= 2");

    IntervalPartition part;
    part.interval_length = interval_length;
    part.global_range = global_range(series);

    const auto& v = series.values();
    for (size_t begin = 0; begin < v.size(); begin += interval_length) {
        const size_t end = std::min(begin + interval_length, v.size());
        auto [mn, mx] = std::minmax_element(v.begin() + begin, v.begin() + end);
        const double local = *mx - *mn;
        const double beta = part.global_range > 0.0 ? local / part.global_range : 0.0;
        part.intervals.push_back({begin, end, local, beta});
    }
    return part;
}

}  // namespace shrinkdet
