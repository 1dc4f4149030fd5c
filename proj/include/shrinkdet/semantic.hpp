#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "shrinkdet/codec.hpp"

namespace shrinkdet {

enum class RetainReason : uint8_t {
    short_segment,
    forward_neighbor,
    short_subbase,
    longest_of_group,
};

struct SemanticSelection {
    std::vector<uint32_t> retained;  // segment ids, ascending
    std::map<uint32_t, RetainReason> reason;
    size_t segment_min_points = 0;  // eps*_seg
    size_t subbase_min_cones = 0;   // eps*_base

    bool contains(uint32_t id) const {
        return std::binary_search(retained.begin(), retained.end(), id);
    }
};

struct AnalyticsPoint {
    size_t index;
    double value;
    uint32_t segment_id;
};

struct AnalyticsPoints {
    std::vector<AnalyticsPoint> points;  // strictly increasing index
};

namespace detail {

inline void insert_retained(SemanticSelection& sel, uint32_t id, RetainReason why,
                            bool overwrite_reason) {
    auto it = std::lower_bound(sel.retained.begin(), sel.retained.end(), id);
    if (it == sel.retained.end() || *it != id) {
        sel.retained.insert(it, id);
        sel.reason.emplace(id, why);
    } else if (overwrite_reason) {
        sel.reason[id] = why;
    }
}

}  // namespace detail

/// Walks segments in order and keeps every segment with at most
/// threshold points together with its immediate forward neighbor. A short
/// neighbor is expanded in turn; a long one is kept but not re-expanded.
inline SemanticSelection segment_filter(const Base& base, size_t threshold) {
    if (threshold < 1)
        throw std::invalid_argument("segment_filter: threshold must be >= 1");
    SemanticSelection sel;
    sel.segment_min_points = threshold;

    const auto& segs = base.segments;
    size_t i = 0;
    while (i < segs.size()) {
        if (segs[i].length <= threshold) {
            detail::insert_retained(sel, static_cast<uint32_t>(i), RetainReason::short_segment,
                                    true);
            if (i + 1 >= segs.size()) break;
            detail::insert_retained(sel, static_cast<uint32_t>(i + 1),
                                    RetainReason::forward_neighbor, false);
            i += segs[i + 1].length > threshold ? 2 : 1;
        } else {
            ++i;
        }
    }
    return sel;
}

/// Keeps short segments of the remaining (not yet selected) set and, for
/// sub-bases holding more merged cones than the threshold, the longest
/// remaining segment of the group (first by start index on ties).
inline SemanticSelection base_filter(const Base& base, const SemanticSelection& selection,
                                     size_t threshold) {
    if (threshold < 1)
        throw std::invalid_argument("base_filter: threshold must be >= 1");
    for (uint32_t id : selection.retained)
        if (id >= base.segments.size())
            throw std::invalid_argument("base_filter: selection references unknown segment id");

    SemanticSelection out = selection;
    out.subbase_min_cones = threshold;

    const auto& segs = base.segments;
    std::vector<size_t> group_count(base.sub_bases.size(), 0);
    std::vector<int64_t> group_longest(base.sub_bases.size(), -1);
    for (uint32_t i = 0; i < segs.size(); ++i) {
        if (selection.contains(i)) continue;
        const uint32_t g = segs[i].sub_base_id;
        ++group_count[g];
        if (group_longest[g] < 0 || segs[i].length > segs[group_longest[g]].length)
            group_longest[g] = i;
    }

    for (uint32_t i = 0; i < segs.size(); ++i) {
        if (selection.contains(i)) continue;
        if (segs[i].length <= threshold) {
            detail::insert_retained(out, i, RetainReason::short_subbase, false);
        } else if (group_count[segs[i].sub_base_id] > threshold) {
            detail::insert_retained(out, static_cast<uint32_t>(group_longest[segs[i].sub_base_id]),
                                    RetainReason::longest_of_group, false);
        }
    }
    return out;
}

/// Segment Filter then Base Filter, in that order, then materialization of
/// every covered timestamp of every retained segment.
inline AnalyticsPoints materialize(const Base& base, const SemanticSelection& selection) {
    AnalyticsPoints out;
    for (uint32_t id : selection.retained) {
        const Segment& seg = base.segments[id];
        for (size_t t = seg.start; t < seg.start + seg.length; ++t)
            out.points.push_back({t, seg.eval(t), id});
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const AnalyticsPoint& a, const AnalyticsPoint& b) { return a.index < b.index; });
    return out;
}

inline AnalyticsPoints transform(const Base& base, size_t seg_threshold, size_t base_threshold) {
    SemanticSelection sel = segment_filter(base, seg_threshold);
    sel = base_filter(base, sel, base_threshold);
    return materialize(base, sel);
}

}  // namespace shrinkdet
