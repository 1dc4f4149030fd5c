#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shrinkdet/bits.hpp"
#include "shrinkdet/core.hpp"
#include "shrinkdet/quant.hpp"

namespace shrinkdet {

/// Feasible-slope interval anchored at a quantized origin. Grows point by
/// point until the running slope intersection becomes empty.
struct Cone {
    size_t origin_index = 0;
    double origin_value = 0.0;  // theta, already on the quantization grid
    double span_low = -std::numeric_limits<double>::infinity();
    double span_high = std::numeric_limits<double>::infinity();
    size_t point_count = 1;
};

struct Segment {
    size_t start = 0;  // implicit in the archive, derived from tiling
    uint32_t length = 0;
    double theta = 0.0;
    double slope = 0.0;
    uint32_t sub_base_id = 0;

    double eval(size_t t) const {
        return theta + slope * static_cast<double>(t - start);
    }
};

struct Base {
    std::vector<Segment> segments;
    std::vector<std::vector<uint32_t>> sub_bases;  // segment ids per sub-base
    IntervalPartition interval_partition;          // empty when decoded from an archive
    QuantConfig quant;
    size_t n = 0;
};

enum class ResidualBlockKind : uint8_t { planes_high = 0, planes_low = 1, exact = 2 };

struct ResidualBlock {
    ResidualBlockKind kind;
    double bound_after;  // L-inf bound once this block (and all before it) applied
    std::vector<uint8_t> payload;
};

/// Bit-packed corrections over the Base reconstruction: two 16-bit
/// magnitude-plane blocks (sign-magnitude, fixed grid 2^(E-16) and 2^(E-32))
/// followed by an exact block that XOR-patches the remaining doubles.
struct Residual {
    double base_bound = 0.0;  // L-inf error of the Base-only reconstruction
    int32_t grid_exponent = 0;  // E: all |deltas| < 2^E
    std::vector<ResidualBlock> blocks;
};

struct Archive {
    uint8_t version = 1;
    uint64_t n = 0;
    uint32_t interval_length = 0;
    int32_t tau = 0;
    uint8_t explicit_epsilon = 0;  // 0: SNR-driven config, 1: user-supplied epsilon_b
    double eps_b = 0.0;
    std::vector<Segment> segments;  // starts derived from tiling
    Residual residual;
};

namespace detail {

// Shaves the threshold slightly so that downstream floating-point
// reconstruction cannot exceed the unshaved bound.
inline double shave(double eps) { return eps * (1.0 - 1e-12); }

inline Cone grow_cone_impl(std::span<const double> values, size_t start, double origin_value,
                           const std::function<double(size_t)>& threshold_at) {
    Cone cone;
    cone.origin_index = start;
    cone.origin_value = origin_value;
    for (size_t t = start + 1; t < values.size(); ++t) {
        const double dt = static_cast<double>(t - start);
        const double eps = shave(threshold_at(t));
        const double lo = (values[t] - eps - origin_value) / dt;
        const double hi = (values[t] + eps - origin_value) / dt;
        const double new_low = std::max(cone.span_low, lo);
        const double new_high = std::min(cone.span_high, hi);
        if (new_low > new_high) break;
        cone.span_low = new_low;
        cone.span_high = new_high;
        ++cone.point_count;
    }
    return cone;
}

inline double midpoint_slope(double lo, double hi) {
    const bool flo = std::isfinite(lo), fhi = std::isfinite(hi);
    if (!flo && !fhi) return 0.0;
    if (!flo) return hi;
    if (!fhi) return lo;
    return std::clamp((lo + hi) / 2.0, lo, hi);
}

inline uint64_t f64_bits(double v) {
    uint64_t b;
    std::memcpy(&b, &v, sizeof(b));
    return b;
}

inline double bits_f64(uint64_t b) {
    double v;
    std::memcpy(&v, &b, sizeof(v));
    return v;
}

}  // namespace detail

/// Grows the maximal cone anchored at (start, origin_value) under a single
/// error threshold. A one-point cone is always valid.
inline Cone grow_cone(std::span<const double> values, size_t start, double origin_value,
                      double threshold) {
    if (start >= values.size())
        throw std::invalid_argument("grow_cone: start out of bounds");
    if (!(threshold > 0.0))
        throw std::invalid_argument("grow_cone: threshold must be positive");
    return detail::grow_cone_impl(values, start, origin_value, [&](size_t) { return threshold; });
}

/// Runs adaptively shrinking cones over the series and merges consecutive
/// cones with equal quantized origin and intersecting slope spans into
/// sub-bases, one (theta, K) per merged group.
inline Base build_base(const TimeSeries& series, const QuantConfig& quant,
                       size_t interval_length) {
    Base base;
    base.quant = quant;
    base.n = series.size();
    base.interval_partition = partition(series, interval_length);

    const auto& part = base.interval_partition;
    const auto& v = series.values();

    std::vector<double> thresholds(part.intervals.size());
    for (size_t i = 0; i < part.intervals.size(); ++i)
        thresholds[i] = adaptive_threshold(quant, part.intervals[i].beta);
    auto threshold_at = [&](size_t t) { return thresholds[t / part.interval_length]; };

    // Cone origins are quantized on the 2^tau grid, refined per interval when
    // 2^tau would exceed the interval's own threshold.
    auto origin_at = [&](size_t t) {
        const double eps = threshold_at(t);
        const int tau_eff = std::min(quant.tau, std::ilogb(eps));
        return quantize_value(v[t], tau_eff);
    };

    // Grow cones and merge on the fly.
    struct Group {
        double theta;
        double lo, hi;
        std::vector<size_t> segment_ids;
    };
    std::vector<Group> groups;
    Group current{0.0, 0.0, 0.0, {}};
    bool open = false;

    size_t start = 0;
    while (start < v.size()) {
        const double theta = origin_at(start);
        Cone cone = detail::grow_cone_impl(v, start, theta, threshold_at);

        Segment seg;
        seg.start = start;
        seg.length = static_cast<uint32_t>(cone.point_count);
        seg.theta = theta;

        const bool mergeable = open && theta == current.theta &&
                               std::max(current.lo, cone.span_low) <=
                                   std::min(current.hi, cone.span_high);
        if (mergeable) {
            current.lo = std::max(current.lo, cone.span_low);
            current.hi = std::min(current.hi, cone.span_high);
        } else {
            if (open) groups.push_back(std::move(current));
            current = Group{theta, cone.span_low, cone.span_high, {}};
            open = true;
        }
        current.segment_ids.push_back(base.segments.size());
        base.segments.push_back(seg);
        start += cone.point_count;
    }
    if (open) groups.push_back(std::move(current));

    // Finalize slopes and coalesce groups sharing an exact (theta, K) pair
    // into one sub-base.
    std::map<std::pair<double, double>, uint32_t> sub_base_ids;
    for (auto& g : groups) {
        const double k = detail::midpoint_slope(g.lo, g.hi);
        const auto key = std::make_pair(g.theta, k);
        auto [it, inserted] = sub_base_ids.emplace(key, static_cast<uint32_t>(base.sub_bases.size()));
        if (inserted) base.sub_bases.emplace_back();
        for (size_t id : g.segment_ids) {
            base.segments[id].slope = k;
            base.segments[id].sub_base_id = it->second;
            base.sub_bases[it->second].push_back(static_cast<uint32_t>(id));
        }
    }
    return base;
}

inline std::vector<double> reconstruct_base(const std::vector<Segment>& segments, size_t n) {
    std::vector<double> out(n);
    for (const auto& seg : segments)
        for (size_t t = seg.start; t < seg.start + seg.length; ++t)
            out[t] = seg.eval(t);
    return out;
}

inline std::vector<double> reconstruct_base(const Base& base) {
    return reconstruct_base(base.segments, base.n);
}

/// Encodes per-point corrections so that a block prefix yields an
/// error-bounded approximation and the full set is bit-exact lossless.
inline Residual encode_residuals(const TimeSeries& series, const Base& base) {
    if (base.n != series.size())
        throw std::invalid_argument("encode_residuals: base built from a different series");
    const auto& v = series.values();
    const std::vector<double> recon = reconstruct_base(base);
    const size_t n = v.size();

    std::vector<double> delta(n);
    double max_abs = 0.0;
    for (size_t t = 0; t < n; ++t) {
        delta[t] = v[t] - recon[t];
        max_abs = std::max(max_abs, std::fabs(delta[t]));
    }

    Residual res;
    res.base_bound = max_abs;

    std::vector<double> approx = recon;
    if (max_abs > 0.0) {
        const int e = std::ilogb(max_abs) + 1;  // all |delta| < 2^e
        res.grid_exponent = e;
        const int g2 = e - 32;

        std::vector<uint32_t> mag(n);
        std::vector<uint8_t> neg(n);
        for (size_t t = 0; t < n; ++t) {
            neg[t] = delta[t] < 0.0 ? 1 : 0;
            mag[t] = static_cast<uint32_t>(std::trunc(std::ldexp(std::fabs(delta[t]), -g2)));
        }

        // Block 1: signs plus the 16 most significant magnitude bits.
        BitWriter w1;
        double bound1 = 0.0;
        for (size_t t = 0; t < n; ++t) {
            w1.put_bit(neg[t]);
            w1.put(mag[t] >> 16, 16);
            const double a = recon[t] + (neg[t] ? -1.0 : 1.0) *
                                            std::ldexp(static_cast<double>(mag[t] & 0xFFFF0000u), g2);
            bound1 = std::max(bound1, std::fabs(v[t] - a));
        }
        res.blocks.push_back({ResidualBlockKind::planes_high, std::min(bound1, max_abs), w1.take()});

        // Block 2: the 16 least significant magnitude bits.
        BitWriter w2;
        double bound2 = 0.0;
        for (size_t t = 0; t < n; ++t) {
            w2.put(mag[t] & 0xFFFFu, 16);
            approx[t] = recon[t] +
                        (neg[t] ? -1.0 : 1.0) * std::ldexp(static_cast<double>(mag[t]), g2);
            bound2 = std::max(bound2, std::fabs(v[t] - approx[t]));
        }
        res.blocks.push_back(
            {ResidualBlockKind::planes_low, std::min(bound2, res.blocks.back().bound_after),
             w2.take()});
    }

    // Exact block: XOR of the original bits against the refined reconstruction.
    BitWriter we;
    for (size_t t = 0; t < n; ++t) {
        const uint64_t x = detail::f64_bits(v[t]) ^ detail::f64_bits(approx[t]);
        if (x == 0) {
            we.put_bit(0);
        } else {
            we.put_bit(1);
            const unsigned lz = static_cast<unsigned>(std::countl_zero(x));
            we.put(lz, 6);
            we.put(x, 64 - lz);
        }
    }
    res.blocks.push_back({ResidualBlockKind::exact, 0.0, we.take()});
    return res;
}

inline Archive compress(const TimeSeries& series, const QuantConfig& quant,
                        size_t interval_length = 64) {
    Base base = build_base(series, quant, interval_length);
    Archive ar;
    ar.n = series.size();
    ar.interval_length = static_cast<uint32_t>(interval_length);
    ar.tau = quant.tau;
    ar.explicit_epsilon = quant.snr_driven() ? 0 : 1;
    ar.eps_b = quant.base_epsilon;
    ar.segments = base.segments;
    ar.residual = encode_residuals(series, base);
    return ar;
}

/// Rebuilds segment starts and sub-base grouping from an archive's segment
/// table. The interval partition is not recoverable (nor needed) post-decode.
inline Base base_from_archive(const Archive& ar) {
    Base base;
    base.n = ar.n;
    base.segments = ar.segments;
    base.quant.tau = ar.tau;
    base.quant.base_epsilon = ar.eps_b;
    size_t start = 0;
    uint32_t max_id = 0;
    for (auto& seg : base.segments) {
        seg.start = start;
        start += seg.length;
        max_id = std::max(max_id, seg.sub_base_id);
    }
    base.sub_bases.resize(base.segments.empty() ? 0 : max_id + 1);
    for (uint32_t i = 0; i < base.segments.size(); ++i)
        base.sub_bases[base.segments[i].sub_base_id].push_back(i);
    return base;
}

inline constexpr double kLossless = -1.0;

/// Decompresses at resolution eps: applies the shortest residual-block
/// prefix whose declared bound is <= eps. kLossless (or any negative eps)
/// applies every block and reproduces the original bit-exactly.
inline std::vector<double> decompress_values(const Archive& ar, double eps = kLossless) {
    const bool lossless = eps < 0.0;
    const size_t n = ar.n;
    std::vector<double> recon = reconstruct_base(base_from_archive(ar).segments, n);
    std::vector<double> out = recon;

    if (!lossless && ar.residual.base_bound <= eps) return out;

    const int g2 = ar.residual.grid_exponent - 32;
    std::vector<uint32_t> mag;
    std::vector<uint8_t> neg;
    double bound = ar.residual.base_bound;
    for (const auto& block : ar.residual.blocks) {
        if (!lossless && bound <= eps) break;
        BitReader r(block.payload);
        switch (block.kind) {
            case ResidualBlockKind::planes_high:
                mag.resize(n);
                neg.resize(n);
                for (size_t t = 0; t < n; ++t) {
                    neg[t] = static_cast<uint8_t>(r.get_bit());
                    mag[t] = static_cast<uint32_t>(r.get(16)) << 16;
                    out[t] = recon[t] + (neg[t] ? -1.0 : 1.0) *
                                            std::ldexp(static_cast<double>(mag[t]), g2);
                }
                break;
            case ResidualBlockKind::planes_low:
                if (mag.size() != n) throw std::runtime_error("residual: low planes before high");
                for (size_t t = 0; t < n; ++t) {
                    mag[t] |= static_cast<uint32_t>(r.get(16));
                    out[t] = recon[t] + (neg[t] ? -1.0 : 1.0) *
                                            std::ldexp(static_cast<double>(mag[t]), g2);
                }
                break;
            case ResidualBlockKind::exact:
                for (size_t t = 0; t < n; ++t) {
                    if (r.get_bit()) {
                        const unsigned lz = static_cast<unsigned>(r.get(6));
                        const uint64_t x = r.get(64 - lz);
                        out[t] = detail::bits_f64(detail::f64_bits(out[t]) ^ x);
                    }
                }
                break;
        }
        bound = block.bound_after;
    }
    return out;
}

inline TimeSeries decompress(const Archive& ar, double eps = kLossless) {
    return TimeSeries(decompress_values(ar, eps));
}

inline constexpr char kMagic[4] = {'S', 'H', 'R', 'K'};
inline constexpr uint8_t kFormatVersion = 1;

inline std::vector<uint8_t> serialize(const Archive& ar) {
    ByteWriter w;
    for (char c : kMagic) w.u8(static_cast<uint8_t>(c));
    w.u8(ar.version);
    w.u64(ar.n);
    w.u32(ar.interval_length);
    w.i32(ar.tau);
    w.u8(ar.explicit_epsilon);
    w.f64(ar.eps_b);
    w.u32(static_cast<uint32_t>(ar.segments.size()));
    uint32_t sub_base_count = 0;
    for (const auto& seg : ar.segments)
        sub_base_count = std::max(sub_base_count, seg.sub_base_id + 1);
    if (ar.segments.empty()) sub_base_count = 0;
    w.u32(sub_base_count);
    for (const auto& seg : ar.segments) {
        w.u32(seg.sub_base_id);
        w.u32(seg.length);
        w.f64(seg.theta);
        w.f64(seg.slope);
    }
    w.f64(ar.residual.base_bound);
    w.i32(ar.residual.grid_exponent);
    w.u8(static_cast<uint8_t>(ar.residual.blocks.size()));
    for (const auto& block : ar.residual.blocks) {
        w.u8(static_cast<uint8_t>(block.kind));
        w.f64(block.bound_after);
        w.u64(block.payload.size());
        w.bytes(block.payload);
    }
    return w.take();
}

inline Archive deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes.data(), bytes.size());
    for (char c : kMagic)
        if (r.u8() != static_cast<uint8_t>(c))
            throw std::runtime_error("bad archive magic");
    Archive ar;
    ar.version = r.u8();
    if (ar.version != kFormatVersion)
        throw std::runtime_error("unsupported archive version " + std::to_string(ar.version));
    ar.n = r.u64();
    ar.interval_length = r.u32();
    ar.tau = r.i32();
    ar.explicit_epsilon = r.u8();
    ar.eps_b = r.f64();
    const uint32_t segment_count = r.u32();
    r.u32();  // sub-base count, redundant with the segment table
    size_t start = 0;
    uint64_t covered = 0;
    ar.segments.resize(segment_count);
    for (auto& seg : ar.segments) {
        seg.sub_base_id = r.u32();
        seg.length = r.u32();
        seg.theta = r.f64();
        seg.slope = r.f64();
        seg.start = start;
        start += seg.length;
        covered += seg.length;
    }
    if (covered != ar.n)
        throw std::runtime_error("segment tiling does not cover the series");
    ar.residual.base_bound = r.f64();
    ar.residual.grid_exponent = r.i32();
    const uint8_t block_count = r.u8();
    ar.residual.blocks.resize(block_count);
    for (auto& block : ar.residual.blocks) {
        const uint8_t kind = r.u8();
        if (kind > 2) throw std::runtime_error("unknown residual block kind");
        block.kind = static_cast<ResidualBlockKind>(kind);
        block.bound_after = r.f64();
        const uint64_t len = r.u64();
        block.payload = r.bytes(len);
    }
    if (r.remaining() != 0)
        throw std::runtime_error("trailing bytes after archive payload");
    return ar;
}

/// Byte sizes used by compression reports: the Base is the segment table
/// plus the fixed header, the Residual is the block payloads plus headers.
inline size_t base_payload_bytes(const Archive& ar) {
    return ar.segments.size() * (4 + 4 + 8 + 8);
}

inline size_t residual_payload_bytes(const Archive& ar) {
    size_t total = 8 + 4 + 1;
    for (const auto& block : ar.residual.blocks) total += 1 + 8 + 8 + block.payload.size();
    return total;
}

}  // namespace shrinkdet
