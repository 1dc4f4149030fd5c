#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "oracles.hpp"
#include "shrinkdet/codec.hpp"
#include "shrinkdet/datasets.hpp"

using namespace shrinkdet;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double max_abs_err(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("grow_cone on collinear points") {
    std::vector<double> v{0, 1, 2, 3};
    Cone cone = grow_cone(v, 0, 0.0, 0.5);
    CHECK(cone.point_count == 4);
    CHECK(cone.span_low <= 1.0);
    CHECK(cone.span_high >= 1.0);
}

TEST_CASE("grow_cone closes on empty slope intersection") {
    std::vector<double> v{0, 5, 14};
    Cone cone = grow_cone(v, 0, 0.0, 1.0);
    CHECK(cone.point_count == 2);
    CHECK(cone.span_low == doctest::Approx(4.0));
    CHECK(cone.span_high == doctest::Approx(6.0));
}

TEST_CASE("grow_cone boundary matches per-prefix feasibility oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(200);
    double x = 0.0;
    for (double& p : v) {
        x += gauss(rng);
        p = x;
    }
    size_t start = 0;
    while (start < v.size()) {
        Cone cone = grow_cone(v, start, v[start], 0.5);
        const size_t want = oracle::cone_boundary(v, start, v[start], 0.5);
        CHECK(cone.point_count == want);
        start += cone.point_count;
    }
}

TEST_CASE("build_base on constant series: one segment, zero slope") {
    TimeSeries s(std::vector<double>(100, 5.0));
    Base base = build_base(s, quant_from_epsilon(0.5), 16);
    REQUIRE(base.segments.size() == 1);
    CHECK(base.sub_bases.size() == 1);
    CHECK(base.segments[0].slope == 0.0);
    CHECK(base.segments[0].length == 100);
}

TEST_CASE("build_base on a pure ramp: single segment, slope near c") {
    const double c = 0.75;
    std::vector<double> v(200);
    for (size_t t = 0; t < v.size(); ++t) v[t] = c * static_cast<double>(t);
    Base base = build_base(TimeSeries(v), quant_from_epsilon(10.0), 64);
    REQUIRE(base.segments.size() == 1);
    // reconstruction respects the adaptive threshold, so the slope is close
    CHECK(base.segments[0].slope == doctest::Approx(c).epsilon(0.2));
}

TEST_CASE("piecewise-linear data yields one segment per piece within threshold") {
    std::vector<double> v;
    const double slopes[3] = {2.0, -3.0, 0.5};
    double x = 0.0;
    for (int piece = 0; piece < 3; ++piece)
        for (int t = 0; t < 100; ++t) {
            x += slopes[piece];
            v.push_back(x);
        }
    TimeSeries s(v);
    QuantConfig cfg = quant_from_epsilon(0.5);
    Base base = build_base(s, cfg, 64);
    CHECK(base.segments.size() == 3);

    auto part = partition(s, 64);
    auto recon = reconstruct_base(base);
    for (size_t t = 0; t < v.size(); ++t)
        CHECK(std::fabs(v[t] - recon[t]) <= adaptive_threshold(cfg, part.interval_of(t).beta));
}

TEST_CASE("segment tiling covers the series exactly") {
    std::mt19937_64 rng(31);
    for (int iter = 0; iter < 10; ++iter) {
        auto v = oracle::random_series(rng, 100 + rng() % 2000);
        TimeSeries s(v);
        Base base = build_base(s, quant_from_snr(s, 25.0), 64);
        size_t covered = 0;
        for (const auto& seg : base.segments) {
            CHECK(seg.start == covered);
            covered += seg.length;
        }
        CHECK(covered == s.size());
        for (const auto& seg : base.segments)
            CHECK(seg.sub_base_id < base.sub_bases.size());
    }
}

TEST_CASE("base L-inf bound holds per interval on random input") {
    std::mt19937_64 rng(37);
    for (int iter = 0; iter < 15; ++iter) {
        auto v = oracle::random_series(rng, 100 + rng() % 3000);
        TimeSeries s(v);
        QuantConfig cfg = quant_from_snr(s, 15.0 + 10.0 * (iter % 3));
        Base base = build_base(s, cfg, 64);
        auto part = partition(s, 64);
        auto recon = reconstruct_base(base);
        for (size_t t = 0; t < v.size(); ++t) {
            const double eps = adaptive_threshold(cfg, part.interval_of(t).beta);
            REQUIRE(std::fabs(v[t] - recon[t]) <= eps);
        }
    }
}

TEST_CASE("zero-residual series produces minimal exact block") {
    TimeSeries s(std::vector<double>(64, 5.0));
    Base base = build_base(s, quant_from_epsilon(0.5), 16);
    auto recon = reconstruct_base(base);
    REQUIRE(bit_equal(recon, s.values()));
    Residual res = encode_residuals(s, base);
    CHECK(res.base_bound == 0.0);
    REQUIRE(res.blocks.size() == 1);
    CHECK(res.blocks[0].kind == ResidualBlockKind::exact);
}

TEST_CASE("single point off by exactly 2^tau gives one delta of that size") {
    const int tau = -1;
    std::vector<double> v(64, 5.0);
    v[20] += std::ldexp(1.0, tau);  // 5.5, exactly one grid step away
    TimeSeries s(v);

    Base base;  // hand-built: one flat segment at theta=5
    base.n = v.size();
    base.quant = quant_from_epsilon(std::ldexp(1.0, tau));
    base.segments.push_back({0, 64, 5.0, 0.0, 0});
    base.sub_bases.push_back({0});

    Residual res = encode_residuals(s, base);
    CHECK(res.base_bound == std::ldexp(1.0, tau));

    Archive ar;
    ar.n = base.n;
    ar.interval_length = 16;
    ar.tau = tau;
    ar.eps_b = base.quant.base_epsilon;
    ar.segments = base.segments;
    ar.residual = res;
    CHECK(bit_equal(decompress_values(ar, kLossless), v));
}

TEST_CASE("residual roundtrip is bit-exact on random data") {
    std::mt19937_64 rng(41);
    for (int iter = 0; iter < 20; ++iter) {
        auto v = oracle::random_series(rng, 100 + rng() % 2000);
        TimeSeries s(v);
        Archive ar = compress(s, quant_from_snr(s, 25.0), 64);
        CHECK(bit_equal(decompress_values(ar, kLossless), v));
    }
}

TEST_CASE("decompress: base-only path at large epsilon") {
    std::mt19937_64 rng(43);
    auto v = oracle::random_series(rng, 500);
    TimeSeries s(v);
    Archive ar = compress(s, quant_from_snr(s, 25.0), 64);
    auto base_only = decompress_values(ar, 1e100);
    auto segments = base_from_archive(ar).segments;
    CHECK(bit_equal(base_only, reconstruct_base(segments, v.size())));
}

TEST_CASE("decompress at finite epsilon meets the L-inf contract") {
    std::mt19937_64 rng(47);
    for (int iter = 0; iter < 10; ++iter) {
        auto v = oracle::random_series(rng, 200 + rng() % 1000);
        TimeSeries s(v);
        Archive ar = compress(s, quant_from_snr(s, 25.0), 64);
        const double eps = 0.01;
        auto out = decompress_values(ar, eps);
        CHECK(max_abs_err(out, v) <= std::max(eps, ar.residual.base_bound));
    }
}

TEST_CASE("monotone resolution: tighter epsilon never raises the max error") {
    std::mt19937_64 rng(53);
    auto v = oracle::random_series(rng, 1500);
    TimeSeries s(v);
    Archive ar = compress(s, quant_from_snr(s, 20.0), 64);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e6, 1.0, 0.1, 0.01, 1e-4, 1e-8, 0.0}) {
        const double err = max_abs_err(decompress_values(ar, eps), v);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
    CHECK(prev == 0.0);  // epsilon 0 forces the exact block
}

TEST_CASE("serialize/deserialize roundtrips") {
    SUBCASE("tiny archives") {
        TimeSeries constant(std::vector<double>(50, 3.0));
        Archive a = compress(constant, quant_from_epsilon(1.0), 16);
        auto b1 = serialize(a);
        Archive back = deserialize(b1);
        CHECK(serialize(back) == b1);
        CHECK(back.n == a.n);
        CHECK(back.segments.size() == a.segments.size());
    }
    SUBCASE("random archives double-roundtrip byte-identically") {
        std::mt19937_64 rng(59);
        for (int iter = 0; iter < 20; ++iter) {
            auto v = oracle::random_series(rng, 100 + rng() % 1000);
            TimeSeries s(v);
            Archive a = compress(s, quant_from_snr(s, 25.0), 64);
            auto b1 = serialize(a);
            auto b2 = serialize(deserialize(b1));
            CHECK(b1 == b2);
        }
    }
}

TEST_CASE("deserialize rejects corrupt input") {
    TimeSeries s(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    auto bytes = serialize(compress(s, quant_from_epsilon(0.5), 4));

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS(deserialize(bad_magic));

    auto bad_version = bytes;
    bad_version[4] = 99;
    CHECK_THROWS(deserialize(bad_version));

    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS(deserialize(truncated));

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS(deserialize(trailing));
}

TEST_CASE("compression is deterministic: identical input gives identical bytes") {
    std::mt19937_64 rng(61);
    auto v = oracle::random_series(rng, 800);
    TimeSeries s(v);
    QuantConfig cfg = quant_from_snr(s, 25.0);
    CHECK(serialize(compress(s, cfg, 64)) == serialize(compress(s, cfg, 64)));
}
