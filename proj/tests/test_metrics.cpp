#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shrinkdet/codec.hpp"
#include "shrinkdet/datasets.hpp"
#include "shrinkdet/metrics.hpp"

using namespace shrinkdet;

namespace {

std::pair<std::vector<double>, std::vector<Label>> random_scored(std::mt19937_64& rng,
                                                                 size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores(m);
    std::vector<Label> labels(m, Label::normal);
    for (size_t i = 0; i < m; ++i) {
        // quantize some scores so ties actually occur
        scores[i] = (rng() % 3) ? u(rng) : std::round(u(rng) * 4.0) / 4.0;
        if (rng() % 4 == 0) labels[i] = Label::outlier;
    }
    // guarantee both classes
    labels[0] = Label::outlier;
    labels[m - 1] = Label::normal;
    return {scores, labels};
}

}  // namespace

TEST_CASE("roc_auc hand examples") {
    std::vector<Label> y{Label::normal, Label::normal, Label::outlier, Label::outlier};
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, y) == 1.0);
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, y) == 0.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, y) == 0.5);
    // one tie across classes: pairs (4): 0.8>0.2, 0.8>0.5, 0.5=0.5 half, 0.5>0.2
    CHECK(roc_auc({0.2, 0.5, 0.5, 0.8}, y) == doctest::Approx(0.875));

    CHECK_THROWS_AS(roc_auc({0.1}, std::vector<Label>{Label::normal, Label::outlier}),
                    std::invalid_argument);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, std::vector<Label>{Label::normal, Label::normal}),
                    std::invalid_argument);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, std::vector<Label>{Label::outlier, Label::outlier}),
                    std::invalid_argument);
}

TEST_CASE("roc_auc matches the pairwise oracle") {
    std::mt19937_64 rng(103);
    for (int iter = 0; iter < 200; ++iter) {
        auto [scores, labels] = random_scored(rng, 5 + rng() % 60);
        CHECK(roc_auc(scores, labels) ==
              doctest::Approx(oracle::roc_pairwise(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("roc_auc is invariant under strictly monotone score transforms") {
    std::mt19937_64 rng(107);
    auto [scores, labels] = random_scored(rng, 80);
    const double base = roc_auc(scores, labels);
    auto warped = scores;
    for (double& s : warped) s = std::exp(3.0 * s) + 7.0;
    CHECK(roc_auc(warped, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("roc_auc complement: negated scores give 1 - auc") {
    std::mt19937_64 rng(109);
    auto [scores, labels] = random_scored(rng, 120);
    auto neg = scores;
    for (double& s : neg) s = -s;
    CHECK(roc_auc(scores, labels) + roc_auc(neg, labels) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pr_auc hand examples") {
    std::vector<Label> y{Label::normal, Label::normal, Label::outlier, Label::outlier};
    CHECK(pr_auc({0.1, 0.2, 0.8, 0.9}, y) == 1.0);
    // ranking: pos(0.9), neg(0.7), pos(0.6), neg(0.1)
    // AP = 1/2 * (1/1) + 1/2 * (2/3) = 0.8333...
    CHECK(pr_auc({0.7, 0.1, 0.6, 0.9}, y) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK_THROWS_AS(pr_auc({0.1, 0.2}, std::vector<Label>{Label::normal, Label::normal}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pr_auc({0.1}, std::vector<Label>{Label::normal, Label::outlier}),
                    std::invalid_argument);
}

TEST_CASE("pr_auc matches the threshold-enumeration oracle") {
    std::mt19937_64 rng(113);
    for (int iter = 0; iter < 200; ++iter) {
        auto [scores, labels] = random_scored(rng, 5 + rng() % 60);
        CHECK(pr_auc(scores, labels) ==
              doctest::Approx(oracle::pr_threshold_enum(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("detection_ratio") {
    CHECK(detection_ratio(0.9, 0.9) == 100.0);
    CHECK(detection_ratio(0.99, 0.9) == doctest::Approx(110.0));
    CHECK(detection_ratio(0.891, 0.9) == doctest::Approx(99.0));
    CHECK_THROWS_AS(detection_ratio(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("compression_report arithmetic is self-consistent") {
    std::mt19937_64 rng(127);
    auto v = oracle::random_series(rng, 4000);
    TimeSeries s(v);
    Archive ar = compress(s, quant_from_snr(s, 25.0), 64);
    auto rep = compression_report(s, ar);
    CHECK(rep.original_bytes == 4000 * 8);
    CHECK(rep.archive_bytes == serialize(ar).size());
    CHECK(rep.base_bytes == ar.segments.size() * 24);
    CHECK(rep.base_bytes + rep.residual_bytes <= rep.archive_bytes);
    CHECK(rep.compression_ratio ==
          doctest::Approx(static_cast<double>(rep.original_bytes) / rep.archive_bytes));
    CHECK(rep.base_fraction ==
          doctest::Approx(static_cast<double>(rep.base_bytes) / rep.original_bytes));
}

TEST_CASE("smooth sinusoid compresses to a small base") {
    TimeSeries s = synth(SynthKind::sine, 50000,
                         {.amplitude = 3.0, .period = 500, .noise_sigma = 0.02}, 11);
    Archive ar = compress(s, quant_from_snr(s, 25.0), 64);
    auto rep = compression_report(s, ar);
    CHECK(rep.base_fraction < 0.15);
}
