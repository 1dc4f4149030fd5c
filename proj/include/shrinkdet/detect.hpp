#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "shrinkdet/core.hpp"
#include "shrinkdet/metrics.hpp"
#include "shrinkdet/semantic.hpp"

namespace shrinkdet {

enum class FeatureMode : uint8_t { value_only, value_plus_delta };

/// Points fed to a detector: original indices plus values, either the full
/// raw series or the compact set materialized from the Base.
struct DetectorInput {
    std::vector<size_t> indices;  // strictly increasing original timestamps
    std::vector<double> values;
    FeatureMode mode = FeatureMode::value_only;

    size_t size() const { return values.size(); }

    static DetectorInput from_series(const TimeSeries& s,
                                     FeatureMode mode = FeatureMode::value_only) {
        DetectorInput in;
        in.indices.resize(s.size());
        std::iota(in.indices.begin(), in.indices.end(), size_t{0});
        in.values = s.values();
        in.mode = mode;
        return in;
    }

    static DetectorInput from_points(const AnalyticsPoints& pts,
                                     FeatureMode mode = FeatureMode::value_only) {
        DetectorInput in;
        in.indices.reserve(pts.points.size());
        in.values.reserve(pts.points.size());
        for (const auto& p : pts.points) {
            in.indices.push_back(p.index);
            in.values.push_back(p.value);
        }
        in.mode = mode;
        return in;
    }
};

struct DetectionResult {
    std::vector<double> scores;  // higher = more anomalous
    std::vector<Label> labels;
    std::string detector;
    std::string params;
    double elapsed_seconds = 0.0;
};

namespace detail {

// Min-max normalized feature matrix, one or two channels. A constant
// channel maps to all zeros.
inline std::vector<std::vector<double>> feature_matrix(const DetectorInput& in) {
    const size_t m = in.size();
    std::vector<std::vector<double>> channels;
    channels.push_back(in.values);
    if (in.mode == FeatureMode::value_plus_delta) {
        std::vector<double> delta(m, 0.0);
        for (size_t i = 1; i < m; ++i) delta[i] = in.values[i] - in.values[i - 1];
        channels.push_back(std::move(delta));
    }
    for (auto& ch : channels) {
        auto [mn, mx] = std::minmax_element(ch.begin(), ch.end());
        const double lo = *mn, range = *mx - *mn;
        for (double& v : ch) v = range > 0.0 ? (v - lo) / range : 0.0;
    }
    return channels;
}

inline double iforest_c(size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    constexpr double euler_gamma = 0.5772156649015329;
    const double h = std::log(static_cast<double>(n - 1)) + euler_gamma;
    return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

struct IsoNode {
    int feature = -1;  // -1: leaf
    double split = 0.0;
    int32_t left = -1, right = -1;
    uint32_t size = 0;
};

class IsoTree {
public:
    IsoTree(const std::vector<std::vector<double>>& features, std::vector<uint32_t> sample,
            size_t height_limit, std::mt19937_64& rng) {
        root_ = build(features, sample, 0, height_limit, rng);
    }

    double path_length(const std::vector<std::vector<double>>& features, size_t point) const {
        double depth = 0.0;
        int32_t node = root_;
        while (nodes_[node].feature >= 0) {
            node = features[nodes_[node].feature][point] < nodes_[node].split
                       ? nodes_[node].left
                       : nodes_[node].right;
            depth += 1.0;
        }
        return depth + iforest_c(nodes_[node].size);
    }

private:
    int32_t build(const std::vector<std::vector<double>>& features, std::vector<uint32_t>& ids,
                  size_t depth, size_t height_limit, std::mt19937_64& rng) {
        IsoNode node;
        node.size = static_cast<uint32_t>(ids.size());
        if (ids.size() <= 1 || depth >= height_limit) return push(node);

        // pick a feature with spread; give up if the subsample is degenerate
        std::vector<int> candidates;
        for (size_t f = 0; f < features.size(); ++f) {
            auto [mn, mx] = std::minmax_element(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
                return features[f][a] < features[f][b];
            });
            if (features[f][*mn] < features[f][*mx]) candidates.push_back(static_cast<int>(f));
        }
        if (candidates.empty()) return push(node);

        const int f = candidates[rng() % candidates.size()];
        auto [mn, mx] = std::minmax_element(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
            return features[f][a] < features[f][b];
        });
        std::uniform_real_distribution<double> dist(features[f][*mn], features[f][*mx]);
        node.feature = f;
        node.split = dist(rng);

        std::vector<uint32_t> left_ids, right_ids;
        for (uint32_t id : ids)
            (features[f][id] < node.split ? left_ids : right_ids).push_back(id);
        if (left_ids.empty() || right_ids.empty()) {
            node.feature = -1;
            return push(node);
        }
        const int32_t left = build(features, left_ids, depth + 1, height_limit, rng);
        const int32_t right = build(features, right_ids, depth + 1, height_limit, rng);
        node.left = left;
        node.right = right;
        return push(node);
    }

    int32_t push(IsoNode node) {
        nodes_.push_back(node);
        return static_cast<int32_t>(nodes_.size() - 1);
    }

    std::vector<IsoNode> nodes_;
    int32_t root_ = 0;
};

inline std::vector<Label> top_k_labels(const std::vector<double>& scores, size_t k) {
    const size_t m = scores.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<Label> labels(m, Label::normal);
    for (size_t i = 0; i < std::min(k, m); ++i) labels[order[i]] = Label::outlier;
    return labels;
}

}  // namespace detail

/// Isolation Forest: average isolation depth over random trees, scored as
/// 2^(-E[h]/c(psi)). Bit-deterministic for a fixed seed.
inline DetectionResult iforest(const DetectorInput& input, size_t n_trees = 100,
                               size_t subsample = 256, double contamination = 0.01,
                               uint64_t seed = 1) {
    if (input.size() == 0) throw std::invalid_argument("iforest: empty input");
    if (n_trees < 1) throw std::invalid_argument("iforest: n_trees must be >= 1");
    if (subsample < 1) throw std::invalid_argument("iforest: subsample must be >= 1");
    if (!(contamination > 0.0 && contamination < 1.0))
        throw std::invalid_argument("iforest: contamination must be in (0,1)");

    const auto t0 = std::chrono::steady_clock::now();
    const auto features = detail::feature_matrix(input);
    const size_t m = input.size();
    const size_t psi = std::min(subsample, m);
    const size_t height_limit =
        static_cast<size_t>(std::ceil(std::log2(std::max<size_t>(psi, 2))));

    std::mt19937_64 rng(seed);
    std::vector<uint32_t> pool(m);
    std::iota(pool.begin(), pool.end(), uint32_t{0});

    std::vector<double> path_sum(m, 0.0);
    for (size_t t = 0; t < n_trees; ++t) {
        for (size_t i = 0; i < psi; ++i)
            std::swap(pool[i], pool[i + rng() % (m - i)]);
        std::vector<uint32_t> sample(pool.begin(), pool.begin() + psi);
        detail::IsoTree tree(features, std::move(sample), height_limit, rng);
        for (size_t p = 0; p < m; ++p) path_sum[p] += tree.path_length(features, p);
    }

    DetectionResult res;
    res.detector = "iforest";
    res.params = "trees=" + std::to_string(n_trees) + ",subsample=" + std::to_string(psi) +
                 ",contamination=" + std::to_string(contamination) +
                 ",seed=" + std::to_string(seed);
    res.scores.resize(m);
    const double norm = detail::iforest_c(psi);
    for (size_t p = 0; p < m; ++p)
        res.scores[p] = std::pow(2.0, -path_sum[p] / static_cast<double>(n_trees) /
                                           std::max(norm, 1e-12));
    const size_t k = static_cast<size_t>(std::ceil(contamination * static_cast<double>(m)));
    res.labels = detail::top_k_labels(res.scores, k);
    res.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// DBSCAN noise detection in normalized feature space (distance <= eps,
/// neighborhoods include the point itself). Noise points score 1.0.
/// Uses a sort-based neighborhood structure; near-linear in 1D.
inline DetectionResult dbscan(const DetectorInput& input, double eps, size_t min_pts) {
    if (input.size() == 0) throw std::invalid_argument("dbscan: empty input");
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    const auto features = detail::feature_matrix(input);
    const size_t m = input.size();
    const size_t dims = features.size();

    std::vector<uint32_t> order(m);
    std::iota(order.begin(), order.end(), uint32_t{0});
    std::sort(order.begin(), order.end(),
              [&](uint32_t a, uint32_t b) { return features[0][a] < features[0][b]; });

    auto dist_ok = [&](uint32_t a, uint32_t b) {
        double d2 = 0.0;
        for (size_t f = 0; f < dims; ++f) {
            const double d = features[f][a] - features[f][b];
            d2 += d * d;
        }
        return d2 <= eps * eps;
    };

    std::vector<uint8_t> core(m, 0);
    if (dims == 1) {
        // two-pointer window over the sorted value axis
        size_t lo = 0, hi = 0;
        for (size_t j = 0; j < m; ++j) {
            const double v = features[0][order[j]];
            while (features[0][order[lo]] < v - eps) ++lo;
            if (hi < j) hi = j;
            while (hi + 1 < m && features[0][order[hi + 1]] <= v + eps) ++hi;
            core[order[j]] = (hi - lo + 1) >= min_pts;
        }
    } else {
        size_t lo = 0;
        for (size_t j = 0; j < m; ++j) {
            const uint32_t p = order[j];
            const double v = features[0][p];
            while (features[0][order[lo]] < v - eps) ++lo;
            size_t count = 0;
            for (size_t k = lo; k < m && features[0][order[k]] <= v + eps; ++k)
                if (dist_ok(p, order[k]) && ++count >= min_pts) break;
            core[p] = count >= min_pts;
        }
    }

    // noise = non-core with no core point within eps
    std::vector<uint32_t> core_sorted;
    for (uint32_t j : order)
        if (core[j]) core_sorted.push_back(j);

    DetectionResult res;
    res.detector = "dbscan";
    res.params = "eps=" + std::to_string(eps) + ",min_pts=" + std::to_string(min_pts);
    res.scores.assign(m, 0.0);
    res.labels.assign(m, Label::normal);
    size_t clo = 0;
    for (size_t j = 0; j < m; ++j) {
        const uint32_t p = order[j];
        if (core[p]) continue;
        const double v = features[0][p];
        while (clo < core_sorted.size() && features[0][core_sorted[clo]] < v - eps) ++clo;
        bool reachable = false;
        for (size_t k = clo; k < core_sorted.size() && features[0][core_sorted[k]] <= v + eps; ++k)
            if (dist_ok(p, core_sorted[k])) {
                reachable = true;
                break;
            }
        if (!reachable) {
            res.scores[p] = 1.0;
            res.labels[p] = Label::outlier;
        }
    }
    res.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct GridSearchResult {
    double eps = 0.0;
    size_t min_pts = 0;
    double roc = 0.0;
    DetectionResult result;  // detection at the winning cell
};

/// Evaluates every (eps, min_pts) cell, scoring each by ROC AUC against the
/// ground truth after mapping detections back to the original indices.
/// Ties go to the smaller eps, then the smaller min_pts.
inline GridSearchResult grid_search_dbscan(const DetectorInput& input,
                                           std::vector<double> eps_range,
                                           std::vector<size_t> minpts_range,
                                           const std::vector<Label>& truth, size_t n);

/// Expands a detection over a point subset back to full series length;
/// absent indices are labeled normal with score 0.
inline DetectionResult map_to_original(const DetectionResult& result, const DetectorInput& input,
                                       size_t n) {
    if (result.scores.size() != input.size())
        throw std::invalid_argument("map_to_original: result/input size mismatch");
    DetectionResult out;
    out.detector = result.detector;
    out.params = result.params;
    out.elapsed_seconds = result.elapsed_seconds;
    out.scores.assign(n, 0.0);
    out.labels.assign(n, Label::normal);
    for (size_t i = 0; i < input.size(); ++i) {
        if (input.indices[i] >= n)
            throw std::out_of_range("map_to_original: index beyond series length");
        out.scores[input.indices[i]] = result.scores[i];
        out.labels[input.indices[i]] = result.labels[i];
    }
    return out;
}

inline GridSearchResult grid_search_dbscan(const DetectorInput& input,
                                           std::vector<double> eps_range,
                                           std::vector<size_t> minpts_range,
                                           const std::vector<Label>& truth, size_t n) {
    if (eps_range.empty() || minpts_range.empty())
        throw std::invalid_argument("grid_search_dbscan: empty parameter grid");
    std::sort(eps_range.begin(), eps_range.end());
    std::sort(minpts_range.begin(), minpts_range.end());

    GridSearchResult best;
    bool have_best = false;
    for (double eps : eps_range) {
        for (size_t min_pts : minpts_range) {
            DetectionResult res = dbscan(input, eps, min_pts);
            DetectionResult full = map_to_original(res, input, n);
            const double roc = roc_auc(full.scores, truth);
            if (!have_best || roc > best.roc) {
                best = {eps, min_pts, roc, std::move(res)};
                have_best = true;
            }
        }
    }
    return best;
}

}  // namespace shrinkdet
