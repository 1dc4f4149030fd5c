#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "shrinkdet/core.hpp"

namespace shrinkdet {

enum class SeriesFormat : uint8_t { plain, ucr_row, kdd_labeled };

namespace detail {

inline double parse_value(const std::string& token, size_t line_no) {
    size_t consumed = 0;
    double v;
    try {
        v = std::stod(token, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": '" +
                                 token + "'");
    }
    if (consumed != token.size())
        throw std::runtime_error("trailing garbage at line " + std::to_string(line_no) + ": '" +
                                 token + "'");
    if (!std::isfinite(v))
        throw std::runtime_error("non-finite value at line " + std::to_string(line_no));
    return v;
}

inline std::string trimmed(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

}  // namespace detail

/// plain: one value per line. ucr_row: comma-separated rows, leading class
/// token dropped, rows concatenated. kdd_labeled: value,label per line.
inline TimeSeries load_series(const std::string& path, SeriesFormat format,
                              const std::string& name = "") {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path);

    std::vector<double> values;
    std::vector<Label> labels;
    std::string line;
    size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        line = detail::trimmed(line);
        if (line.empty()) continue;
        switch (format) {
            case SeriesFormat::plain:
                values.push_back(detail::parse_value(line, line_no));
                break;
            case SeriesFormat::ucr_row: {
                std::stringstream row(line);
                std::string token;
                bool first = true;
                while (std::getline(row, token, ',')) {
                    if (first) {  // class token
                        first = false;
                        continue;
                    }
                    values.push_back(detail::parse_value(detail::trimmed(token), line_no));
                }
                break;
            }
            case SeriesFormat::kdd_labeled: {
                const auto comma = line.find(',');
                if (comma == std::string::npos)
                    throw std::runtime_error("expected value,label at line " +
                                             std::to_string(line_no));
                values.push_back(
                    detail::parse_value(detail::trimmed(line.substr(0, comma)), line_no));
                const std::string lab = detail::trimmed(line.substr(comma + 1));
                if (lab == "0")
                    labels.push_back(Label::normal);
                else if (lab == "1")
                    labels.push_back(Label::outlier);
                else
                    throw std::runtime_error("label must be 0 or 1 at line " +
                                             std::to_string(line_no));
                break;
            }
        }
    }
    if (format == SeriesFormat::kdd_labeled)
        return TimeSeries(std::move(values), std::move(labels), name);
    return TimeSeries(std::move(values), std::nullopt, name);
}

inline void save_plain(const TimeSeries& series, const std::string& path) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    file.precision(17);
    for (double v : series.values()) file << v << '\n';
}

inline void save_kdd_labeled(const TimeSeries& series, const std::string& path) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    file.precision(17);
    for (size_t i = 0; i < series.size(); ++i)
        file << series.values()[i] << ','
             << (series.has_labels() && series.labels()[i] == Label::outlier ? 1 : 0) << '\n';
}

enum class OutlierKind : uint8_t { point_spike, contextual_shift, sequence_pattern };

struct InjectionSpec {
    size_t count = 100;
    OutlierKind kind = OutlierKind::point_spike;
    double magnitude = 6.0;  // in units of the series standard deviation
    uint64_t seed = 1;
};

/// Plants labeled outliers at unique random indices. Pre-existing labels
/// are preserved. Deterministic for a fixed seed.
inline TimeSeries inject_outliers(const TimeSeries& series, const InjectionSpec& spec) {
    const size_t n = series.size();
    if (spec.count < 1) throw std::invalid_argument("inject_outliers: count must be >= 1");
    if (spec.count >= n / 10)
        throw std::invalid_argument("inject_outliers: count too large for series length");

    std::vector<double> v = series.values();
    std::vector<Label> labels(n, Label::normal);
    if (series.has_labels()) labels = series.labels();

    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    double sigma = std::sqrt(var / static_cast<double>(n));
    if (sigma == 0.0) sigma = std::max(global_range(series), 1.0);

    std::mt19937_64 rng(spec.seed);
    std::unordered_set<size_t> used;
    auto pick_free = [&](size_t span) {
        for (;;) {
            const size_t idx = rng() % (n - span + 1);
            bool clear = true;
            for (size_t k = 0; k < span && clear; ++k) clear = !used.count(idx + k);
            if (clear) return idx;
        }
    };
    auto local_mean = [&](size_t idx) {
        const size_t w = 12;
        const size_t lo = idx > w ? idx - w : 0;
        const size_t hi = std::min(idx + w + 1, n);
        double s = 0.0;
        for (size_t k = lo; k < hi; ++k) s += series.values()[k];
        return s / static_cast<double>(hi - lo);
    };

    size_t placed = 0;
    while (placed < spec.count) {
        switch (spec.kind) {
            case OutlierKind::point_spike: {
                const size_t idx = pick_free(1);
                const double sign = (rng() & 1) ? 1.0 : -1.0;
                v[idx] += sign * spec.magnitude * sigma;
                used.insert(idx);
                labels[idx] = Label::outlier;
                ++placed;
                break;
            }
            case OutlierKind::contextual_shift: {
                // offset against the local rolling mean, magnitude drawn from
                // [1/3, 1] of the nominal one so outliers spread in value space
                const size_t idx = pick_free(1);
                const double sign = (rng() & 1) ? 1.0 : -1.0;
                std::uniform_real_distribution<double> u(1.0 / 3.0, 1.0);
                v[idx] = local_mean(idx) + sign * u(rng) * spec.magnitude * sigma;
                used.insert(idx);
                labels[idx] = Label::outlier;
                ++placed;
                break;
            }
            case OutlierKind::sequence_pattern: {
                const size_t span = std::min<size_t>(16, spec.count - placed);
                const size_t idx = pick_free(span);
                const double center = local_mean(idx);
                std::uniform_real_distribution<double> u(1.0 / 3.0, 1.0);
                const double level = u(rng) * spec.magnitude * sigma;
                for (size_t k = 0; k < span; ++k) {
                    // high-frequency alternation alien to smooth signals
                    v[idx + k] = center + (k % 2 ? -1.0 : 1.0) * level;
                    used.insert(idx + k);
                    labels[idx + k] = Label::outlier;
                }
                placed += span;
                break;
            }
        }
    }
    return TimeSeries(std::move(v), std::move(labels), series.name());
}

struct SynthParams {
    double amplitude = 1.0;
    double period = 256.0;     // sine
    double noise_sigma = 0.0;  // gaussian noise added on top
    double step_sigma = 1.0;   // random walk increments
    std::vector<double> slopes = {1.0, -1.0};  // piecewise_linear
    size_t piece_length = 200;
};

enum class SynthKind : uint8_t { sine, random_walk, piecewise_linear };

inline TimeSeries synth(SynthKind kind, size_t n, const SynthParams& params = {},
                        uint64_t seed = 1, const std::string& name = "") {
    if (n < 16) throw std::invalid_argument("synth: n must be >= 16");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n);
    switch (kind) {
        case SynthKind::sine:
            for (size_t t = 0; t < n; ++t)
                v[t] = params.amplitude *
                       std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / params.period);
            break;
        case SynthKind::random_walk: {
            double x = 0.0;
            for (size_t t = 0; t < n; ++t) {
                x += params.step_sigma * gauss(rng);
                v[t] = x;
            }
            break;
        }
        case SynthKind::piecewise_linear: {
            double x = 0.0;
            for (size_t t = 0; t < n; ++t) {
                const size_t piece = (t / params.piece_length) % params.slopes.size();
                x += params.slopes[piece];
                v[t] = x;
            }
            break;
        }
    }
    if (params.noise_sigma > 0.0)
        for (double& x : v) x += params.noise_sigma * gauss(rng);
    return TimeSeries(std::move(v), std::nullopt, name);
}

}  // namespace shrinkdet
