#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "shrinkdet/core.hpp"

namespace shrinkdet {

/// Quantization settings. Built either from a target SNR (tau searched,
/// epsilon_b = 2^tau) or from a user-supplied epsilon_b directly.
struct QuantConfig {
    std::optional<double> target_snr_db;  // eta, set only on the SNR-driven path
    int tau = 0;                          // origin quantization exponent, grid 2^tau
    double base_epsilon = 0.0;            // default Base error threshold epsilon_b

    bool snr_driven() const { return target_snr_db.has_value(); }
};

/// Floors v onto the grid of multiples of 2^tau (toward -inf), so the
/// error v - result always lies in [0, 2^tau).
inline double quantize_value(double v, int tau) {
    return std::ldexp(std::floor(std::ldexp(v, -tau)), tau);
}

/// 10*log10(sum v^2 / sum (v - q)^2); +inf when the noise sum is zero.
inline double snr_db(std::span<const double> original, std::span<const double> quantized) {
    if (original.size() != quantized.size())
        throw std::invalid_argument("snr_db: length mismatch");
    double signal = 0.0, noise = 0.0;
    for (size_t i = 0; i < original.size(); ++i) {
        signal += original[i] * original[i];
        const double d = original[i] - quantized[i];
        noise += d * d;
    }
    if (signal == 0.0)
        throw std::invalid_argument("snr_db: all-zero signal");
    if (noise == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / noise);
}

inline double snr_db(const TimeSeries& series, std::span<const double> quantized) {
    return snr_db(std::span<const double>(series.values()), quantized);
}

inline double measured_snr_at(const TimeSeries& series, int tau) {
    std::vector<double> q(series.size());
    for (size_t i = 0; i < series.size(); ++i)
        q[i] = quantize_value(series.values()[i], tau);
    return snr_db(series, q);
}

/// Analytic starting point for the tau search:
/// floor(0.5*log2(10^(-eta/10)/n * sum v^2)) + 1.
inline int initial_tau(const TimeSeries& series, double eta) {
    double signal = 0.0;
    for (double v : series.values()) signal += v * v;
    if (signal == 0.0)
        throw std::invalid_argument("initial_tau: all-zero series");
    const double arg = std::pow(10.0, -eta / 10.0) / static_cast<double>(series.size()) * signal;
    return static_cast<int>(std::floor(0.5 * std::log2(arg))) + 1;
}

inline constexpr int kTauSearchHalfWindow = 64;

/// Maximum tau within [tau0-64, tau0+64] whose measured SNR still meets eta.
/// Scans downward from the top of the window; the first passing tau is the
/// maximum one since every coarser tau has already been measured and failed.
inline int select_tau(const TimeSeries& series, double eta) {
    const int tau0 = initial_tau(series, eta);
    for (int tau = tau0 + kTauSearchHalfWindow; tau >= tau0 - kTauSearchHalfWindow; --tau) {
        if (measured_snr_at(series, tau) >= eta)
            return tau;
    }
    throw std::runtime_error("select_tau: no tau in the search window reaches the SNR target");
}

inline QuantConfig quant_from_snr(const TimeSeries& series, double eta) {
    QuantConfig cfg;
    cfg.target_snr_db = eta;
    cfg.tau = select_tau(series, eta);
    cfg.base_epsilon = std::ldexp(1.0, cfg.tau);
    return cfg;
}

inline QuantConfig quant_from_epsilon(double eps_b) {
    if (!(eps_b > 0.0) || !std::isfinite(eps_b))
        throw std::invalid_argument("quant_from_epsilon: epsilon_b must be positive");
    QuantConfig cfg;
    cfg.tau = std::ilogb(eps_b);  // 2^tau <= eps_b, keeps origin error under eps_b
    cfg.base_epsilon = eps_b;
    return cfg;
}

/// Per-interval adaptive Base threshold: epsilon_b * e^(2/3 - beta).
inline double adaptive_threshold(const QuantConfig& cfg, double beta) {
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("adaptive_threshold: beta outside [0,1]");
    return cfg.base_epsilon * std::exp(2.0 / 3.0 - beta);
}

}  // namespace shrinkdet
