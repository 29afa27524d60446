#pragma once

#include <span>

namespace cwripple::features {

/// Time-domain descriptors of one steady-state output cycle. Moments are
/// population moments of the AC component r = v - mean(v); kurtosis is
/// Pearson (non-excess); crest factor is max|r| / rms(r).
struct RippleFeatures {
    double v_dc = 0.0;
    double v_pp = 0.0;
    double v_rms = 0.0;
    double std_dev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double crest_factor = 0.0;
    bool degenerate = false;
};

inline constexpr std::size_t kMinSamples = 16;

/// Throws DomainError with fewer than kMinSamples samples, NonFiniteError on
/// NaN/inf input.
RippleFeatures extract_features(std::span<const double> samples);

}  // namespace cwripple::features
