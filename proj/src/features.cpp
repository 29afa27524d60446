#include "cwripple/features.hpp"

#include <algorithm>
#include <cmath>

#include "cwripple/errors.hpp"

namespace cwripple::features {

RippleFeatures extract_features(std::span<const double> samples) {
    if (samples.size() < kMinSamples) {
        throw DomainError("extract_features: need at least 16 samples");
    }
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    double lo = samples.front();
    double hi = samples.front();
    for (double v : samples) {
        if (!std::isfinite(v)) throw NonFiniteError("extract_features: non-finite sample");
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    RippleFeatures f;
    f.v_dc = sum / n;
    // Second pass removes most of the rounding left in the first mean.
    double drift = 0.0;
    for (double v : samples) drift += v - f.v_dc;
    f.v_dc += drift / n;
    f.v_pp = hi - lo;

    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    double peak = 0.0;
    for (double v : samples) {
        const double r = v - f.v_dc;
        const double r2 = r * r;
        m2 += r2;
        m3 += r2 * r;
        m4 += r2 * r2;
        peak = std::max(peak, std::abs(r));
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    f.v_rms = std::sqrt(m2);
    f.std_dev = f.v_rms;
    if (f.v_rms < 1e-12 * std::max(1.0, std::abs(f.v_dc))) {
        f.degenerate = true;
        return f;
    }
    f.skewness = m3 / (m2 * f.v_rms);
    f.kurtosis = m4 / (m2 * m2);
    f.crest_factor = peak / f.v_rms;
    return f;
}

}  // namespace cwripple::features
