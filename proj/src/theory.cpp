#include "cwripple/theory.hpp"

#include <cmath>
#include <string>

#include "cwripple/errors.hpp"

namespace cwripple::theory {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

}  // namespace

double ideal_output_voltage(int n_stages, double vin_peak) {
    require(n_stages >= 1, "ideal_output_voltage: n_stages must be >= 1");
    require(vin_peak > 0.0, "ideal_output_voltage: vin_peak must be > 0");
    return 2.0 * n_stages * vin_peak;
}

double theoretical_ripple_pp(const TheoryInputs& in) {
    require(in.n_stages >= 1, "theoretical_ripple_pp: n_stages must be >= 1");
    require(in.vin_peak > 0.0, "theoretical_ripple_pp: vin_peak must be > 0");
    require(in.freq > 0.0 && in.cap > 0.0, "theoretical_ripple_pp: freq and cap must be > 0");
    require(in.i_load >= 0.0, "theoretical_ripple_pp: i_load must be >= 0");
    const double fc = in.freq * in.cap;
    require(fc > 0.0, "theoretical_ripple_pp: f*C underflows to zero");
    const double n = in.n_stages;
    return (in.i_load / fc) * (n * (n + 1.0) / 2.0);
}

double ripple_factor(double v_rms_ripple, double v_dc) {
    require(v_rms_ripple >= 0.0, "ripple_factor: v_rms_ripple must be >= 0");
    if (!(std::abs(v_dc) >= 1e-9)) {
        throw DegenerateInputError("ripple_factor: |v_dc| below 1e-9 V");
    }
    return v_rms_ripple / std::abs(v_dc);
}

double sawtooth_rms_from_pp(double v_pp) {
    require(v_pp >= 0.0, "sawtooth_rms_from_pp: v_pp must be >= 0");
    return v_pp / (2.0 * std::sqrt(3.0));
}

double load_current(double v_dc, double r_load) {
    require(r_load > 0.0, "load_current: r_load must be > 0");
    return v_dc / r_load;
}

}  // namespace cwripple::theory
