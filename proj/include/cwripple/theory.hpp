#pragma once

// Closed-form half-wave Cockcroft-Walton relations. All quantities are SI
// (V, A, Hz, F, Ohm).

namespace cwripple::theory {

struct TheoryInputs {
    int n_stages = 1;
    double vin_peak = 0.0;  // peak AC amplitude, V
    double freq = 0.0;      // Hz
    double cap = 0.0;       // F, identical for every stage capacitor
    double i_load = 0.0;    // A
};

/// Ideal no-load output, 2 * N * V_in.
double ideal_output_voltage(int n_stages, double vin_peak);

/// Peak-to-peak output ripple of an N-stage cascade with identical
/// capacitors: I_L / (f C) * N (N + 1) / 2.
double theoretical_ripple_pp(const TheoryInputs& in);

/// RMS ripple / |V_dc|. Throws DegenerateInputError when |V_dc| < 1e-9 V.
double ripple_factor(double v_rms_ripple, double v_dc);

/// RMS of a sawtooth with the given peak-to-peak amplitude, V_pp / (2 sqrt 3).
/// Used to turn the peak-to-peak theory value into a ripple factor.
double sawtooth_rms_from_pp(double v_pp);

/// Ohm's law, V_dc / R_load.
double load_current(double v_dc, double r_load);

}  // namespace cwripple::theory
