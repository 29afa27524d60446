#pragma once

// Fixed-step transient simulation of a half-wave Cockcroft-Walton (Villard)
// cascade.
//
// Topology for N stages (node 0 is ground, S is the ideal AC source node):
//
//   diode k        : node k-1 (anode) -> node k (cathode), k = 1..2N
//   AC column caps : S->1, 1->3, 3->5, ..., (2N-3)->(2N-1)
//   DC column caps : 0->2, 2->4, ..., (2N-2)->2N
//   load           : 2N -> ground
//
// Each capacitor carries a series ESR; diodes are piecewise linear
// (Vf, Ron, Goff). Integration is backward Euler with Norton companions and
// the source node eliminated by substitution. Diode states are resolved per
// step by synchronous fixed-point sweeps warm-started from the previous step.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cwripple::circuit {

struct CaseParams {
    int n_stages = 2;
    double vin_peak = 5000.0;  // V
    double cap = 1e-6;         // F, all 2N capacitors
    double freq = 50.0;        // Hz
    double r_load = 6e6;       // Ohm
    double esr = 0.5;          // Ohm
    double diode_vf = 0.7;     // V
    double diode_ron = 10.0;   // Ohm
    double diode_goff = 1e-9;  // S

    /// Throws DomainError on any violated invariant.
    void validate() const;
};

struct SimConfig {
    int steps_per_cycle = 5000;
    int max_cycles = 2000;
    double settle_rel_tol = 1e-5;
    int settle_consecutive = 3;
    int max_diode_iters = 50;
    // Steady state is never declared before max(min_cycles, 4 N) cycles; the
    // output of a tall cascade sits near 0 V for the first ~N cycles and
    // would otherwise look settled.
    int min_cycles = 10;

    void validate() const;
};

inline constexpr int kGround = 0;
inline constexpr int kSourceNode = -1;

struct CapacitorBranch {
    int node_a = kGround;
    int node_b = kGround;
    double cap = 0.0;
    double esr = 0.0;
    double voltage = 0.0;  // stored capacitor voltage v_a - v_b, excluding ESR drop
};

struct DiodeBranch {
    int anode = kGround;
    int cathode = kGround;
    double vf = 0.0;
    double ron = 1.0;
    double goff = 0.0;
    bool on = false;
};

struct LoadBranch {
    int node = kGround;
    double r_load = 0.0;
};

/// Ideal grounded source, v(t) = amplitude * sin(2 pi freq t).
struct SineSource {
    double amplitude = 0.0;
    double freq = 0.0;
};

struct Netlist {
    int node_count = 0;  // non-ground, non-source nodes, numbered 1..node_count
    std::vector<CapacitorBranch> caps;
    std::vector<DiodeBranch> diodes;
    std::optional<LoadBranch> load;
    SineSource source;
    int output_node = 0;
};

Netlist build_netlist(const CaseParams& params);

/// Owns the mutable state of one netlist during a transient run.
class TransientSolver {
public:
    explicit TransientSolver(Netlist netlist, int max_diode_iters = 50);

    /// Advances one backward-Euler step ending at time t. Returns node
    /// voltages indexed by node number (index 0 is ground).
    std::span<const double> step(double t, double dt);

    /// Same as step() with the source value given directly.
    std::span<const double> step_with_source(double v_source, double dt);

    const Netlist& netlist() const noexcept { return netlist_; }
    std::span<const double> node_voltages() const noexcept { return v_; }

    /// Branch currents at the last accepted solution (anode -> cathode,
    /// node_a -> node_b, into the load).
    double diode_current(std::size_t k) const;
    double capacitor_current(std::size_t k) const;
    double load_current() const;

    bool last_step_converged() const noexcept { return last_converged_; }
    std::size_t warning_steps() const noexcept { return warning_steps_; }

private:
    struct Factorization {
        std::vector<double> lu;  // row-major n x n
        std::vector<int> perm;
    };

    const Factorization& factorization(std::uint64_t diode_mask);
    Factorization factor(std::uint64_t diode_mask) const;
    void solve(const Factorization& f, double v_source);
    double node_v(int node, double v_source) const noexcept;

    Netlist netlist_;
    int max_diode_iters_;
    int n_;
    double dt_ = 0.0;
    double v_source_ = 0.0;
    std::vector<double> cap_g_;
    std::vector<double> cap_i_;
    std::unordered_map<std::uint64_t, Factorization> cache_;
    std::vector<double> rhs_;
    std::vector<double> work_;
    std::vector<double> v_;  // size n + 1, v_[0] = 0
    bool last_converged_ = true;
    std::size_t warning_steps_ = 0;
};

struct CycleWaveform {
    std::vector<double> samples;  // output voltage over the final cycle
    double dt = 0.0;
    std::vector<double> v_dc_history;  // mean output per simulated cycle
    bool converged = false;
    int cycles_run = 0;
    std::size_t diode_warning_steps = 0;
};

CycleWaveform simulate(const CaseParams& params, const SimConfig& config);

/// Waveform CSV: header `t_s,v_out_v`, one row per sample of the cycle.
void write_waveform_csv(const CycleWaveform& waveform, std::ostream& out);
void write_waveform_csv(const CycleWaveform& waveform, const std::string& path);

/// Reads a waveform CSV back. dt is recovered from the time column.
/// Throws SchemaError on a malformed file.
CycleWaveform read_waveform_csv(std::istream& in);
CycleWaveform read_waveform_csv(const std::string& path);

}  // namespace cwripple::circuit
