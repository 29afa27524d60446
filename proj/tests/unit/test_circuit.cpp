#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cwripple/circuit.hpp"
#include "cwripple/errors.hpp"

using namespace cwripple;
using namespace cwripple::circuit;

namespace {

CaseParams ideal_no_load(int n) {
    CaseParams p;
    p.n_stages = n;
    p.vin_peak = 1000.0;
    p.cap = 1e-6;
    p.freq = 50.0;
    p.r_load = 1e12;
    p.esr = 1e-6;
    p.diode_vf = 0.0;
    p.diode_ron = 1.0;
    p.diode_goff = 1e-12;
    return p;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double peak_to_peak(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace

TEST_CASE("netlist topology") {
    for (int n : {1, 2, 8}) {
        CaseParams p;
        p.n_stages = n;
        const auto net = build_netlist(p);
        CHECK(net.node_count == 2 * n);
        CHECK(net.caps.size() == static_cast<std::size_t>(2 * n));
        CHECK(net.diodes.size() == static_cast<std::size_t>(2 * n));
        REQUIRE(net.load.has_value());
        CHECK(net.load->node == 2 * n);
        CHECK(net.output_node == 2 * n);
        for (int k = 1; k <= 2 * n; ++k) {
            const auto& d = net.diodes[static_cast<std::size_t>(k - 1)];
            CHECK(d.anode == k - 1);
            CHECK(d.cathode == k);
            CHECK_FALSE(d.on);
        }
        int ac = 0;
        int dc = 0;
        for (const auto& c : net.caps) {
            CHECK(c.voltage == 0.0);
            CHECK(c.esr == p.esr);
            if (c.node_b % 2 == 1) {
                CHECK(c.node_a == (c.node_b == 1 ? kSourceNode : c.node_b - 2));
                ++ac;
            } else {
                CHECK(c.node_a == c.node_b - 2);
                ++dc;
            }
        }
        CHECK(ac == n);
        CHECK(dc == n);
    }
}

TEST_CASE("parameter validation") {
    CaseParams p;
    p.n_stages = 0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.n_stages = 33;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.esr = -1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.diode_ron = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    SimConfig c;
    c.steps_per_cycle = 100;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("quiescent network stays at zero") {
    TransientSolver solver(build_netlist(CaseParams{}));
    const auto v = solver.step_with_source(0.0, 1e-5);
    for (double x : v) CHECK(std::abs(x) < 1e-9);
    for (std::size_t k = 0; k < solver.netlist().diodes.size(); ++k) CHECK_FALSE(solver.netlist().diodes[k].on);
}

TEST_CASE("single RC branch discharges exponentially") {
    Netlist net;
    net.node_count = 1;
    net.output_node = 1;
    CapacitorBranch c;
    c.node_a = 1;
    c.node_b = kGround;
    c.cap = 1e-6;
    c.esr = 0.0;
    c.voltage = 1.0;
    net.caps.push_back(c);
    net.load = LoadBranch{1, 1e6};  // tau = 1 s
    net.source = {0.0, 1.0};

    // 5000 steps per 1 Hz cycle over one time constant.
    const double dt = 1.0 / 5000.0;
    TransientSolver solver(net);
    double v = 0.0;
    for (int k = 0; k < 5000; ++k) v = solver.step_with_source(0.0, dt)[1];
    CHECK(std::abs(v - std::exp(-1.0)) / std::exp(-1.0) < 0.005);
}

TEST_CASE("ideal no-load output approaches 2 N Vin") {
    // A cold N = 8 cascade needs several hundred cycles to charge.
    SimConfig cfg;
    cfg.steps_per_cycle = 2000;
    for (int n : {1, 2, 4, 8}) {
        const auto wf = simulate(ideal_no_load(n), cfg);
        const double target = 2.0 * n * 1000.0;
        INFO("N = " << n << ", V_dc = " << mean(wf.samples));
        CHECK(wf.converged);
        CHECK(std::abs(mean(wf.samples) - target) / target < 0.01);
    }
}

TEST_CASE("N = 1 ideal case after 50 cycles") {
    const auto p = ideal_no_load(1);
    TransientSolver solver(build_netlist(p));
    const int steps = 5000;
    const double dt = 1.0 / (p.freq * steps);
    double sum = 0.0;
    for (int cycle = 0; cycle < 50; ++cycle) {
        sum = 0.0;
        for (int k = 1; k <= steps; ++k) {
            sum += solver.step_with_source(p.vin_peak * std::sin(2.0 * std::numbers::pi * k / steps), dt)[2];
        }
    }
    CHECK(std::abs(sum / steps - 2000.0) / 2000.0 < 0.01);
}

TEST_CASE("loaded case sits below the ideal output and ripples") {
    CaseParams p;
    p.n_stages = 2;
    p.vin_peak = 5000.0;
    p.cap = 10e-6;
    p.freq = 500.0;
    p.r_load = 60e6;
    const auto wf = simulate(p, SimConfig{});
    CHECK(wf.converged);
    CHECK(mean(wf.samples) < 2.0 * 2 * 5000.0);
    CHECK(peak_to_peak(wf.samples) > 0.0);
    CHECK(wf.samples.size() == 5000);
    CHECK(wf.dt == Catch::Approx(1.0 / (500.0 * 5000)).epsilon(1e-15));
    CHECK(wf.cycles_run <= SimConfig{}.max_cycles);
    CHECK(static_cast<int>(wf.v_dc_history.size()) == wf.cycles_run);
}

TEST_CASE("grid refinement changes ripple by under 1%") {
    CaseParams p;
    p.n_stages = 4;
    p.vin_peak = 15000.0;
    p.cap = 5e-6;
    p.freq = 100.0;
    p.r_load = 12e6;
    SimConfig coarse;
    SimConfig fine;
    fine.steps_per_cycle = 2 * coarse.steps_per_cycle;
    const double a = peak_to_peak(simulate(p, coarse).samples);
    const double b = peak_to_peak(simulate(p, fine).samples);
    INFO("V_pp " << a << " vs " << b);
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("steady-state charge balance at the output") {
    CaseParams p;
    p.n_stages = 2;
    p.vin_peak = 5000.0;
    p.cap = 5e-6;
    p.freq = 100.0;
    p.r_load = 6e6;
    SimConfig cfg;
    cfg.steps_per_cycle = 2000;
    const auto settled = simulate(p, cfg);
    REQUIRE(settled.converged);

    TransientSolver solver(build_netlist(p));
    const int steps = cfg.steps_per_cycle;
    const double dt = 1.0 / (p.freq * steps);
    const std::size_t top = static_cast<std::size_t>(2 * p.n_stages - 1);
    double q_load = 0.0;
    double q_diode = 0.0;
    for (int cycle = 0; cycle <= settled.cycles_run; ++cycle) {
        q_load = 0.0;
        q_diode = 0.0;
        for (int k = 1; k <= steps; ++k) {
            solver.step_with_source(p.vin_peak * std::sin(2.0 * std::numbers::pi * k / steps), dt);
            q_load += solver.load_current() * dt;
            q_diode += solver.diode_current(top) * dt;
        }
    }
    INFO("load charge " << q_load << ", top diode charge " << q_diode);
    CHECK(std::abs(q_diode - q_load) / q_load < 0.02);
}

TEST_CASE("non-convergence is reported, not thrown") {
    CaseParams p;
    p.n_stages = 8;
    p.cap = 10e-6;
    p.r_load = 60e6;
    SimConfig cfg;
    cfg.steps_per_cycle = 256;
    cfg.max_cycles = 3;
    const auto wf = simulate(p, cfg);
    CHECK_FALSE(wf.converged);
    CHECK(wf.cycles_run == 3);
    CHECK(wf.samples.size() == 256);
}

TEST_CASE("waveform CSV round trip") {
    CaseParams p;
    SimConfig cfg;
    cfg.steps_per_cycle = 256;
    cfg.max_cycles = 5;
    const auto wf = simulate(p, cfg);
    std::stringstream ss;
    write_waveform_csv(wf, ss);
    const auto back = read_waveform_csv(ss);
    CHECK(back.samples == wf.samples);
    CHECK(back.dt == Catch::Approx(wf.dt).epsilon(1e-12));

    std::stringstream bad_header("time,v\n0,1\n");
    CHECK_THROWS_AS(read_waveform_csv(bad_header), SchemaError);
    std::stringstream bad_value("t_s,v_out_v\n0.1,abc\n");
    CHECK_THROWS_AS(read_waveform_csv(bad_value), SchemaError);
    std::stringstream empty("t_s,v_out_v\n");
    CHECK_THROWS_AS(read_waveform_csv(empty), SchemaError);
}

TEST_CASE("simulation is deterministic") {
    CaseParams p;
    p.n_stages = 4;
    SimConfig cfg;
    cfg.steps_per_cycle = 500;
    const auto a = simulate(p, cfg);
    const auto b = simulate(p, cfg);
    CHECK(a.samples == b.samples);
    CHECK(a.cycles_run == b.cycles_run);
}
