#include "cwripple/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "cwripple/errors.hpp"

namespace cwripple::circuit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

constexpr std::size_t kMaxCachedFactorizations = 4096;

}  // namespace

void CaseParams::validate() const {
    require(n_stages >= 1 && n_stages <= 32, "CaseParams: n_stages must be in [1, 32]");
    require(cap > 0.0, "CaseParams: cap must be > 0");
    require(freq > 0.0, "CaseParams: freq must be > 0");
    require(r_load > 0.0, "CaseParams: r_load must be > 0");
    require(vin_peak > 0.0, "CaseParams: vin_peak must be > 0");
    require(esr >= 0.0, "CaseParams: esr must be >= 0");
    require(diode_ron > 0.0, "CaseParams: diode_ron must be > 0");
    require(diode_goff > 0.0, "CaseParams: diode_goff must be > 0");
    require(diode_vf >= 0.0, "CaseParams: diode_vf must be >= 0");
}

void SimConfig::validate() const {
    require(steps_per_cycle >= 256, "SimConfig: steps_per_cycle must be >= 256");
    require(max_cycles >= 2, "SimConfig: max_cycles must be >= 2");
    require(settle_rel_tol > 0.0, "SimConfig: settle_rel_tol must be > 0");
    require(settle_consecutive >= 1, "SimConfig: settle_consecutive must be >= 1");
    require(max_diode_iters >= 1, "SimConfig: max_diode_iters must be >= 1");
    require(min_cycles >= 0, "SimConfig: min_cycles must be >= 0");
}

Netlist build_netlist(const CaseParams& params) {
    params.validate();
    const int n = params.n_stages;
    Netlist net;
    net.node_count = 2 * n;
    net.output_node = 2 * n;
    net.source = SineSource{params.vin_peak, params.freq};
    net.load = LoadBranch{2 * n, params.r_load};

    // AC column on odd nodes, driven from the source node.
    net.caps.push_back({kSourceNode, 1, params.cap, params.esr, 0.0});
    for (int k = 1; k + 2 <= 2 * n - 1; k += 2) {
        net.caps.push_back({k, k + 2, params.cap, params.esr, 0.0});
    }
    // DC column on even nodes, stacked from ground.
    net.caps.push_back({kGround, 2, params.cap, params.esr, 0.0});
    for (int k = 2; k + 2 <= 2 * n; k += 2) {
        net.caps.push_back({k, k + 2, params.cap, params.esr, 0.0});
    }
    for (int k = 1; k <= 2 * n; ++k) {
        net.diodes.push_back(
            {k - 1, k, params.diode_vf, params.diode_ron, params.diode_goff, false});
    }
    return net;
}

// ---------------------------------------------------------------------------
// TransientSolver
// ---------------------------------------------------------------------------

TransientSolver::TransientSolver(Netlist netlist, int max_diode_iters)
    : netlist_(std::move(netlist)), max_diode_iters_(max_diode_iters), n_(netlist_.node_count) {
    if (n_ < 1) throw DomainError("TransientSolver: netlist has no nodes");
    if (max_diode_iters_ < 1) throw DomainError("TransientSolver: max_diode_iters must be >= 1");
    if (netlist_.diodes.size() > 64) throw DomainError("TransientSolver: at most 64 diodes");
    auto valid_node = [this](int node) { return node == kSourceNode || (node >= 0 && node <= n_); };
    for (const auto& c : netlist_.caps) {
        if (!valid_node(c.node_a) || !valid_node(c.node_b) || c.node_a == c.node_b)
            throw DomainError("TransientSolver: capacitor branch has invalid nodes");
        if (!(c.cap > 0.0) || !(c.esr >= 0.0))
            throw DomainError("TransientSolver: capacitor needs cap > 0 and esr >= 0");
    }
    for (const auto& d : netlist_.diodes) {
        if (!valid_node(d.anode) || !valid_node(d.cathode) || d.anode == d.cathode)
            throw DomainError("TransientSolver: diode branch has invalid nodes");
        if (!(d.ron > 0.0) || !(d.goff > 0.0) || !(d.vf >= 0.0))
            throw DomainError("TransientSolver: diode needs ron > 0, goff > 0, vf >= 0");
    }
    if (netlist_.load) {
        if (netlist_.load->node < 1 || netlist_.load->node > n_ || !(netlist_.load->r_load > 0.0))
            throw DomainError("TransientSolver: invalid load branch");
    }
    cap_g_.resize(netlist_.caps.size());
    cap_i_.assign(netlist_.caps.size(), 0.0);
    rhs_.resize(static_cast<std::size_t>(n_));
    work_.resize(static_cast<std::size_t>(n_));
    v_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
}

TransientSolver::Factorization TransientSolver::factor(std::uint64_t diode_mask) const {
    const auto n = static_cast<std::size_t>(n_);
    Factorization f;
    f.lu.assign(n * n, 0.0);
    f.perm.resize(n);
    auto& a = f.lu;

    auto stamp = [&](int p, int q, double g) {
        // Source node contributes only to the right-hand side.
        const bool pi = p > 0;
        const bool qi = q > 0;
        if (pi) a[(p - 1) * n + (p - 1)] += g;
        if (qi) a[(q - 1) * n + (q - 1)] += g;
        if (pi && qi) {
            a[(p - 1) * n + (q - 1)] -= g;
            a[(q - 1) * n + (p - 1)] -= g;
        }
    };
    for (std::size_t k = 0; k < netlist_.caps.size(); ++k) {
        stamp(netlist_.caps[k].node_a, netlist_.caps[k].node_b, cap_g_[k]);
    }
    for (std::size_t k = 0; k < netlist_.diodes.size(); ++k) {
        const auto& d = netlist_.diodes[k];
        const bool on = (diode_mask >> k) & 1U;
        stamp(d.anode, d.cathode, on ? 1.0 / d.ron : d.goff);
    }
    if (netlist_.load) stamp(netlist_.load->node, kGround, 1.0 / netlist_.load->r_load);

    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));

    // Gaussian elimination with partial pivoting; L and U stored in place.
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(a[r * n + col]);
            if (mag > best) {
                best = mag;
                pivot = r;
            }
        }
        if (!(best > 1e-18 * scale) || !std::isfinite(best)) {
            throw SingularMatrixError("TransientSolver: singular conductance matrix (malformed netlist)");
        }
        f.perm[col] = static_cast<int>(pivot);
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double& lead = a[r * n + col];
            if (lead == 0.0) continue;
            lead *= inv;
            const double m = lead;
            for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= m * a[col * n + c];
        }
    }
    return f;
}

const TransientSolver::Factorization& TransientSolver::factorization(std::uint64_t diode_mask) {
    auto it = cache_.find(diode_mask);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= kMaxCachedFactorizations) cache_.clear();
    return cache_.emplace(diode_mask, factor(diode_mask)).first->second;
}

double TransientSolver::node_v(int node, double v_source) const noexcept {
    if (node == kSourceNode) return v_source;
    return v_[static_cast<std::size_t>(node)];
}

void TransientSolver::solve(const Factorization& f, double v_source) {
    const auto n = static_cast<std::size_t>(n_);
    auto& b = work_;
    std::copy(rhs_.begin(), rhs_.end(), b.begin());

    // Diode contributions depend on the trial state and are added per sweep.
    for (const auto& d : netlist_.diodes) {
        const double g = d.on ? 1.0 / d.ron : d.goff;
        const double i_src = d.on ? d.vf / d.ron : 0.0;
        if (d.anode > 0) b[d.anode - 1] += i_src;
        if (d.cathode > 0) b[d.cathode - 1] -= i_src;
        if (d.anode == kSourceNode && d.cathode > 0) b[d.cathode - 1] += g * v_source;
        if (d.cathode == kSourceNode && d.anode > 0) b[d.anode - 1] += g * v_source;
    }

    const auto& a = f.lu;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(f.perm[i]);
        if (p != i) std::swap(b[i], b[p]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= a[i * n + j] * b[j];
        b[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
        b[i] = s / a[i * n + i];
    }
    v_[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) v_[i + 1] = b[i];
}

std::span<const double> TransientSolver::step(double t, double dt) {
    const double v_source = netlist_.source.amplitude *
                            std::sin(2.0 * std::numbers::pi * netlist_.source.freq * t);
    return step_with_source(v_source, dt);
}

std::span<const double> TransientSolver::step_with_source(double v_source, double dt) {
    if (!(dt > 0.0)) throw DomainError("TransientSolver::step: dt must be > 0");
    if (dt != dt_) {
        dt_ = dt;
        for (std::size_t k = 0; k < netlist_.caps.size(); ++k) {
            const auto& c = netlist_.caps[k];
            cap_g_[k] = 1.0 / (c.esr + dt / c.cap);
        }
        cache_.clear();
    }
    v_source_ = v_source;

    // Capacitor companions: i = g (v_a - v_b - v_c_prev).
    std::fill(rhs_.begin(), rhs_.end(), 0.0);
    for (std::size_t k = 0; k < netlist_.caps.size(); ++k) {
        const auto& c = netlist_.caps[k];
        const double g = cap_g_[k];
        const double i_hist = g * c.voltage;
        if (c.node_a > 0) rhs_[c.node_a - 1] += i_hist;
        if (c.node_b > 0) rhs_[c.node_b - 1] -= i_hist;
        if (c.node_a == kSourceNode && c.node_b > 0) rhs_[c.node_b - 1] += g * v_source;
        if (c.node_b == kSourceNode && c.node_a > 0) rhs_[c.node_a - 1] += g * v_source;
    }

    auto& diodes = netlist_.diodes;
    bool consistent = false;
    for (int sweep = 0; sweep < max_diode_iters_; ++sweep) {
        std::uint64_t mask = 0;
        for (std::size_t k = 0; k < diodes.size(); ++k) {
            if (diodes[k].on) mask |= std::uint64_t{1} << k;
        }
        solve(factorization(mask), v_source);

        // ON needs forward current (v_ak >= Vf); OFF needs v_ak < Vf.
        consistent = true;
        for (const auto& d : diodes) {
            const double v_ak = node_v(d.anode, v_source) - node_v(d.cathode, v_source);
            if ((v_ak >= d.vf) != d.on) {
                consistent = false;
                break;
            }
        }
        if (consistent || sweep + 1 == max_diode_iters_) break;
        for (auto& d : diodes) {
            const double v_ak = node_v(d.anode, v_source) - node_v(d.cathode, v_source);
            d.on = v_ak >= d.vf;
        }
    }
    last_converged_ = consistent;
    if (!consistent) ++warning_steps_;

    for (std::size_t k = 0; k < netlist_.caps.size(); ++k) {
        auto& c = netlist_.caps[k];
        const double v_ab = node_v(c.node_a, v_source) - node_v(c.node_b, v_source);
        const double i = cap_g_[k] * (v_ab - c.voltage);
        cap_i_[k] = i;
        c.voltage += dt / c.cap * i;
    }
    return v_;
}

double TransientSolver::diode_current(std::size_t k) const {
    const auto& d = netlist_.diodes.at(k);
    const double v_ak = node_v(d.anode, v_source_) - node_v(d.cathode, v_source_);
    return d.on ? (v_ak - d.vf) / d.ron : d.goff * v_ak;
}

double TransientSolver::capacitor_current(std::size_t k) const { return cap_i_.at(k); }

double TransientSolver::load_current() const {
    if (!netlist_.load) return 0.0;
    return v_[static_cast<std::size_t>(netlist_.load->node)] / netlist_.load->r_load;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

CycleWaveform simulate(const CaseParams& params, const SimConfig& config) {
    params.validate();
    config.validate();

    TransientSolver solver(build_netlist(params), config.max_diode_iters);
    const auto steps = static_cast<std::size_t>(config.steps_per_cycle);
    const double dt = 1.0 / (params.freq * config.steps_per_cycle);
    const auto out = static_cast<std::size_t>(2 * params.n_stages);

    // One period of the source, sampled at step ends so every cycle sees the
    // exact same excitation.
    std::vector<double> drive(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(k + 1) /
                             static_cast<double>(steps);
        drive[k] = params.vin_peak * std::sin(phase);
    }

    const int min_cycles = std::max(config.min_cycles, 4 * params.n_stages);
    CycleWaveform wf;
    wf.dt = dt;
    wf.samples.resize(steps);
    int stable_run = 0;
    for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
        double sum = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double v_out = solver.step_with_source(drive[k], dt)[out];
            wf.samples[k] = v_out;
            sum += v_out;
        }
        const double mean = sum / static_cast<double>(steps);
        if (!wf.v_dc_history.empty()) {
            const double prev = wf.v_dc_history.back();
            const double rel = std::abs(mean - prev) / std::max(std::abs(mean), 1.0);
            stable_run = rel < config.settle_rel_tol ? stable_run + 1 : 0;
        }
        wf.v_dc_history.push_back(mean);
        wf.cycles_run = cycle;
        if (stable_run >= config.settle_consecutive && cycle >= min_cycles) {
            wf.converged = true;
            break;
        }
    }
    wf.diode_warning_steps = solver.warning_steps();
    return wf;
}

// ---------------------------------------------------------------------------
// Waveform CSV
// ---------------------------------------------------------------------------

void write_waveform_csv(const CycleWaveform& waveform, std::ostream& out) {
    out << "t_s,v_out_v\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < waveform.samples.size(); ++k) {
        out << static_cast<double>(k + 1) * waveform.dt << ',' << waveform.samples[k] << '\n';
    }
}

void write_waveform_csv(const CycleWaveform& waveform, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open waveform file for writing: " + path);
    write_waveform_csv(waveform, out);
    if (!out) throw IoError("failed writing waveform file: " + path);
}

CycleWaveform read_waveform_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("waveform CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_s,v_out_v") {
        throw SchemaError("waveform CSV: expected header 't_s,v_out_v', got '" + line + "'");
    }
    std::vector<double> times;
    CycleWaveform wf;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw SchemaError("waveform CSV: row " + std::to_string(row) + " must have 2 columns");
        }
        char* end = nullptr;
        const std::string t_str = line.substr(0, comma);
        const std::string v_str = line.substr(comma + 1);
        const double t = std::strtod(t_str.c_str(), &end);
        if (end == t_str.c_str() || *end != '\0' || !std::isfinite(t)) {
            throw SchemaError("waveform CSV: bad time value on row " + std::to_string(row));
        }
        const double v = std::strtod(v_str.c_str(), &end);
        if (end == v_str.c_str() || *end != '\0' || !std::isfinite(v)) {
            throw SchemaError("waveform CSV: bad voltage value on row " + std::to_string(row));
        }
        times.push_back(t);
        wf.samples.push_back(v);
    }
    if (times.size() < 2) throw SchemaError("waveform CSV: need at least 2 samples");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw SchemaError("waveform CSV: time column must increase");
    }
    wf.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    wf.converged = true;
    wf.cycles_run = 1;
    return wf;
}

CycleWaveform read_waveform_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open waveform file: " + path);
    return read_waveform_csv(in);
}

}  // namespace cwripple::circuit
