#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cwripple/circuit.hpp"
#include "cwripple/cli.hpp"
#include "cwripple/dataset.hpp"
#include "cwripple/errors.hpp"
#include "cwripple/features.hpp"
#include "cwripple/forest.hpp"
#include "cwripple/hybrid.hpp"
#include "cwripple/theory.hpp"

namespace py = pybind11;
using namespace cwripple;

namespace {

std::string repr_params(const circuit::CaseParams& p) {
    std::ostringstream ss;
    ss << "CaseParams(n_stages=" << p.n_stages << ", vin_peak=" << p.vin_peak << ", cap=" << p.cap
       << ", freq=" << p.freq << ", r_load=" << p.r_load << ", esr=" << p.esr << ")";
    return ss.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cockcroft-Walton ripple simulation and residual-corrected estimation";

    auto base = py::register_exception<Error>(m, "CwrippleError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
    py::register_exception<SingularMatrixError>(m, "SingularMatrixError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    // theory
    m.def("ideal_output_voltage", &theory::ideal_output_voltage, py::arg("n_stages"), py::arg("vin_peak"));
    m.def(
        "theoretical_ripple_pp",
        [](int n, double vin, double freq, double cap, double i_load) {
            return theory::theoretical_ripple_pp({n, vin, freq, cap, i_load});
        },
        py::arg("n_stages"), py::arg("vin_peak"), py::arg("freq"), py::arg("cap"), py::arg("i_load"));
    m.def("ripple_factor", &theory::ripple_factor, py::arg("v_rms_ripple"), py::arg("v_dc"));
    m.def("load_current", &theory::load_current, py::arg("v_dc"), py::arg("r_load"));

    // circuit
    py::class_<circuit::CaseParams>(m, "CaseParams")
        .def(py::init<>())
        .def_readwrite("n_stages", &circuit::CaseParams::n_stages)
        .def_readwrite("vin_peak", &circuit::CaseParams::vin_peak)
        .def_readwrite("cap", &circuit::CaseParams::cap)
        .def_readwrite("freq", &circuit::CaseParams::freq)
        .def_readwrite("r_load", &circuit::CaseParams::r_load)
        .def_readwrite("esr", &circuit::CaseParams::esr)
        .def_readwrite("diode_vf", &circuit::CaseParams::diode_vf)
        .def_readwrite("diode_ron", &circuit::CaseParams::diode_ron)
        .def_readwrite("diode_goff", &circuit::CaseParams::diode_goff)
        .def("validate", &circuit::CaseParams::validate)
        .def("__repr__", &repr_params);

    py::class_<circuit::SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("steps_per_cycle", &circuit::SimConfig::steps_per_cycle)
        .def_readwrite("max_cycles", &circuit::SimConfig::max_cycles)
        .def_readwrite("settle_rel_tol", &circuit::SimConfig::settle_rel_tol)
        .def_readwrite("settle_consecutive", &circuit::SimConfig::settle_consecutive)
        .def_readwrite("max_diode_iters", &circuit::SimConfig::max_diode_iters)
        .def_readwrite("min_cycles", &circuit::SimConfig::min_cycles);

    py::class_<circuit::CycleWaveform>(m, "CycleWaveform")
        .def_readonly("samples", &circuit::CycleWaveform::samples)
        .def_readonly("dt", &circuit::CycleWaveform::dt)
        .def_readonly("v_dc_history", &circuit::CycleWaveform::v_dc_history)
        .def_readonly("converged", &circuit::CycleWaveform::converged)
        .def_readonly("cycles_run", &circuit::CycleWaveform::cycles_run);

    m.def("simulate", &circuit::simulate, py::arg("params"), py::arg("config") = circuit::SimConfig{},
          py::call_guard<py::gil_scoped_release>());

    // features
    py::class_<features::RippleFeatures>(m, "RippleFeatures")
        .def_readonly("v_dc", &features::RippleFeatures::v_dc)
        .def_readonly("v_pp", &features::RippleFeatures::v_pp)
        .def_readonly("v_rms", &features::RippleFeatures::v_rms)
        .def_readonly("std_dev", &features::RippleFeatures::std_dev)
        .def_readonly("skewness", &features::RippleFeatures::skewness)
        .def_readonly("kurtosis", &features::RippleFeatures::kurtosis)
        .def_readonly("crest_factor", &features::RippleFeatures::crest_factor)
        .def_readonly("degenerate", &features::RippleFeatures::degenerate);
    m.def(
        "extract_features", [](const std::vector<double>& samples) { return features::extract_features(samples); },
        py::arg("samples"));

    // dataset
    py::class_<dataset::SweepGrid>(m, "SweepGrid")
        .def(py::init<>())
        .def_readwrite("stages", &dataset::SweepGrid::stages)
        .def_readwrite("vin_kv", &dataset::SweepGrid::vin_kv)
        .def_readwrite("cap_uf", &dataset::SweepGrid::cap_uf)
        .def_readwrite("freq_hz", &dataset::SweepGrid::freq_hz)
        .def_readwrite("rload_mohm", &dataset::SweepGrid::rload_mohm)
        .def("size", &dataset::SweepGrid::size);

    py::class_<dataset::CaseRecord> rec(m, "CaseRecord");
    rec.def_readonly("case_id", &dataset::CaseRecord::case_id)
        .def_readonly("n_stages", &dataset::CaseRecord::n_stages)
        .def_readonly("converged", &dataset::CaseRecord::converged)
        .def("failed", &dataset::CaseRecord::failed);
    for (const auto& [name, field] : std::initializer_list<std::pair<const char*, double dataset::CaseRecord::*>>{
             {"vin_peak_v", &dataset::CaseRecord::vin_peak_v},
             {"cap_f", &dataset::CaseRecord::cap_f},
             {"freq_hz", &dataset::CaseRecord::freq_hz},
             {"rload_ohm", &dataset::CaseRecord::rload_ohm},
             {"vdc_v", &dataset::CaseRecord::vdc_v},
             {"vpp_sim_v", &dataset::CaseRecord::vpp_sim_v},
             {"vrms_sim_v", &dataset::CaseRecord::vrms_sim_v},
             {"std_v", &dataset::CaseRecord::std_v},
             {"skewness", &dataset::CaseRecord::skewness},
             {"kurtosis", &dataset::CaseRecord::kurtosis},
             {"crest_factor", &dataset::CaseRecord::crest_factor},
             {"i_load_a", &dataset::CaseRecord::i_load_a},
             {"vpp_theory_v", &dataset::CaseRecord::vpp_theory_v},
             {"ripple_factor_theory", &dataset::CaseRecord::ripple_factor_theory},
             {"ripple_factor_sim", &dataset::CaseRecord::ripple_factor_sim},
             {"residual_v", &dataset::CaseRecord::residual_v}}) {
        rec.def_readonly(name, field);
    }

    m.def(
        "run_sweep",
        [](const dataset::SweepGrid& grid, const circuit::SimConfig& config, const circuit::CaseParams& base,
           unsigned workers) {
            dataset::SweepOptions opts;
            opts.workers = workers;
            return dataset::run_sweep(grid, config, base, opts).records;
        },
        py::arg("grid") = dataset::SweepGrid{}, py::arg("config") = circuit::SimConfig{},
        py::arg("base") = circuit::CaseParams{}, py::arg("workers") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("read_csv", py::overload_cast<const std::string&>(&dataset::read_csv), py::arg("path"));
    m.def(
        "write_csv",
        [](const std::vector<dataset::CaseRecord>& records, const std::string& path) {
            dataset::write_csv(records, path);
        },
        py::arg("records"), py::arg("path"));
    m.def(
        "split",
        [](const std::vector<dataset::CaseRecord>& records, double frac, std::uint64_t seed) {
            return dataset::split(records, frac, seed);
        },
        py::arg("records"), py::arg("train_frac") = 0.8, py::arg("seed") = 7);

    // forest
    py::class_<forest::ForestModel>(m, "ForestModel")
        .def_readonly("feature_names", &forest::ForestModel::feature_names)
        .def_readonly("importances", &forest::ForestModel::importances)
        .def_readonly("feature_mode", &forest::ForestModel::feature_mode)
        .def_property_readonly("n_trees", [](const forest::ForestModel& f) { return f.trees.size(); })
        .def_property_readonly("hyperparams", [](const forest::ForestModel& f) { return f.hyperparams.label(); })
        .def("to_json", [](const forest::ForestModel& f) { return forest::to_json(f); })
        .def("save", [](const forest::ForestModel& f, const std::string& path) { forest::save_model(f, path); });
    m.def("load_model", &forest::load_model, py::arg("path"));

    // hybrid
    py::class_<hybrid::MetricSet>(m, "MetricSet")
        .def_readonly("rmse", &hybrid::MetricSet::rmse)
        .def_readonly("mae", &hybrid::MetricSet::mae)
        .def_readonly("bias", &hybrid::MetricSet::bias)
        .def_readonly("r2", &hybrid::MetricSet::r2)
        .def_readonly("n_cases", &hybrid::MetricSet::n_cases);
    m.def(
        "metrics",
        [](const std::vector<double>& p, const std::vector<double>& t) { return hybrid::metrics(p, t); },
        py::arg("predictions"), py::arg("targets"));
    m.def(
        "corrected_prediction",
        [](double theory_vpp, double residual) { return hybrid::corrected_prediction(theory_vpp, residual); },
        py::arg("theory_vpp"), py::arg("predicted_residual"));
    m.def(
        "predict_residuals",
        [](const forest::ForestModel& model, const std::vector<dataset::CaseRecord>& records) {
            return hybrid::predict_residuals(model, records);
        },
        py::arg("model"), py::arg("records"));

    py::class_<hybrid::RegimeRow>(m, "RegimeRow")
        .def_readonly("name", &hybrid::RegimeRow::name)
        .def_readonly("theory", &hybrid::RegimeRow::theory)
        .def_readonly("corrected", &hybrid::RegimeRow::corrected)
        .def_readonly("rmse_reduction_pct", &hybrid::RegimeRow::rmse_reduction_pct);
    py::class_<hybrid::RegimeReport>(m, "RegimeReport")
        .def_readonly("label", &hybrid::RegimeReport::label)
        .def_readonly("rows", &hybrid::RegimeReport::rows)
        .def("row", &hybrid::RegimeReport::row, py::return_value_policy::reference_internal)
        .def("to_text", &hybrid::RegimeReport::to_text)
        .def("to_csv", &hybrid::RegimeReport::to_csv);

    py::class_<hybrid::PipelineResult>(m, "PipelineResult")
        .def_readonly("model", &hybrid::PipelineResult::model)
        .def_readonly("test_report", &hybrid::PipelineResult::test_report)
        .def_readonly("full_report", &hybrid::PipelineResult::full_report)
        .def_property_readonly("n_train", [](const hybrid::PipelineResult& r) { return r.train.size(); })
        .def_property_readonly("n_test", [](const hybrid::PipelineResult& r) { return r.test.size(); })
        .def("to_text", &hybrid::PipelineResult::to_text);

    m.def(
        "train_pipeline",
        [](const std::vector<dataset::CaseRecord>& records, std::uint64_t split_seed, std::uint64_t cv_seed,
           std::uint64_t forest_seed, std::size_t folds, bool params_only,
           std::optional<std::vector<std::size_t>> n_trees, unsigned workers) {
            hybrid::PipelineOptions o;
            o.split_seed = split_seed;
            o.cv_seed = cv_seed;
            o.forest_seed = forest_seed;
            o.folds = folds;
            o.mode = params_only ? dataset::FeatureMode::ParamsOnly : dataset::FeatureMode::Full;
            o.workers = workers;
            if (n_trees) {
                for (auto t : *n_trees) {
                    forest::ForestHyperparams hp;
                    hp.n_trees = t;
                    hp.seed = forest_seed;
                    o.grid.push_back(hp);
                }
            }
            return hybrid::train_pipeline(records, o);
        },
        py::arg("records"), py::arg("split_seed") = 7, py::arg("cv_seed") = 11,
        py::arg("forest_seed") = forest::kDefaultSeed, py::arg("folds") = 5, py::arg("params_only") = false,
        py::arg("n_trees") = py::none(), py::arg("workers") = 1, py::call_guard<py::gil_scoped_release>(),
        "Split, grid-search CV, refit and evaluate. n_trees, when given, replaces the default search grid "
        "with one candidate per tree count (other hyperparameters at their defaults).");

    // cli
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a cwripple subcommand in-process; returns (exit_code, stdout, stderr).");
}
