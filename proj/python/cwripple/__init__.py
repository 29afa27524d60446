"""Cockcroft-Walton ripple simulation with a random-forest residual corrector."""

from ._core import (
    CaseParams,
    CaseRecord,
    CwrippleError,
    CycleWaveform,
    DegenerateInputError,
    DomainError,
    ForestModel,
    IoError,
    MetricSet,
    NonFiniteError,
    PipelineResult,
    RegimeReport,
    RegimeRow,
    RippleFeatures,
    SchemaError,
    SimConfig,
    SingularMatrixError,
    SweepGrid,
    corrected_prediction,
    extract_features,
    ideal_output_voltage,
    load_current,
    load_model,
    metrics,
    predict_residuals,
    read_csv,
    ripple_factor,
    run_cli,
    run_sweep,
    simulate,
    split,
    theoretical_ripple_pp,
    train_pipeline,
    write_csv,
)

__version__ = "0.1.0"


def main(argv=None):
    """Console entry point mirroring the ``cwripple`` executable."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
