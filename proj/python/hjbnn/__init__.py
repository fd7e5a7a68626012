"""Feed-forward network training with HJB-derived weight-update laws."""

from ._core import (
    HjbnnError,
    basin,
    build_c,
    dataset,
    finite_difference_jacobian,
    forward,
    init_weights,
    jacobian,
    lyapunov_rate,
    run_experiment,
    step_bp,
    step_hjb,
    step_hjb_single,
    step_lf,
    step_lm,
    sym_eig,
    train,
    weight_count,
)

__all__ = [
    "HjbnnError",
    "basin",
    "build_c",
    "dataset",
    "finite_difference_jacobian",
    "forward",
    "init_weights",
    "jacobian",
    "lyapunov_rate",
    "run_experiment",
    "step_bp",
    "step_hjb",
    "step_hjb_single",
    "step_lf",
    "step_lm",
    "sym_eig",
    "train",
    "weight_count",
]
