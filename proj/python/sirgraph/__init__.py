"""Network topology inference from SIR epidemic trajectories."""

from ._core import (
    NumericalError,
    Topology,
    ValidationError,
    __version__,
    coordinate_update,
    evaluate,
    fit,
    fit_lr,
    generate,
    gradient,
    hessian,
    load_topology,
    load_trajectory,
    neg_loglik,
    roc,
    save_topology,
    save_trajectory,
    simulate,
    soft_threshold,
    surrogate_alpha,
    tpr_at_fpr,
)

__all__ = [
    "NumericalError",
    "Topology",
    "ValidationError",
    "__version__",
    "coordinate_update",
    "evaluate",
    "fit",
    "fit_lr",
    "generate",
    "gradient",
    "hessian",
    "load_topology",
    "load_trajectory",
    "neg_loglik",
    "roc",
    "save_topology",
    "save_trajectory",
    "simulate",
    "soft_threshold",
    "surrogate_alpha",
    "tpr_at_fpr",
]
