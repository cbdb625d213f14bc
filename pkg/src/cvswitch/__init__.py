"""Continuous-variable teleportation switch: exact quadrature algebra, Monte-Carlo oracle, circuit DSL."""

from .algebra import (
    Basis,
    BasisId,
    ModeExpr,
    NoiseModel,
    QuadExpr,
    add_scaled,
    beamsplit,
    commutation_coefficient,
    commutator,
    covariance,
    two_mode_squeeze,
    variance,
)
from .protocol import (
    Bob,
    SwitchNetwork,
    SwitchParams,
    SwitchReport,
    build_switch,
    epr_witness,
    fidelity,
    output_variances,
    report,
    route,
)

__version__ = "0.1.0"
