"""Infinite-time admissibility numerics for diagonal semigroup systems."""

__version__ = "0.1.0"

from .spectral_core import (  # noqa: E402
    BetaProfile,
    DiagonalSystem,
    TruncatedSystem,
    classify_control,
    is_in_I1,
    make_diagonal,
    make_example1,
    make_example2,
    perturbation_between,
    truncate,
)
from .mild_solution import InputSignal, Piece, make_un_signal, mode_integral, phi_state  # noqa: E402
from .criterion import criterion_sum, m_bound, probe_example2, sup_search  # noqa: E402
from .feedback import assemble_feedback, evolve, feedback_phi, resolvent_apply  # noqa: E402

__all__ = [
    "BetaProfile",
    "DiagonalSystem",
    "InputSignal",
    "Piece",
    "TruncatedSystem",
    "assemble_feedback",
    "classify_control",
    "criterion_sum",
    "evolve",
    "feedback_phi",
    "is_in_I1",
    "m_bound",
    "make_diagonal",
    "make_example1",
    "make_example2",
    "make_un_signal",
    "mode_integral",
    "perturbation_between",
    "phi_state",
    "probe_example2",
    "resolvent_apply",
    "sup_search",
    "truncate",
]
