"""Global tolerance record.

Every numerical threshold used by the package lives in :class:`Tolerances`.
The active record is held in a context variable, so overrides made with
:func:`tolerance_context` are local to the current thread / task.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass

__all__ = ["Tolerances", "get_tolerances", "tolerance_context", "DEFAULT_TOLERANCES"]


@dataclass(frozen=True)
class Tolerances:
    eig_cutoff: float = 1e-12
    state_norm: float = 1e-10
    density: float = 1e-10
    isometry: float = 1e-10
    trace_preserving: float = 1e-9
    unitary: float = 1e-9
    projector: float = 1e-9
    identity_check: float = 1e-9
    jordan: float = 1e-8
    decoder_output: float = 1e-8
    bound_slack: float = 1e-6
    degenerate_probability: float = 1e-14
    poly_grid: int = 2001
    phase_grid: int = 501
    phase_residual: float = 1e-7
    phase_residual_max: float = 1e-6
    degree_cap: int = 4096
    dim_cap: int = 2**16

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **overrides) -> "Tolerances":
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance field(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()

_ACTIVE: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "qsvt_decoders_tolerances", default=DEFAULT_TOLERANCES
)


def get_tolerances() -> Tolerances:
    return _ACTIVE.get()


@contextlib.contextmanager
def tolerance_context(tol: Tolerances | None = None, **overrides):
    """Temporarily replace the active tolerance record.

    >>> with tolerance_context(dim_cap=2**14):
    ...     get_tolerances().dim_cap
    16384
    """
    base = tol if tol is not None else get_tolerances()
    token = _ACTIVE.set(base.replace(**overrides) if overrides else base)
    try:
        yield _ACTIVE.get()
    finally:
        _ACTIVE.reset(token)
